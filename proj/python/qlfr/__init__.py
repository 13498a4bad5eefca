"""Python access to the qlfr toolkit's C++ core."""

from ._qlfr import (
    TEMPLATE_VERSION,
    BackendError,
    ConfigError,
    DataError,
    accuracy,
    build_classification_prompt,
    call_count,
    cli,
    extract_label,
    inject_labels,
    load_corpus,
    macro_f1,
    read_multitask,
    run_sse_cot,
    sample_splits,
)

__all__ = [
    "TEMPLATE_VERSION",
    "BackendError",
    "ConfigError",
    "DataError",
    "accuracy",
    "build_classification_prompt",
    "call_count",
    "cli",
    "extract_label",
    "inject_labels",
    "load_corpus",
    "macro_f1",
    "read_multitask",
    "run_sse_cot",
    "sample_splits",
]
