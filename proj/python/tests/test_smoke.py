import os
import pathlib

import pytest

import qlfr

ROOT = pathlib.Path(__file__).resolve().parents[2]
FIXTURES = pathlib.Path(os.environ.get("QLFR_FIXTURE_DIR", ROOT / "tests" / "fixtures"))
NEWS = ["health", "sport", "entertainment", "business", "sci_tech", "U.S.", "world"]


def test_corpus_and_splits():
    corpus = qlfr.load_corpus(FIXTURES / "news7" / "manifest.json")
    assert len(corpus["examples"]) == 42
    assert corpus["labels"] == NEWS
    splits = qlfr.sample_splits(FIXTURES / "news7" / "manifest.json", 4, 13)
    assert len(splits["train"]) == 14 and len(splits["test"]) == 14
    again = qlfr.sample_splits(FIXTURES / "news7" / "manifest.json", 4, 13)
    assert splits == again


def test_prompts_and_labels():
    assert qlfr.inject_labels("a masterpiece", ["positive", "negative"]) == "positive negative a masterpiece"
    bare = qlfr.build_classification_prompt("wal-mart buys social media firm kosmix", NEWS, "bare")
    assert bare == "Categorize this text: 'wal-mart buys social media firm kosmix'."
    assert qlfr.extract_label("The category is sport.", NEWS) == "sport"
    assert qlfr.extract_label("I cannot classify this.", NEWS) is None


def test_metrics_worked_example():
    gold = ["A", "A", "B", "C"]
    pred = ["A", "B", "B", "C"]
    assert qlfr.accuracy(gold, pred) == pytest.approx(0.75)
    assert qlfr.macro_f1(gold, pred, ["A", "B", "C"]) == pytest.approx(7 / 9)
    assert qlfr.accuracy(["A", "B"], ["A", None]) == pytest.approx(0.5)


def test_tennis_chain():
    trace = qlfr.run_sse_cot("Del Potro says make French Open", NEWS, FIXTURES / "tennis" / "rules.jsonl")
    assert trace["label"] == "sport"
    assert len(trace["steps"]) == 4
    assert trace["calls"] == 4
    assert [qlfr.call_count(v) for v in ("full", "no_rewrite", "no_retrieval", "no_both")] == [4, 3, 2, 1]


def test_errors_surface_as_python_exceptions(tmp_path):
    with pytest.raises(qlfr.DataError):
        qlfr.inject_labels("", ["a"])
    with pytest.raises(ValueError):
        qlfr.build_classification_prompt("x", NEWS, "shouty")


def test_cli_round_trip(tmp_path):
    cfg = tmp_path / "qlfr.toml"
    cfg.write_text(
        f'[experiment]\nper_class = 4\nbackend = "mock"\n'
        f'[datasets.tagmynews]\nmanifest = "{FIXTURES / "news7" / "manifest.json"}"\n'
        f'[backends.mock]\nkind = "mock"\nrules = "{FIXTURES / "news7" / "rules.jsonl"}"\n'
    )
    code, out, err = qlfr.cli(["run", "-c", str(cfg), "-d", "tagmynews", "-o", str(tmp_path / "run")])
    assert code == 0, err
    assert "ACC 100.00" in out
    code, out, err = qlfr.cli(["rationales", "-c", str(cfg), "-d", "tagmynews"])
    assert code == 0, err
    code, out, err = qlfr.cli(["export", "-c", str(cfg), "-d", "tagmynews", "--no-da"])
    assert code == 0, err
    rows = qlfr.read_multitask(tmp_path / "runs" / "tagmynews" / "multitask-no_da.jsonl")
    assert len(rows) == 28
    assert {r["task"] for r in rows} == {"label", "sse"}
    code, _, err = qlfr.cli(["bogus"])
    assert code != 0 and "unknown subcommand" in err
