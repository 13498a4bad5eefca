#pragma once

#include "qlfr/backend.hpp"
#include "qlfr/chains.hpp"
#include "qlfr/classify.hpp"
#include "qlfr/corpus.hpp"
#include "qlfr/evaluate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qlfr {

enum class MethodKind { qlfr, direct, cml_eval };
std::string to_string(MethodKind m);
MethodKind parse_method_kind(std::string_view s);

/// Everything that determines a run's outputs. Serializes to canonical JSON
/// whose SHA-256 is the run_config_hash.
struct ExperimentConfig {
    std::string dataset;
    std::uint64_t seed = 0;
    int per_class = 40;
    MethodKind method = MethodKind::qlfr;
    ChainVariant variant = ChainVariant::full;  // method = qlfr
    PromptStyle style = PromptStyle::qlfr_step4;
    PredictStrategy strategy = PredictStrategy::parse_text;
    std::string backend;
    std::string model;
    FewShotMode incontext = FewShotMode::zero_shot;
    double train_ratio = 1.0;
    std::size_t limit = 0;                  // first N test examples; 0 = all
    std::filesystem::path predictions_path;  // method = cml_eval
    std::string template_version;

    std::string to_json() const;
    std::string hash() const;
};

struct ExperimentOptions {
    std::filesystem::path output_dir;  // empty: nothing persisted
    std::size_t concurrency = 1;
    double max_failure_fraction = 0.10;
    const TemplateRegistry* registry = nullptr;
    std::vector<FewShotExemplar> exemplars;  // required for one_shot
};

struct ExperimentResult {
    EvalReport report;
    Splits splits;
    std::vector<Prediction> predictions;
    std::vector<ChainTrace> traces;  // method = qlfr
    std::size_t failures = 0;
};

/// Splits the corpus, runs the configured method over the test split and
/// scores it. With an output directory, writes predictions.jsonl,
/// traces.jsonl (qlfr), report.json and report.txt there.
/// Throws FailureThresholdError (after writing outputs) when more than
/// max_failure_fraction of the examples hit backend errors.
ExperimentResult run_experiment(const ExperimentConfig& config, const Corpus& corpus, CompletionClient* client,
                                const ExperimentOptions& options = {});

/// Splits for a config: sample_splits then optional subsample_train.
Splits derive_splits(const ExperimentConfig& config, const Corpus& corpus);

}  // namespace qlfr
