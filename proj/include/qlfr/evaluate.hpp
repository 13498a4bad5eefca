#pragma once

#include "qlfr/classify.hpp"
#include "qlfr/corpus.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qlfr {

struct ClassScores {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Metrics for one run.
///
/// `confusion[g][p]` counts gold class g predicted as p. Predictions with no
/// label are counted in `unparsed[g]` instead, so
/// sum(confusion) + sum(unparsed) == n.
struct EvalReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassScores> per_class;
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<std::size_t> unparsed;
    std::size_t n = 0;
    /// Classes with zero support and zero predictions; they enter the macro mean as f1 = 0.
    std::vector<std::string> zero_support_classes;
    std::string run_config_hash;
    std::string config_json;  // resolved config, canonical JSON
    std::string created_at;
};

/// Fraction of predictions whose label is present and equal to gold.
/// Throws DataError unless preds and golds have the same non-zero length
/// and the same id set.
double accuracy(const std::vector<Prediction>& preds, const std::vector<Example>& golds);

/// Unweighted mean of per-class F1 over every class in `labels`.
double macro_f1(const std::vector<Prediction>& preds, const std::vector<Example>& golds, const LabelSet& labels);

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<Example>& golds, const LabelSet& labels);

std::string report_to_json(const EvalReport& report, const LabelSet& labels);

/// Two-column ACC / F1 table in percent, plus the per-class breakdown.
std::string render_report_table(const EvalReport& report, const std::string& title);

/// {example_id, label, method, raw_output} per line.
void write_predictions_jsonl(const std::filesystem::path& path, const std::vector<Prediction>& preds);

/// Reads predictions JSONL. Labels outside `labels` become absent and are
/// flagged "label_outside_set"; labels are canonicalized otherwise.
std::vector<Prediction> read_predictions_jsonl(const std::filesystem::path& path, const LabelSet& labels);

}  // namespace qlfr
