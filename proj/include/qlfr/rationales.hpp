#pragma once

#include "qlfr/backend.hpp"
#include "qlfr/chains.hpp"
#include "qlfr/corpus.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qlfr {

struct RationaleRecord {
    std::string example_id;
    std::string text;
    std::string gold;
    std::optional<std::string> sse_rationale;  // SSE-CoT step 3 output
    std::optional<std::string> da_rationale;   // DA-CoT step 2 output
    std::string backend_id;
    std::string model_id;

    friend bool operator==(const RationaleRecord&, const RationaleRecord&) = default;
};

struct RationaleFlags {
    bool sse = true;
    bool da = true;
};

struct RationaleFailure {
    std::string example_id;
    std::string reason;
};

struct RationaleRun {
    std::vector<RationaleRecord> records;  // input order, failed examples omitted
    std::vector<RationaleFailure> failures;
};

struct RationaleOptions {
    std::size_t concurrency = 1;
    double max_failure_fraction = 0.10;
    const TemplateRegistry* registry = nullptr;
};

/// Runs SSE-CoT steps 1-3 and/or DA-CoT steps 1-2 per example. Examples whose
/// chains fail are skipped and reported; FailureThresholdError is thrown
/// when more than `max_failure_fraction` of the examples fail.
RationaleRun generate_rationales(const std::vector<Example>& train, const CueProfile& cues, CompletionClient& client,
                                 RationaleFlags flags, const RationaleOptions& options = {});

void write_rationales_jsonl(const std::filesystem::path& path, const std::vector<RationaleRecord>& records);
std::vector<RationaleRecord> read_rationales_jsonl(const std::filesystem::path& path);

enum class TaskKind { label, sse, da };
std::string to_string(TaskKind t);
TaskKind parse_task_kind(std::string_view s);

struct MultiTaskRecord {
    std::string input;
    std::string target;
    TaskKind task = TaskKind::label;

    friend bool operator==(const MultiTaskRecord&, const MultiTaskRecord&) = default;
};

struct ExportFlags {
    bool ecca = true;
    bool sse = true;
    bool da = true;
};

struct ExportManifest {
    std::string dataset;
    std::string split_hash;
    std::map<std::string, std::size_t> counts;  // per task name
    std::size_t total = 0;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    ExportFlags flags;
    std::vector<std::string> labels;
    std::string ecca_separator = " ";

    std::string to_json() const;
    static ExportManifest from_json(std::string_view text);
};

struct ExportOptions {
    std::string dataset;
    std::string split_hash;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::string ecca_separator = " ";
};

/// Builds label / sse / da training triples. Label inputs are ECCA-rendered
/// when flags.ecca, raw text otherwise. Throws DataError when an enabled task
/// lacks its rationale or a gold label is outside `labels`.
std::pair<std::vector<MultiTaskRecord>, ExportManifest> export_multitask(const std::vector<RationaleRecord>& records,
                                                                         const LabelSet& labels, ExportFlags flags,
                                                                         const ExportOptions& options);

/// Writes `<stem>.jsonl` and `<stem>.manifest.json`; returns both paths.
std::pair<std::filesystem::path, std::filesystem::path> write_export(const std::filesystem::path& jsonl_path,
                                                                     const std::vector<MultiTaskRecord>& records,
                                                                     const ExportManifest& manifest);

std::vector<MultiTaskRecord> read_multitask_jsonl(const std::filesystem::path& path);

}  // namespace qlfr
