#pragma once

#include "qlfr/backend.hpp"
#include "qlfr/classify.hpp"
#include "qlfr/corpus.hpp"
#include "qlfr/templates.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qlfr {

enum class ChainKind { sse, da };

/// SSE-CoT ablations. Backend calls per example: 4 / 3 / 2 / 1.
enum class ChainVariant { full, no_rewrite, no_retrieval, no_both };

std::string to_string(ChainKind k);
std::string to_string(ChainVariant v);
ChainKind parse_chain_kind(std::string_view s);
ChainVariant parse_chain_variant(std::string_view s);
int call_count(ChainVariant v);

struct ChainStep {
    int step_index = 0;  // 1-based
    std::string template_id;
    std::string context;
    std::string instruction;
    std::string prompt;  // exactly what was sent, including any few-shot prefix
    std::string output;
};

struct ChainTrace {
    std::string example_id;
    ChainKind kind = ChainKind::sse;
    ChainVariant variant = ChainVariant::full;
    bool classified = false;  // false for rationale-only SSE runs and DA-CoT
    std::vector<ChainStep> steps;
    std::optional<Prediction> prediction;
    std::optional<std::string> error;  // set when a step failed; steps holds the completed prefix
    int error_step = 0;
    bool refused = false;

    std::optional<std::string> final_label() const;
    /// Output of the step rendered from `template_id`, if it ran.
    const ChainStep* step(std::string_view template_id) const;
};

/// Domain cue words for DA-CoT step 1 and step 2.
struct CueProfile {
    std::string domain_name;
    std::string identification_cue;
    std::string synthesis_cue;

    static CueProfile news();
    void validate() const;
};

/// {domain: {"identification_cue": str, "synthesis_cue": str}}
std::map<std::string, CueProfile> load_cue_profiles(const std::filesystem::path& path);

struct RenderedStep {
    std::string context;
    std::string instruction;
    std::string prompt;
};

/// context = parts joined with ". "; instruction = the registered template
/// text with `vars` filled in; prompt = context + template join + instruction.
RenderedStep render_step(std::string_view template_id, const std::vector<std::string>& context_parts,
                         const TemplateRegistry& registry = TemplateRegistry::builtin(),
                         const TemplateRegistry::Vars& vars = {});

struct SseOptions {
    PredictStrategy strategy = PredictStrategy::parse_text;
    PromptStyle style = PromptStyle::qlfr_step4;
    const TemplateRegistry* registry = nullptr;  // null: builtin
    std::string fewshot_prefix;                  // prepended to every prompt
    bool classify = true;                        // false: stop after the reasoning steps
};

/// Runs one SSE-CoT chain. Backend failures do not throw; the partial trace
/// comes back with `error` set. An empty example text throws DataError
/// before any backend call.
ChainTrace run_sse_cot(const Example& example, const LabelSet& labels, ChainVariant variant,
                       CompletionClient& client, const SseOptions& options = {});

/// Two-step DA-CoT. Same error contract as run_sse_cot.
ChainTrace run_da_cot(const Example& example, const CueProfile& cues, CompletionClient& client,
                      const TemplateRegistry& registry = TemplateRegistry::builtin());

struct FewShotStep {
    std::string context;
    std::string instruction;
    std::string output;
};

/// Manually authored worked chain for one category.
struct FewShotExemplar {
    std::string text;
    std::string gold;
    std::vector<FewShotStep> steps;
};

enum class FewShotMode { zero_shot, one_shot };
FewShotMode parse_fewshot_mode(std::string_view s);
std::string to_string(FewShotMode m);

/// [{"text", "gold", "steps": [{"context", "instruction", "output"}]}]
std::vector<FewShotExemplar> load_fewshot_exemplars(const std::filesystem::path& path);

/// zero_shot: empty. one_shot: one worked chain per label, in LabelSet order.
std::string build_fewshot_context(const std::vector<FewShotExemplar>& exemplars, const LabelSet& labels,
                                  FewShotMode mode);

std::string trace_to_json(const ChainTrace& trace);
ChainTrace trace_from_json(std::string_view line);

}  // namespace qlfr
