#pragma once

#include "qlfr/backend.hpp"
#include "qlfr/corpus.hpp"
#include "qlfr/templates.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qlfr {

/// Label-name prefix followed by the original text.
struct AugmentedText {
    std::string original;
    LabelSet label_set;
    std::string rendered;
};

/// Concatenates every label name (LabelSet order) and then the text.
AugmentedText inject_labels(std::string_view text, const LabelSet& labels, std::string_view separator = " ");

enum class PromptStyle { qlfr_step4, bare, verbose };
PromptStyle parse_prompt_style(std::string_view s);
std::string to_string(PromptStyle s);

/// "'a'", "'a' and 'b'", "'a', 'b' and 'c'" (quoted) or the same unquoted.
std::string enumerate_labels(const LabelSet& labels, bool quoted);

struct RenderedPrompt {
    std::string context;
    std::string instruction;
    std::string prompt;
};

RenderedPrompt classification_prompt_parts(std::string_view content, const LabelSet& labels, PromptStyle style,
                                           const TemplateRegistry& registry = TemplateRegistry::builtin());

std::string build_classification_prompt(std::string_view content, const LabelSet& labels, PromptStyle style,
                                        const TemplateRegistry& registry = TemplateRegistry::builtin());

enum class PredictMethod { parsed, scored };
std::string to_string(PredictMethod m);
PredictMethod parse_predict_method(std::string_view s);

struct Prediction {
    std::string example_id;
    std::optional<std::string> label;  // canonical LabelSet name
    PredictMethod method = PredictMethod::parsed;
    std::string raw_output;
    std::optional<double> confidence;
    /// "unparsed", "scoring_unsupported_fallback", "refused", "backend_error"
    std::vector<std::string> flags;

    bool flagged(std::string_view f) const;
};

/// Free-text to label. Case-insensitive, whole-token occurrences only.
/// Longer label names are tried first; within one length tier the earliest
/// occurrence wins. Never throws; no match yields an absent label flagged
/// "unparsed".
Prediction extract_label(std::string_view raw, const LabelSet& labels);

enum class PredictStrategy { scored_argmax, parse_text };
PredictStrategy parse_predict_strategy(std::string_view s);
std::string to_string(PredictStrategy s);

/// Index of the maximum score; exact ties go to the lowest index.
std::size_t argmax_first(const std::vector<double>& scores);

/// scored_argmax: score every label against the prompt and take the argmax.
/// parse_text: complete the prompt and run extract_label on the output.
/// A backend without scoring falls back to parse_text and flags it.
Prediction predict(std::string_view content, const LabelSet& labels, CompletionClient& client,
                   PredictStrategy strategy, PromptStyle style = PromptStyle::qlfr_step4,
                   const TemplateRegistry& registry = TemplateRegistry::builtin(), std::string_view prompt_prefix = {});

/// Same as predict() but with an already rendered prompt.
Prediction predict_prompt(const std::string& prompt, const LabelSet& labels, CompletionClient& client,
                          PredictStrategy strategy);

}  // namespace qlfr
