#include "qlfr/classify.hpp"

#include "qlfr/error.hpp"
#include "qlfr/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace qlfr {

AugmentedText inject_labels(std::string_view text, const LabelSet& labels, std::string_view separator) {
    if (text::trim(text).empty()) throw DataError("inject_labels: empty text");
    if (labels.empty()) throw DataError("inject_labels: empty label set");
    AugmentedText out{std::string(text), labels, {}};
    for (const auto& l : labels) {
        out.rendered += l.name();
        out.rendered += separator;
    }
    out.rendered += text;
    return out;
}

PromptStyle parse_prompt_style(std::string_view s) {
    if (s == "qlfr_step4") return PromptStyle::qlfr_step4;
    if (s == "bare") return PromptStyle::bare;
    if (s == "verbose") return PromptStyle::verbose;
    throw ConfigError("unknown prompt style '" + std::string(s) + "'");
}

std::string to_string(PromptStyle s) {
    switch (s) {
        case PromptStyle::qlfr_step4: return "qlfr_step4";
        case PromptStyle::bare: return "bare";
        case PromptStyle::verbose: return "verbose";
    }
    return "qlfr_step4";
}

std::string enumerate_labels(const LabelSet& labels, bool quoted) {
    std::string out;
    const auto n = labels.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += (i + 1 == n) ? " and " : ", ";
        if (quoted) out += '\'';
        out += labels[i].name();
        if (quoted) out += '\'';
    }
    return out;
}

RenderedPrompt classification_prompt_parts(std::string_view content, const LabelSet& labels, PromptStyle style,
                                           const TemplateRegistry& registry) {
    if (labels.empty()) throw DataError("classification prompt needs at least one label");
    namespace id = template_ids;
    TemplateRegistry::Vars vars{{"content", std::string(content)},
                                {"labels_quoted", enumerate_labels(labels, true)},
                                {"labels_plain", enumerate_labels(labels, false)}};
    RenderedPrompt p;
    switch (style) {
        case PromptStyle::qlfr_step4: {
            p.context = registry.render(id::classify_context, vars);
            p.instruction = registry.render(id::classify_step4, vars);
            p.prompt = text::join_with(p.context, registry.get(id::classify_step4).join, p.instruction);
            break;
        }
        case PromptStyle::bare:
            p.prompt = p.context = registry.render(id::classify_bare, vars);
            break;
        case PromptStyle::verbose:
            p.prompt = p.context = registry.render(id::classify_verbose, vars);
            break;
    }
    return p;
}

std::string build_classification_prompt(std::string_view content, const LabelSet& labels, PromptStyle style,
                                        const TemplateRegistry& registry) {
    return classification_prompt_parts(content, labels, style, registry).prompt;
}

std::string to_string(PredictMethod m) {
    return m == PredictMethod::scored ? "scored" : "parsed";
}

PredictMethod parse_predict_method(std::string_view s) {
    if (s == "scored") return PredictMethod::scored;
    if (s == "parsed") return PredictMethod::parsed;
    throw DataError("unknown prediction method '" + std::string(s) + "'");
}

bool Prediction::flagged(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

namespace {

bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
}

/// First position of `needle` in `hay` not glued to a word character on
/// either side. Both arguments are already case-folded.
std::optional<std::size_t> find_token(std::string_view hay, std::string_view needle) {
    std::size_t from = 0;
    while (true) {
        auto pos = hay.find(needle, from);
        if (pos == std::string_view::npos) return std::nullopt;
        bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
        auto end = pos + needle.size();
        bool right_ok = end == hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
        if (left_ok && right_ok) return pos;
        from = pos + 1;
    }
}

}  // namespace

Prediction extract_label(std::string_view raw, const LabelSet& labels) {
    Prediction p;
    p.method = PredictMethod::parsed;
    p.raw_output = std::string(raw);
    const auto hay = text::casefold(raw);

    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a].key().size() > labels[b].key().size(); });

    std::size_t i = 0;
    while (i < order.size()) {
        const auto tier_len = labels[order[i]].key().size();
        std::optional<std::size_t> best_pos;
        std::size_t best_label = 0;
        for (; i < order.size() && labels[order[i]].key().size() == tier_len; ++i) {
            auto pos = find_token(hay, labels[order[i]].key());
            if (pos && (!best_pos || *pos < *best_pos)) {
                best_pos = pos;
                best_label = order[i];
            }
        }
        if (best_pos) {
            p.label = labels[best_label].name();
            return p;
        }
    }
    p.flags.emplace_back("unparsed");
    return p;
}

PredictStrategy parse_predict_strategy(std::string_view s) {
    if (s == "scored_argmax") return PredictStrategy::scored_argmax;
    if (s == "parse_text") return PredictStrategy::parse_text;
    throw ConfigError("unknown prediction strategy '" + std::string(s) + "'");
}

std::string to_string(PredictStrategy s) {
    return s == PredictStrategy::scored_argmax ? "scored_argmax" : "parse_text";
}

std::size_t argmax_first(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

Prediction predict_prompt(const std::string& prompt, const LabelSet& labels, CompletionClient& client,
                          PredictStrategy strategy) {
    if (labels.empty()) throw DataError("predict: empty label set");
    bool fell_back = false;
    if (strategy == PredictStrategy::scored_argmax) {
        if (client.supports_scoring()) {
            auto scores = client.score_candidates({client.model(), prompt, labels.names()});
            std::vector<double> values;
            values.reserve(scores.size());
            for (const auto& s : scores) values.push_back(s.score);
            const auto best = argmax_first(values);

            // Softmax of the winner, treating scores as log-probabilities.
            double denom = 0.0;
            for (double v : values) denom += std::exp(v - values[best]);

            Prediction p;
            p.method = PredictMethod::scored;
            p.label = labels[best].name();
            p.raw_output = labels[best].name();
            p.confidence = 1.0 / denom;
            return p;
        }
        fell_back = true;
    }
    CompletionRequest req;
    req.model_id = client.model();
    req.prompt = prompt;
    req.max_tokens = client.decoding().classification_max_tokens;
    req.temperature = client.decoding().temperature;
    auto resp = client.complete(req);
    auto p = extract_label(resp.text, labels);
    if (fell_back) p.flags.emplace_back("scoring_unsupported_fallback");
    return p;
}

Prediction predict(std::string_view content, const LabelSet& labels, CompletionClient& client,
                   PredictStrategy strategy, PromptStyle style, const TemplateRegistry& registry,
                   std::string_view prompt_prefix) {
    auto prompt = std::string(prompt_prefix) + build_classification_prompt(content, labels, style, registry);
    return predict_prompt(prompt, labels, client, strategy);
}

}  // namespace qlfr
