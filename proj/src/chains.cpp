#include "qlfr/chains.hpp"

#include "qlfr/error.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <fstream>

namespace qlfr {

using nlohmann::json;

std::string to_string(ChainKind k) {
    return k == ChainKind::da ? "da" : "sse";
}

std::string to_string(ChainVariant v) {
    switch (v) {
        case ChainVariant::full: return "full";
        case ChainVariant::no_rewrite: return "no_rewrite";
        case ChainVariant::no_retrieval: return "no_retrieval";
        case ChainVariant::no_both: return "no_both";
    }
    return "full";
}

ChainKind parse_chain_kind(std::string_view s) {
    if (s == "sse") return ChainKind::sse;
    if (s == "da") return ChainKind::da;
    throw DataError("unknown chain kind '" + std::string(s) + "'");
}

ChainVariant parse_chain_variant(std::string_view s) {
    if (s == "full") return ChainVariant::full;
    if (s == "no_rewrite") return ChainVariant::no_rewrite;
    if (s == "no_retrieval") return ChainVariant::no_retrieval;
    if (s == "no_both") return ChainVariant::no_both;
    throw ConfigError("unknown chain variant '" + std::string(s) + "'");
}

int call_count(ChainVariant v) {
    switch (v) {
        case ChainVariant::full: return 4;
        case ChainVariant::no_rewrite: return 3;
        case ChainVariant::no_retrieval: return 2;
        case ChainVariant::no_both: return 1;
    }
    return 0;
}

std::optional<std::string> ChainTrace::final_label() const {
    if (!prediction) return std::nullopt;
    return prediction->label;
}

const ChainStep* ChainTrace::step(std::string_view template_id) const {
    for (const auto& s : steps) {
        if (s.template_id == template_id) return &s;
    }
    return nullptr;
}

CueProfile CueProfile::news() {
    return {"news", "the main entities, actions, and events described",
            "including their interrelations and the overall significance within the context of the text"};
}

void CueProfile::validate() const {
    if (text::trim(identification_cue).empty() || text::trim(synthesis_cue).empty()) {
        throw ConfigError("cue profile '" + domain_name + "' has an empty cue");
    }
}

std::map<std::string, CueProfile> load_cue_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open cue profile file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    std::map<std::string, CueProfile> out;
    for (const auto& [domain, v] : j.items()) {
        CueProfile p;
        p.domain_name = domain;
        try {
            p.identification_cue = v.at("identification_cue").get<std::string>();
            p.synthesis_cue = v.at("synthesis_cue").get<std::string>();
        } catch (const json::exception&) {
            throw ConfigError(path.string() + ": profile '" + domain +
                              "' needs string identification_cue and synthesis_cue");
        }
        p.validate();
        out.emplace(domain, std::move(p));
    }
    return out;
}

RenderedStep render_step(std::string_view template_id, const std::vector<std::string>& context_parts,
                         const TemplateRegistry& registry, const TemplateRegistry::Vars& vars) {
    if (context_parts.empty()) throw DataError("render_step: no context parts");
    RenderedStep r;
    r.context = text::join_context(context_parts);
    r.instruction = registry.render(template_id, vars);
    r.prompt = text::join_with(r.context, registry.get(template_id).join, r.instruction);
    return r;
}

namespace {

void require_text(const Example& ex) {
    if (text::trim(ex.text).empty()) throw DataError("example '" + ex.id + "' has empty text");
}

/// Runs `body`; records backend failures on the trace instead of throwing.
template <class F>
bool guarded(ChainTrace& trace, int step_index, F&& body) {
    try {
        body();
        return true;
    } catch (const RefusalError& e) {
        trace.refused = true;
        trace.error = e.what();
    } catch (const BackendError& e) {
        trace.error = e.what();
    }
    trace.error_step = step_index;
    return false;
}

class StepRunner {
public:
    StepRunner(ChainTrace& trace, CompletionClient& client, const TemplateRegistry& reg, std::string prefix)
        : trace_(trace), client_(client), reg_(reg), prefix_(std::move(prefix)) {}

    /// Returns the step output, or nullopt after recording a failure.
    std::optional<std::string> run(std::string_view template_id, const std::vector<std::string>& parts,
                                   const TemplateRegistry::Vars& vars = {}) {
        const int index = static_cast<int>(trace_.steps.size()) + 1;
        auto rendered = render_step(template_id, parts, reg_, vars);
        ChainStep step{index, std::string(template_id), rendered.context, rendered.instruction,
                       prefix_ + rendered.prompt, {}};
        bool ok = guarded(trace_, index, [&] {
            CompletionRequest req;
            req.model_id = client_.model();
            req.prompt = step.prompt;
            req.max_tokens = client_.decoding().reasoning_max_tokens;
            req.temperature = client_.decoding().temperature;
            step.output = text::trim(client_.complete(req).text);
        });
        if (!ok) return std::nullopt;
        trace_.steps.push_back(step);
        return trace_.steps.back().output;
    }

    void classify(const std::string& content, const LabelSet& labels, const SseOptions& opt) {
        const int index = static_cast<int>(trace_.steps.size()) + 1;
        auto parts = classification_prompt_parts(content, labels, opt.style, reg_);
        ChainStep step{index, "classify." + to_string(opt.style), parts.context, parts.instruction,
                       prefix_ + parts.prompt, {}};
        Prediction pred;
        bool ok = guarded(trace_, index, [&] { pred = predict_prompt(step.prompt, labels, client_, opt.strategy); });
        if (!ok) return;
        pred.example_id = trace_.example_id;
        step.output = pred.raw_output;
        trace_.steps.push_back(std::move(step));
        trace_.prediction = std::move(pred);
    }

private:
    ChainTrace& trace_;
    CompletionClient& client_;
    const TemplateRegistry& reg_;
    std::string prefix_;
};

}  // namespace

ChainTrace run_sse_cot(const Example& example, const LabelSet& labels, ChainVariant variant,
                       CompletionClient& client, const SseOptions& options) {
    require_text(example);
    if (options.classify && labels.empty()) throw DataError("run_sse_cot: empty label set");
    const auto& reg = options.registry ? *options.registry : TemplateRegistry::builtin();

    ChainTrace trace;
    trace.example_id = example.id;
    trace.kind = ChainKind::sse;
    trace.variant = variant;
    trace.classified = options.classify;

    namespace id = template_ids;
    const auto text = text::trim(example.text);
    const auto c11 = reg.render(id::short_text_context, {{"text", text}});
    StepRunner steps(trace, client, reg, options.fewshot_prefix);

    std::string content;
    switch (variant) {
        case ChainVariant::full: {
            auto k1 = steps.run(id::sse_identify, {c11});
            if (!k1) return trace;
            auto s = steps.run(id::sse_retrieve, {c11, *k1});
            if (!s) return trace;
            auto r = steps.run(id::sse_rewrite, {c11, *k1, *s});
            if (!r) return trace;
            content = *r;
            break;
        }
        case ChainVariant::no_rewrite: {
            auto k1 = steps.run(id::sse_identify, {c11});
            if (!k1) return trace;
            auto s = steps.run(id::sse_retrieve, {c11, *k1});
            if (!s) return trace;
            content = text::join_context(text, *s);
            break;
        }
        case ChainVariant::no_retrieval: {
            auto r = steps.run(id::sse_rewrite, {c11});
            if (!r) return trace;
            content = *r;
            break;
        }
        case ChainVariant::no_both:
            content = text;
            break;
    }
    if (options.classify) steps.classify(content, labels, options);
    return trace;
}

ChainTrace run_da_cot(const Example& example, const CueProfile& cues, CompletionClient& client,
                      const TemplateRegistry& registry) {
    require_text(example);
    cues.validate();

    ChainTrace trace;
    trace.example_id = example.id;
    trace.kind = ChainKind::da;
    trace.variant = ChainVariant::full;
    trace.classified = false;

    namespace id = template_ids;
    const TemplateRegistry::Vars vars{{"identification_cue", cues.identification_cue},
                                      {"synthesis_cue", cues.synthesis_cue}};
    const auto c21 = registry.render(id::short_text_context, {{"text", text::trim(example.text)}});
    StepRunner steps(trace, client, registry, {});
    auto k2 = steps.run(id::da_identify, {c21}, vars);
    if (!k2) return trace;
    steps.run(id::da_summarize, {c21, *k2}, vars);
    return trace;
}

FewShotMode parse_fewshot_mode(std::string_view s) {
    if (s == "zero_shot") return FewShotMode::zero_shot;
    if (s == "one_shot") return FewShotMode::one_shot;
    throw ConfigError("unknown in-context mode '" + std::string(s) + "'");
}

std::string to_string(FewShotMode m) {
    return m == FewShotMode::one_shot ? "one_shot" : "zero_shot";
}

std::vector<FewShotExemplar> load_fewshot_exemplars(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open few-shot exemplar file " + path.string());
    json j;
    try {
        in >> j;
        std::vector<FewShotExemplar> out;
        for (const auto& e : j) {
            FewShotExemplar ex;
            ex.text = e.at("text").get<std::string>();
            ex.gold = e.at("gold").get<std::string>();
            for (const auto& s : e.at("steps")) {
                ex.steps.push_back({s.at("context").get<std::string>(), s.at("instruction").get<std::string>(),
                                    s.at("output").get<std::string>()});
            }
            out.push_back(std::move(ex));
        }
        return out;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string build_fewshot_context(const std::vector<FewShotExemplar>& exemplars, const LabelSet& labels,
                                  FewShotMode mode) {
    if (mode == FewShotMode::zero_shot) return {};

    std::vector<const FewShotExemplar*> by_label(labels.size(), nullptr);
    for (const auto& ex : exemplars) {
        auto idx = labels.index_of(ex.gold);
        if (!idx) throw DataError("few-shot exemplar has label '" + ex.gold + "' outside the label set");
        if (by_label[*idx]) throw DataError("duplicate few-shot exemplar for label '" + labels[*idx].name() + "'");
        if (ex.steps.empty()) throw DataError("few-shot exemplar for '" + ex.gold + "' has no worked steps");
        for (const auto& s : ex.steps) {
            if (text::trim(s.context).empty() || text::trim(s.instruction).empty() || text::trim(s.output).empty()) {
                throw DataError("few-shot exemplar for '" + ex.gold + "' has an incomplete step");
            }
        }
        by_label[*idx] = &ex;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!by_label[i]) throw DataError("no few-shot exemplar for label '" + labels[i].name() + "'");
    }

    std::string out;
    for (const auto* ex : by_label) {
        for (const auto& s : ex->steps) {
            out += text::join_context(s.context, s.instruction);
            out += '\n';
            out += s.output;
            out += '\n';
        }
        out += '\n';
    }
    return out;
}

std::string trace_to_json(const ChainTrace& t) {
    json steps = json::array();
    for (const auto& s : t.steps) {
        steps.push_back({{"step_index", s.step_index},
                         {"template_id", s.template_id},
                         {"context", s.context},
                         {"instruction", s.instruction},
                         {"prompt", s.prompt},
                         {"output", s.output}});
    }
    json j = {{"example_id", t.example_id},
              {"chain_kind", to_string(t.kind)},
              {"variant", to_string(t.variant)},
              {"classified", t.classified},
              {"steps", steps}};
    auto fl = t.final_label();
    j["final_label"] = fl ? json(*fl) : json(nullptr);
    if (t.prediction) {
        const auto& p = *t.prediction;
        j["prediction"] = {{"label", p.label ? json(*p.label) : json(nullptr)},
                           {"method", to_string(p.method)},
                           {"raw_output", p.raw_output},
                           {"confidence", p.confidence ? json(*p.confidence) : json(nullptr)},
                           {"flags", p.flags}};
    }
    j["error"] = t.error ? json(*t.error) : json(nullptr);
    j["error_step"] = t.error_step;
    j["refused"] = t.refused;
    return j.dump();
}

ChainTrace trace_from_json(std::string_view line) {
    try {
        auto j = json::parse(line);
        ChainTrace t;
        t.example_id = j.at("example_id").get<std::string>();
        t.kind = parse_chain_kind(j.at("chain_kind").get<std::string>());
        t.variant = parse_chain_variant(j.at("variant").get<std::string>());
        t.classified = j.value("classified", false);
        for (const auto& s : j.at("steps")) {
            t.steps.push_back({s.at("step_index").get<int>(), s.value("template_id", std::string()),
                               s.at("context").get<std::string>(), s.at("instruction").get<std::string>(),
                               s.value("prompt", std::string()), s.at("output").get<std::string>()});
        }
        if (j.contains("prediction") && j["prediction"].is_object()) {
            const auto& pj = j["prediction"];
            Prediction p;
            p.example_id = t.example_id;
            if (pj.at("label").is_string()) p.label = pj["label"].get<std::string>();
            p.method = parse_predict_method(pj.at("method").get<std::string>());
            p.raw_output = pj.at("raw_output").get<std::string>();
            if (pj.contains("confidence") && pj["confidence"].is_number()) p.confidence = pj["confidence"].get<double>();
            p.flags = pj.value("flags", std::vector<std::string>{});
            t.prediction = std::move(p);
        }
        if (j.contains("error") && j["error"].is_string()) t.error = j["error"].get<std::string>();
        t.error_step = j.value("error_step", 0);
        t.refused = j.value("refused", false);
        return t;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed trace line: ") + e.what());
    }
}

}  // namespace qlfr
