#include "qlfr/rationales.hpp"

#include "qlfr/classify.hpp"
#include "qlfr/error.hpp"
#include "qlfr/parallel.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace qlfr {

using nlohmann::json;

RationaleRun generate_rationales(const std::vector<Example>& train, const CueProfile& cues, CompletionClient& client,
                                 RationaleFlags flags, const RationaleOptions& options) {
    if (!flags.sse && !flags.da) throw ConfigError("generate_rationales: enable at least one of sse, da");
    cues.validate();
    const auto& reg = options.registry ? *options.registry : TemplateRegistry::builtin();
    for (const auto& ex : train) {
        if (text::trim(ex.text).empty()) throw DataError("example '" + ex.id + "' has empty text");
        if (!ex.gold) throw DataError("training example '" + ex.id + "' has no gold label");
    }

    std::vector<std::optional<RationaleRecord>> slots(train.size());
    std::vector<std::optional<std::string>> errors(train.size());
    SseOptions sse_opts;
    sse_opts.registry = &reg;
    sse_opts.classify = false;

    parallel_for(train.size(), options.concurrency, [&](std::size_t i) {
        const auto& ex = train[i];
        RationaleRecord rec{ex.id, ex.text, *ex.gold, std::nullopt, std::nullopt, client.backend().id(),
                            client.model()};
        if (flags.sse) {
            auto trace = run_sse_cot(ex, LabelSet{}, ChainVariant::full, client, sse_opts);
            if (trace.error) {
                errors[i] = "sse step " + std::to_string(trace.error_step) + ": " + *trace.error;
                return;
            }
            rec.sse_rationale = trace.steps.back().output;
        }
        if (flags.da) {
            auto trace = run_da_cot(ex, cues, client, reg);
            if (trace.error) {
                errors[i] = "da step " + std::to_string(trace.error_step) + ": " + *trace.error;
                return;
            }
            rec.da_rationale = trace.steps.back().output;
        }
        if ((rec.sse_rationale && rec.sse_rationale->empty()) || (rec.da_rationale && rec.da_rationale->empty())) {
            errors[i] = "empty rationale";
            return;
        }
        slots[i] = std::move(rec);
    });

    RationaleRun run;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (slots[i]) {
            run.records.push_back(std::move(*slots[i]));
        } else {
            run.failures.push_back({train[i].id, errors[i].value_or("unknown failure")});
        }
    }
    if (!train.empty() && static_cast<double>(run.failures.size()) >
                              options.max_failure_fraction * static_cast<double>(train.size())) {
        throw FailureThresholdError(std::to_string(run.failures.size()) + " of " + std::to_string(train.size()) +
                                    " examples failed rationale generation (first: " + run.failures.front().example_id +
                                    ": " + run.failures.front().reason + ")");
    }
    return run;
}

namespace {

json opt_json(const std::optional<std::string>& s) {
    return s ? json(*s) : json(nullptr);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

template <class F>
void for_each_line(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

void write_rationales_jsonl(const std::filesystem::path& path, const std::vector<RationaleRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& r : records) {
        json j = {{"example_id", r.example_id},
                  {"text", r.text},
                  {"gold", r.gold},
                  {"sse_rationale", opt_json(r.sse_rationale)},
                  {"da_rationale", opt_json(r.da_rationale)},
                  {"provenance", {{"backend", r.backend_id}, {"model", r.model_id}}}};
        out << j.dump() << '\n';
    }
}

std::vector<RationaleRecord> read_rationales_jsonl(const std::filesystem::path& path) {
    std::vector<RationaleRecord> out;
    for_each_line(path, [&](const json& j) {
        RationaleRecord r;
        r.example_id = j.at("example_id").get<std::string>();
        r.text = j.at("text").get<std::string>();
        r.gold = j.at("gold").get<std::string>();
        r.sse_rationale = opt_string(j, "sse_rationale");
        r.da_rationale = opt_string(j, "da_rationale");
        if (!r.sse_rationale && !r.da_rationale) throw DataError("record has no rationale");
        if (j.contains("provenance")) {
            r.backend_id = j["provenance"].value("backend", std::string());
            r.model_id = j["provenance"].value("model", std::string());
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::string to_string(TaskKind t) {
    switch (t) {
        case TaskKind::label: return "label";
        case TaskKind::sse: return "sse";
        case TaskKind::da: return "da";
    }
    return "label";
}

TaskKind parse_task_kind(std::string_view s) {
    if (s == "label") return TaskKind::label;
    if (s == "sse") return TaskKind::sse;
    if (s == "da") return TaskKind::da;
    throw DataError("unknown task '" + std::string(s) + "'");
}

std::string ExportManifest::to_json() const {
    json j = {{"dataset", dataset},
              {"split_hash", split_hash},
              {"counts", counts},
              {"total", total},
              {"lambda1", lambda1},
              {"lambda2", lambda2},
              {"flags", {{"ecca", flags.ecca}, {"sse", flags.sse}, {"da", flags.da}}},
              {"labels", labels},
              {"ecca_separator", ecca_separator}};
    return j.dump(2);
}

ExportManifest ExportManifest::from_json(std::string_view text) {
    try {
        auto j = json::parse(text);
        ExportManifest m;
        m.dataset = j.at("dataset").get<std::string>();
        m.split_hash = j.at("split_hash").get<std::string>();
        m.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
        m.total = j.at("total").get<std::size_t>();
        m.lambda1 = j.at("lambda1").get<double>();
        m.lambda2 = j.at("lambda2").get<double>();
        m.flags = {j.at("flags").at("ecca").get<bool>(), j.at("flags").at("sse").get<bool>(),
                   j.at("flags").at("da").get<bool>()};
        m.labels = j.at("labels").get<std::vector<std::string>>();
        m.ecca_separator = j.value("ecca_separator", std::string(" "));
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed export manifest: ") + e.what());
    }
}

std::pair<std::vector<MultiTaskRecord>, ExportManifest> export_multitask(const std::vector<RationaleRecord>& records,
                                                                         const LabelSet& labels, ExportFlags flags,
                                                                         const ExportOptions& options) {
    if (labels.empty()) throw DataError("export: empty label set");
    std::vector<MultiTaskRecord> out;
    out.reserve(records.size() * 3);
    ExportManifest m;
    m.dataset = options.dataset;
    m.split_hash = options.split_hash;
    m.lambda1 = options.lambda1;
    m.lambda2 = options.lambda2;
    m.flags = flags;
    m.labels = labels.names();
    m.ecca_separator = options.ecca_separator;
    m.counts = {{"label", 0}};
    if (flags.sse) m.counts["sse"] = 0;
    if (flags.da) m.counts["da"] = 0;

    for (const auto& r : records) {
        auto idx = labels.index_of(r.gold);
        if (!idx) throw DataError("export: gold '" + r.gold + "' of '" + r.example_id + "' is not in the label set");
        if (flags.sse && !r.sse_rationale) throw DataError("export: '" + r.example_id + "' has no SSE rationale");
        if (flags.da && !r.da_rationale) throw DataError("export: '" + r.example_id + "' has no DA rationale");

        auto input = flags.ecca ? inject_labels(r.text, labels, options.ecca_separator).rendered : r.text;
        out.push_back({std::move(input), labels[*idx].name(), TaskKind::label});
        ++m.counts["label"];
        if (flags.sse) {
            out.push_back({r.text, *r.sse_rationale, TaskKind::sse});
            ++m.counts["sse"];
        }
        if (flags.da) {
            out.push_back({r.text, *r.da_rationale, TaskKind::da});
            ++m.counts["da"];
        }
    }
    m.total = out.size();
    return {std::move(out), std::move(m)};
}

std::pair<std::filesystem::path, std::filesystem::path> write_export(const std::filesystem::path& jsonl_path,
                                                                     const std::vector<MultiTaskRecord>& records,
                                                                     const ExportManifest& manifest) {
    {
        std::ofstream out(jsonl_path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + jsonl_path.string());
        for (const auto& r : records) {
            out << json{{"input", r.input}, {"target", r.target}, {"task", to_string(r.task)}}.dump() << '\n';
        }
    }
    auto manifest_path = jsonl_path;
    manifest_path.replace_extension(".manifest.json");
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + manifest_path.string());
    out << manifest.to_json() << '\n';
    return {jsonl_path, manifest_path};
}

std::vector<MultiTaskRecord> read_multitask_jsonl(const std::filesystem::path& path) {
    std::vector<MultiTaskRecord> out;
    for_each_line(path, [&](const json& j) {
        out.push_back({j.at("input").get<std::string>(), j.at("target").get<std::string>(),
                       parse_task_kind(j.at("task").get<std::string>())});
    });
    return out;
}

}  // namespace qlfr
