#include "qlfr/experiment.hpp"

#include "qlfr/error.hpp"
#include "qlfr/parallel.hpp"
#include "qlfr/random.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <fstream>

namespace qlfr {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(MethodKind m) {
    switch (m) {
        case MethodKind::qlfr: return "qlfr";
        case MethodKind::direct: return "direct";
        case MethodKind::cml_eval: return "cml-eval";
    }
    return "qlfr";
}

MethodKind parse_method_kind(std::string_view s) {
    if (s == "qlfr") return MethodKind::qlfr;
    if (s == "direct") return MethodKind::direct;
    if (s == "cml-eval" || s == "cml_eval") return MethodKind::cml_eval;
    throw ConfigError("unknown method '" + std::string(s) + "' (expected qlfr, direct or cml-eval)");
}

std::string ExperimentConfig::to_json() const {
    // nlohmann's default object type is key-sorted, so this dump is canonical.
    json j = {{"dataset", dataset},
              {"seed", seed},
              {"per_class", per_class},
              {"method", to_string(method)},
              {"train_ratio", train_ratio},
              {"limit", limit}};
    switch (method) {
        case MethodKind::qlfr:
            j["variant"] = to_string(variant);
            j["strategy"] = to_string(strategy);
            j["style"] = to_string(style);
            j["incontext"] = to_string(incontext);
            j["backend"] = backend;
            j["model"] = model;
            j["template_version"] = template_version;
            break;
        case MethodKind::direct:
            j["strategy"] = to_string(strategy);
            j["style"] = to_string(style);
            j["incontext"] = to_string(incontext);
            j["backend"] = backend;
            j["model"] = model;
            j["template_version"] = template_version;
            break;
        case MethodKind::cml_eval:
            j["predictions"] = predictions_path.generic_string();
            break;
    }
    return j.dump();
}

std::string ExperimentConfig::hash() const {
    return text::sha256_hex(to_json());
}

Splits derive_splits(const ExperimentConfig& config, const Corpus& corpus) {
    auto splits = sample_splits(corpus, config.per_class, config.seed);
    if (config.train_ratio < 1.0) {
        splits = subsample_train(splits, corpus.label_set, config.train_ratio, rng::derive(config.seed, 0xFEED));
    }
    return splits;
}

namespace {

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + p.string());
    out << body;
}

Prediction failed_prediction(const std::string& id, const ChainTrace& t) {
    Prediction p;
    p.example_id = id;
    p.raw_output = t.error.value_or("");
    p.flags.emplace_back(t.refused ? "refused" : "backend_error");
    return p;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const Corpus& corpus, CompletionClient* client,
                                const ExperimentOptions& options) {
    if (config.dataset.empty()) throw ConfigError("experiment config has no dataset");
    const auto& labels = corpus.label_set;
    const auto& reg = options.registry ? *options.registry : TemplateRegistry::builtin();

    ExperimentResult result;
    result.splits = derive_splits(config, corpus);

    std::vector<Example> golds;
    if (config.method == MethodKind::cml_eval) {
        if (config.predictions_path.empty()) throw ConfigError("cml-eval needs a predictions file");
        result.predictions = read_predictions_jsonl(config.predictions_path, labels);
        for (const auto& p : result.predictions) {
            const auto* ex = corpus.find(p.example_id);
            if (!ex) throw DataError("prediction for '" + p.example_id + "' matches no example in " + corpus.name);
            golds.push_back(*ex);
        }
    } else {
        if (!client) throw ConfigError("method " + to_string(config.method) + " needs a backend");
        golds = result.splits.test;
        if (config.limit > 0 && golds.size() > config.limit) golds.resize(config.limit);

        std::string prefix;
        if (config.incontext == FewShotMode::one_shot) {
            prefix = build_fewshot_context(options.exemplars, labels, FewShotMode::one_shot);
        }

        result.predictions.resize(golds.size());
        if (config.method == MethodKind::qlfr) result.traces.resize(golds.size());

        SseOptions sse;
        sse.strategy = config.strategy;
        sse.style = config.style;
        sse.registry = &reg;
        sse.fewshot_prefix = prefix;

        parallel_for(golds.size(), options.concurrency, [&](std::size_t i) {
            const auto& ex = golds[i];
            if (config.method == MethodKind::qlfr) {
                auto trace = run_sse_cot(ex, labels, config.variant, *client, sse);
                result.predictions[i] = trace.prediction ? *trace.prediction : failed_prediction(ex.id, trace);
                result.traces[i] = std::move(trace);
            } else {
                ChainTrace t;
                Prediction p;
                try {
                    p = predict(ex.text, labels, *client, config.strategy, config.style, reg, prefix);
                } catch (const RefusalError& e) {
                    t.refused = true;
                    t.error = e.what();
                    p = failed_prediction(ex.id, t);
                } catch (const BackendError& e) {
                    t.error = e.what();
                    p = failed_prediction(ex.id, t);
                }
                p.example_id = ex.id;
                result.predictions[i] = std::move(p);
            }
        });
        for (const auto& p : result.predictions) {
            if (p.flagged("backend_error") || p.flagged("refused")) ++result.failures;
        }
    }

    result.report = evaluate(result.predictions, golds, labels);
    result.report.run_config_hash = config.hash();
    result.report.config_json = config.to_json();
    result.report.created_at = text::utc_timestamp();

    if (!options.output_dir.empty()) {
        fs::create_directories(options.output_dir);
        write_predictions_jsonl(options.output_dir / "predictions.jsonl", result.predictions);
        if (!result.traces.empty()) {
            std::string body;
            for (const auto& t : result.traces) body += trace_to_json(t) + "\n";
            write_text(options.output_dir / "traces.jsonl", body);
        }
        write_text(options.output_dir / "report.json", report_to_json(result.report, labels) + "\n");
        write_text(options.output_dir / "report.txt",
                   render_report_table(result.report, config.dataset + " / " + to_string(config.method) +
                                                          (config.method == MethodKind::qlfr
                                                               ? " (" + to_string(config.variant) + ")"
                                                               : "")));
    }

    if (!golds.empty() &&
        static_cast<double>(result.failures) > options.max_failure_fraction * static_cast<double>(golds.size())) {
        throw FailureThresholdError(std::to_string(result.failures) + " of " + std::to_string(golds.size()) +
                                    " examples failed at the backend");
    }
    return result;
}

}  // namespace qlfr
