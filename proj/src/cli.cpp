#include "qlfr/cli.hpp"

#include "qlfr/cache.hpp"
#include "qlfr/config.hpp"
#include "qlfr/error.hpp"
#include "qlfr/experiment.hpp"
#include "qlfr/rationales.hpp"
#include "qlfr/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

namespace qlfr::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Logger {
public:
    explicit Logger(std::ostream& err) : err_(err) {}

    void info(const std::string& event, json fields = json::object()) { emit("info", event, std::move(fields)); }
    void warn(const std::string& event, json fields = json::object()) { emit("warn", event, std::move(fields)); }

    void error(int code, const std::string& kind, const std::string& message) {
        json j = {{"level", "error"}, {"code", code}, {"kind", kind}, {"message", message}};
        err_ << j.dump() << '\n';
    }

private:
    void emit(const char* level, const std::string& event, json fields) {
        fields["level"] = level;
        fields["event"] = event;
        fields["ts"] = text::utc_timestamp();
        err_ << fields.dump() << '\n';
    }

    std::ostream& err_;
};

struct Common {
    std::string config = "qlfr.toml";
    std::string dataset;
    std::string backend;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> per_class;
    std::optional<double> ratio;
    std::optional<std::size_t> concurrency;
};

void add_common(CLI::App* cmd, Common& c, bool needs_dataset) {
    cmd->add_option("--config,-c", c.config, "Run config file")->capture_default_str();
    auto* d = cmd->add_option("--dataset,-d", c.dataset, "Dataset name from the config");
    if (needs_dataset) d->required();
    cmd->add_option("--out,-o", c.out, "Output directory (default: <output_dir>/<dataset>/...)");
    cmd->add_option("--seed", c.seed, "Split seed");
    cmd->add_option("--per-class", c.per_class, "Examples sampled per class (train + val)");
    cmd->add_option("--ratio", c.ratio, "Training-set ratio in (0, 1]");
}

ExperimentConfig base_experiment(const RunConfigFile& cfg, const Common& c) {
    const auto& e = cfg.experiment;
    ExperimentConfig x;
    x.dataset = c.dataset;
    x.seed = c.seed.value_or(e.seed);
    x.per_class = c.per_class.value_or(e.per_class);
    x.train_ratio = c.ratio.value_or(e.train_ratio);
    x.method = parse_method_kind(e.method);
    x.variant = parse_chain_variant(e.variant);
    x.strategy = parse_predict_strategy(e.strategy);
    x.style = parse_prompt_style(e.style);
    x.incontext = parse_fewshot_mode(e.incontext);
    x.limit = e.limit;
    x.backend = c.backend.empty() ? e.backend : c.backend;
    return x;
}

Corpus load_dataset(const RunConfigFile& cfg, const std::string& name) {
    return load_corpus(load_manifest(cfg.dataset(name).manifest));
}

std::string cue_profile_for(const RunConfigFile& cfg, const std::string& dataset) {
    const auto& d = cfg.dataset(dataset);
    if (!d.cue_profile.empty()) return d.cue_profile;
    auto m = load_manifest(d.manifest);
    if (!m.cue_profile.empty()) return m.cue_profile;
    return "news";
}

/// Backend + cache + client bundle for one command.
struct Session {
    std::unique_ptr<Backend> backend;
    std::unique_ptr<ResponseCache> cache;
    std::unique_ptr<CompletionClient> client;
};

Session open_session(const RunConfigFile& cfg, const std::string& backend_name) {
    if (backend_name.empty()) throw ConfigError("no backend selected (pass --backend or set experiment.backend)");
    const auto& spec = cfg.backend(backend_name);
    Session s;
    s.backend = make_backend(spec);
    s.cache = std::make_unique<ResponseCache>(cfg.experiment.cache_dir);
    s.client = std::make_unique<CompletionClient>(*s.backend, s.cache.get(), retry_policy(spec), spec.max_concurrency);
    DecodingDefaults d;
    d.reasoning_max_tokens = cfg.experiment.reasoning_max_tokens;
    d.classification_max_tokens = cfg.experiment.classification_max_tokens;
    d.temperature = cfg.experiment.temperature;
    s.client->set_decoding(d);
    return s;
}

void write_file(const fs::path& p, const std::string& body) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + p.string());
    out << body;
}

fs::path dataset_dir(const RunConfigFile& cfg, const Common& c) {
    return c.out.empty() ? cfg.experiment.output_dir / c.dataset : fs::path(c.out);
}

int cmd_prepare(const Common& c, std::ostream& out, Logger& log) {
    auto cfg = parse_config(c.config);
    auto x = base_experiment(cfg, c);
    auto corpus = load_dataset(cfg, c.dataset);
    auto splits = derive_splits(x, corpus);
    auto dir = (c.out.empty() ? cfg.experiment.output_dir / c.dataset : fs::path(c.out)) / "splits";
    fs::create_directories(dir);
    write_corpus_jsonl(dir / "train.jsonl", splits.train);
    write_corpus_jsonl(dir / "val.jsonl", splits.val);
    write_corpus_jsonl(dir / "test.jsonl", splits.test);
    json summary = {{"dataset", c.dataset},
                    {"n", corpus.size()},
                    {"classes", corpus.label_set.size()},
                    {"seed", x.seed},
                    {"per_class", x.per_class},
                    {"train_ratio", x.train_ratio},
                    {"train", splits.train.size()},
                    {"val", splits.val.size()},
                    {"test", splits.test.size()},
                    {"train_percent", 100.0 * static_cast<double>(splits.train.size()) / static_cast<double>(corpus.size())},
                    {"split_hash", splits.hash()},
                    {"dir", dir.string()}};
    write_file(dir / "splits.json", summary.dump(2) + "\n");
    log.info("prepare.done", {{"dir", dir.string()}});
    out << summary.dump() << '\n';
    return kOk;
}

struct RunArgs {
    std::string method;
    std::string variant;
    std::string style;
    std::string strategy;
    std::string incontext;
    std::optional<std::size_t> limit;
};

int cmd_run(const Common& c, const RunArgs& r, std::ostream& out, Logger& log) {
    auto cfg = parse_config(c.config);
    auto x = base_experiment(cfg, c);
    if (!r.method.empty()) x.method = parse_method_kind(r.method);
    if (!r.variant.empty()) x.variant = parse_chain_variant(r.variant);
    if (!r.style.empty()) x.style = parse_prompt_style(r.style);
    if (!r.strategy.empty()) x.strategy = parse_predict_strategy(r.strategy);
    if (!r.incontext.empty()) x.incontext = parse_fewshot_mode(r.incontext);
    if (r.limit) x.limit = *r.limit;
    if (x.method == MethodKind::cml_eval) throw ConfigError("use the eval subcommand to score external predictions");

    auto corpus = load_dataset(cfg, c.dataset);
    auto registry = cfg.registry();
    x.template_version = registry.version();
    auto session = open_session(cfg, x.backend);
    x.model = session.client->model();

    ExperimentOptions opt;
    opt.registry = &registry;
    opt.concurrency = c.concurrency.value_or(cfg.experiment.concurrency);
    opt.max_failure_fraction = cfg.experiment.failure_threshold;
    if (x.incontext == FewShotMode::one_shot) {
        const auto& d = cfg.dataset(c.dataset);
        if (d.exemplars.empty()) throw ConfigError("one_shot needs datasets." + c.dataset + ".exemplars");
        opt.exemplars = load_fewshot_exemplars(d.exemplars);
    }
    const auto tag = to_string(x.method) + "-" +
                     (x.method == MethodKind::qlfr ? to_string(x.variant) : to_string(x.style)) + "-" +
                     x.hash().substr(0, 12);
    opt.output_dir = c.out.empty() ? cfg.experiment.output_dir / c.dataset / tag : fs::path(c.out);

    log.info("run.start", {{"dataset", c.dataset}, {"config", json::parse(x.to_json())}});
    std::optional<ExperimentResult> res;
    try {
        res = run_experiment(x, corpus, session.client.get(), opt);
    } catch (const FailureThresholdError&) {
        log.warn("run.partial_outputs", {{"dir", opt.output_dir.string()}});
        throw;
    }
    log.info("run.done", {{"dir", opt.output_dir.string()},
                          {"cache_hits", session.client->cache_hits()},
                          {"cache_misses", session.client->cache_misses()},
                          {"failures", res->failures}});
    out << render_report_table(res->report, c.dataset + " / " + tag);
    out << "report: " << (opt.output_dir / "report.json").string() << '\n';
    return kOk;
}

int cmd_rationales(const Common& c, bool no_sse, bool no_da, std::ostream& out, Logger& log) {
    auto cfg = parse_config(c.config);
    auto x = base_experiment(cfg, c);
    auto corpus = load_dataset(cfg, c.dataset);
    auto splits = derive_splits(x, corpus);
    auto registry = cfg.registry();
    auto session = open_session(cfg, x.backend);
    const auto& cues = cfg.cue_profile(cue_profile_for(cfg, c.dataset));

    RationaleOptions opt;
    opt.concurrency = c.concurrency.value_or(cfg.experiment.concurrency);
    opt.max_failure_fraction = cfg.experiment.failure_threshold;
    opt.registry = &registry;
    auto run = generate_rationales(splits.train, cues, *session.client, {!no_sse, !no_da}, opt);
    for (const auto& f : run.failures) log.warn("rationale.skipped", {{"example_id", f.example_id}, {"reason", f.reason}});

    auto dir = dataset_dir(cfg, c);
    fs::create_directories(dir);
    write_rationales_jsonl(dir / "rationales.jsonl", run.records);
    json meta = {{"dataset", c.dataset},
                 {"split_hash", splits.hash()},
                 {"records", run.records.size()},
                 {"skipped", run.failures.size()},
                 {"cue_profile", cues.domain_name},
                 {"backend", session.backend->id()},
                 {"model", session.client->model()}};
    write_file(dir / "rationales.meta.json", meta.dump(2) + "\n");
    log.info("rationales.done", {{"cache_hits", session.client->cache_hits()},
                                 {"cache_misses", session.client->cache_misses()}});
    out << meta.dump() << '\n';
    return kOk;
}

struct ExportArgs {
    std::string rationales;
    bool no_ecca = false;
    bool no_sse = false;
    bool no_da = false;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
};

int cmd_export(const Common& c, const ExportArgs& a, std::ostream& out, Logger& log) {
    auto cfg = parse_config(c.config);
    auto x = base_experiment(cfg, c);
    auto corpus = load_dataset(cfg, c.dataset);
    auto dir = dataset_dir(cfg, c);
    fs::path rpath = a.rationales.empty() ? dir / "rationales.jsonl" : fs::path(a.rationales);
    auto records = read_rationales_jsonl(rpath);

    ExportOptions opt;
    opt.dataset = c.dataset;
    opt.split_hash = derive_splits(x, corpus).hash();
    opt.lambda1 = a.lambda1.value_or(cfg.experiment.lambda1);
    opt.lambda2 = a.lambda2.value_or(cfg.experiment.lambda2);
    ExportFlags flags{!a.no_ecca, !a.no_sse, !a.no_da};
    auto [rows, manifest] = export_multitask(records, corpus.label_set, flags, opt);

    std::string stem = "multitask";
    if (!flags.ecca) stem += "-no_ecca";
    if (!flags.sse) stem += "-no_sse";
    if (!flags.da) stem += "-no_da";
    fs::create_directories(dir);
    auto [jsonl, mpath] = write_export(dir / (stem + ".jsonl"), rows, manifest);
    log.info("export.done", {{"records", rows.size()}, {"file", jsonl.string()}});
    out << json{{"file", jsonl.string()}, {"manifest", mpath.string()}, {"total", manifest.total},
                {"counts", manifest.counts}}
               .dump()
        << '\n';
    return kOk;
}

int cmd_eval(const Common& c, const std::string& preds, std::ostream& out, Logger& log) {
    auto cfg = parse_config(c.config);
    auto x = base_experiment(cfg, c);
    x.method = MethodKind::cml_eval;
    x.predictions_path = preds;
    auto corpus = load_dataset(cfg, c.dataset);
    ExperimentOptions opt;
    opt.output_dir = c.out.empty() ? cfg.experiment.output_dir / c.dataset / ("eval-" + x.hash().substr(0, 12))
                                   : fs::path(c.out);
    auto res = run_experiment(x, corpus, nullptr, opt);
    log.info("eval.done", {{"dir", opt.output_dir.string()}, {"n", res.report.n}});
    out << render_report_table(res.report, c.dataset + " / eval " + fs::path(preds).filename().string());
    out << "report: " << (opt.output_dir / "report.json").string() << '\n';
    return kOk;
}

int cmd_cache(const std::string& config, const std::string& cache_dir, const std::string& action, std::ostream& out,
              Logger& log) {
    fs::path dir = cache_dir;
    if (dir.empty()) dir = parse_config(config).experiment.cache_dir;
    ResponseCache cache(dir);
    if (action == "stats") {
        auto s = cache.stats();
        out << json{{"dir", dir.string()}, {"entries", s.entries}, {"bytes", s.bytes}}.dump() << '\n';
    } else if (action == "verify") {
        auto bad = cache.verify();
        out << json{{"dir", dir.string()}, {"bad", bad}}.dump() << '\n';
        if (!bad.empty()) throw DataError(std::to_string(bad.size()) + " cache entries failed verification");
    } else if (action == "clear") {
        auto n = cache.clear();
        log.info("cache.cleared", {{"entries", n}});
        out << json{{"dir", dir.string()}, {"removed", n}}.dump() << '\n';
    } else {
        throw CLI::ValidationError("cache action must be stats, verify or clear");
    }
    return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Logger log(err);
    CLI::App app{"qlfr: four-step chain-of-thought short-text classification toolkit", "qlfr"};
    app.require_subcommand(1);

    Common common;
    RunArgs run_args;
    ExportArgs export_args;
    bool no_sse = false;
    bool no_da = false;
    std::string preds;
    std::string cache_action;
    std::string cache_dir;

    auto* prepare = app.add_subcommand("prepare", "Sample train/val/test splits and write them as JSONL");
    add_common(prepare, common, true);

    auto* run = app.add_subcommand("run", "Run an experiment over the test split and write a report");
    add_common(run, common, true);
    run->add_option("--backend,-b", common.backend, "Backend name from the config");
    run->add_option("--method", run_args.method, "qlfr | direct");
    run->add_option("--variant", run_args.variant, "full | no_rewrite | no_retrieval | no_both");
    run->add_option("--style", run_args.style, "qlfr_step4 | bare | verbose");
    run->add_option("--strategy", run_args.strategy, "parse_text | scored_argmax");
    run->add_option("--incontext", run_args.incontext, "zero_shot | one_shot");
    run->add_option("--limit", run_args.limit, "Only the first N test examples");
    run->add_option("--concurrency", common.concurrency, "In-flight examples");

    auto* rationales = app.add_subcommand("rationales", "Generate SSE-CoT / DA-CoT rationales for the train split");
    add_common(rationales, common, true);
    rationales->add_option("--backend,-b", common.backend, "Backend name from the config");
    rationales->add_flag("--no-sse", no_sse, "Skip SSE-CoT rationales");
    rationales->add_flag("--no-da", no_da, "Skip DA-CoT rationales");
    rationales->add_option("--concurrency", common.concurrency, "In-flight examples");

    auto* exp = app.add_subcommand("export", "Write multi-task training records from stored rationales");
    add_common(exp, common, true);
    exp->add_option("--rationales", export_args.rationales, "Rationale JSONL (default: <dataset dir>/rationales.jsonl)");
    exp->add_flag("--no-ecca", export_args.no_ecca, "Label-task inputs use raw text");
    exp->add_flag("--no-sse", export_args.no_sse, "Drop the SSE rationale task");
    exp->add_flag("--no-da", export_args.no_da, "Drop the DA rationale task");
    exp->add_option("--lambda1", export_args.lambda1, "Weight of the SSE rationale loss");
    exp->add_option("--lambda2", export_args.lambda2, "Weight of the DA rationale loss");

    auto* eval = app.add_subcommand("eval", "Score an external predictions JSONL file");
    add_common(eval, common, true);
    eval->add_option("--preds,-p", preds, "Predictions JSONL {example_id, label, ...}")->required();

    auto* cache = app.add_subcommand("cache", "Inspect or clear the response cache");
    cache->add_option("--config,-c", common.config, "Run config file")->capture_default_str();
    cache->add_option("--cache-dir", cache_dir, "Cache directory (overrides the config)");
    cache->add_option("action", cache_action, "stats | verify | clear")->required();

    if (!args.empty() && !args.front().starts_with("-")) {
        const auto subs = app.get_subcommands([](CLI::App*) { return true; });
        const bool known = std::any_of(subs.begin(), subs.end(),
                                       [&](const CLI::App* s) { return s->get_name() == args.front(); });
        if (!known) {
            err << app.help();
            log.error(kUsage, "usage", "unknown subcommand '" + args.front() + "'");
            return kUsage;
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << app.help();
        log.error(kUsage, "usage", e.what());
        return kUsage;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(common, out, log);
        if (run->parsed()) return cmd_run(common, run_args, out, log);
        if (rationales->parsed()) return cmd_rationales(common, no_sse, no_da, out, log);
        if (exp->parsed()) return cmd_export(common, export_args, out, log);
        if (eval->parsed()) return cmd_eval(common, preds, out, log);
        if (cache->parsed()) return cmd_cache(common.config, cache_dir, cache_action, out, log);
    } catch (const ConfigError& e) {
        log.error(kConfigError, "config", e.what());
        return kConfigError;
    } catch (const FailureThresholdError& e) {
        log.error(kBackendFailure, "backend_threshold", e.what());
        return kBackendFailure;
    } catch (const BackendError& e) {
        log.error(kBackendFailure, "backend", e.what());
        return kBackendFailure;
    } catch (const DataError& e) {
        log.error(kDataError, "data", e.what());
        return kDataError;
    } catch (const CLI::ValidationError& e) {
        log.error(kUsage, "usage", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        log.error(kUsage, "internal", e.what());
        return kUsage;
    }
    return kUsage;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace qlfr::cli
