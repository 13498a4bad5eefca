#include "qlfr/cli.hpp"
#include "qlfr/experiment.hpp"
#include "qlfr/mock_backend.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <sstream>

using namespace qlfr;
using nlohmann::json;
using qlfr::fx::TempDir;

namespace {

/// Writes a config into `dir` that points at the committed fixtures.
std::filesystem::path write_config(const TempDir& dir, const std::string& extra = {}) {
    const auto path = dir / "qlfr.toml";
    fx::spit(path, "templates = \"" + fx::source_path("data/templates/qlfr-v1.json").string() +
                            "\"\ncues = \"" + fx::source_path("data/cues.json").string() +
                            "\"\n\n[experiment]\nseed = 13\nper_class = 4\nbackend = \"mock\"\nconcurrency = 3\n" +
                            extra + "\n[datasets.tagmynews]\nmanifest = \"" +
                            fx::fixture("news7/manifest.json").string() + "\"\nexemplars = \"" +
                            fx::fixture("news7/exemplars.json").string() +
                            "\"\n\n[backends.mock]\nkind = \"mock\"\nrules = \"" +
                            fx::fixture("news7/rules.jsonl").string() + "\"\n");
    return path;
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

json last_json_line(const std::string& s) {
    auto trimmed = s.substr(0, s.find_last_not_of('\n') + 1);
    return json::parse(trimmed.substr(trimmed.find_last_of('\n') + 1));
}

}  // namespace

TEST(Experiment, FixtureRunScoresPerfectly) {
    auto corpus = load_corpus(load_manifest(fx::fixture("news7/manifest.json")));
    auto inner = ScriptedBackend::from_file(fx::fixture("news7/rules.jsonl"));
    CountingBackend counting(inner);
    CompletionClient client(counting);
    ExperimentConfig x;
    x.dataset = "tagmynews";
    x.seed = 13;
    x.per_class = 4;
    x.backend = "mock";
    auto res = run_experiment(x, corpus, &client, {{}, 4});
    EXPECT_EQ(res.splits.test.size(), 14u);
    EXPECT_DOUBLE_EQ(res.report.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(res.report.macro_f1, 1.0);
    EXPECT_EQ(counting.calls(), 14u * 4u);
    EXPECT_EQ(res.report.run_config_hash, x.hash());
    std::size_t diag = 0;
    for (std::size_t i = 0; i < res.report.confusion.size(); ++i) diag += res.report.confusion[i][i];
    EXPECT_DOUBLE_EQ(res.report.accuracy, static_cast<double>(diag) / static_cast<double>(res.report.n));

    CountingBackend direct_count(inner);
    CompletionClient direct_client(direct_count);
    x.method = MethodKind::direct;
    x.style = PromptStyle::bare;
    auto direct = run_experiment(x, corpus, &direct_client);
    EXPECT_EQ(direct_count.calls(), 14u);
    EXPECT_DOUBLE_EQ(direct.report.accuracy, 1.0);
}

TEST(Experiment, ConfigHashIsStableAndSensitive) {
    ExperimentConfig a;
    a.dataset = "tagmynews";
    a.seed = 1;
    auto b = a;
    EXPECT_EQ(a.hash(), b.hash());
    b.variant = ChainVariant::no_both;
    EXPECT_NE(a.hash(), b.hash());
    auto c = a;
    c.method = MethodKind::direct;
    auto d = c;
    d.variant = ChainVariant::no_both;
    EXPECT_EQ(c.hash(), d.hash());
}

TEST(Experiment, PermutedLabelsLeaveMetricsUnchanged) {
    std::vector<Prediction> preds;
    std::vector<Example> golds;
    fx::to_library({"A", "B", "C", "A", "B"}, {"A", "C", "C", "", "B"}, preds, golds);
    auto base = evaluate(preds, golds, LabelSet({"A", "B", "C"}));
    std::map<std::string, std::string> perm{{"A", "C"}, {"B", "A"}, {"C", "B"}};
    for (auto& p : preds)
        if (p.label) p.label = perm[*p.label];
    for (auto& g : golds) g.gold = perm[*g.gold];
    auto permuted = evaluate(preds, golds, LabelSet({"B", "C", "A"}));
    EXPECT_NEAR(base.accuracy, permuted.accuracy, 1e-12);
    EXPECT_NEAR(base.macro_f1, permuted.macro_f1, 1e-12);
}

TEST(Cli, UsageErrors) {
    auto unknown = run({"bogus"});
    EXPECT_EQ(unknown.code, cli::kUsage);
    EXPECT_NE(unknown.err.find("Usage"), std::string::npos);
    auto j = last_json_line(unknown.err);
    EXPECT_EQ(j["level"], "error");
    EXPECT_NE(j["message"].get<std::string>().find("bogus"), std::string::npos);
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST(Cli, ConfigAndDataErrorsMapToExitCodes) {
    TempDir dir("cli");
    auto cfg = write_config(dir, "lora = 1\n");
    auto bad = run({"prepare", "--config", cfg.string(), "--dataset", "tagmynews"});
    EXPECT_EQ(bad.code, cli::kConfigError);
    EXPECT_EQ(last_json_line(bad.err)["kind"], "config");

    auto good = write_config(dir);
    EXPECT_EQ(run({"run", "-c", good.string(), "-d", "nope"}).code, cli::kConfigError);
    EXPECT_EQ(run({"eval", "-c", good.string(), "-d", "tagmynews", "--preds", (dir / "missing.jsonl").string()}).code,
              cli::kDataError);
    EXPECT_EQ(run({"prepare", "-c", good.string(), "-d", "tagmynews", "--per-class", "40"}).code, cli::kDataError);
}

TEST(Cli, EndToEndSubcommands) {
    TempDir dir("cli");
    auto cfg = write_config(dir).string();

    auto prep = run({"prepare", "-c", cfg, "-d", "tagmynews"});
    ASSERT_EQ(prep.code, 0) << prep.err;
    auto summary = json::parse(prep.out);
    EXPECT_EQ(summary["test"], 14);
    EXPECT_TRUE(std::filesystem::exists(dir / "runs/tagmynews/splits/test.jsonl"));

    auto r = run({"run", "-c", cfg, "-d", "tagmynews", "--variant", "full", "--backend", "mock", "-o",
                  (dir / "run1").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("ACC 100.00"), std::string::npos);
    auto report = json::parse(fx::slurp(dir / "run1/report.json"));
    EXPECT_DOUBLE_EQ(report["accuracy"].get<double>(), 1.0);
    const auto preds1 = fx::slurp(dir / "run1/predictions.jsonl");

    auto again = run({"run", "-c", cfg, "-d", "tagmynews", "-o", (dir / "run2").string()});
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(fx::slurp(dir / "run2/predictions.jsonl"), preds1);
    EXPECT_NE(again.err.find("\"cache_misses\":0"), std::string::npos) << again.err;

    auto rat = run({"rationales", "-c", cfg, "-d", "tagmynews"});
    ASSERT_EQ(rat.code, 0) << rat.err;
    EXPECT_EQ(json::parse(rat.out)["records"], 14);
    auto ex = run({"export", "-c", cfg, "-d", "tagmynews", "--lambda1", "0.5"});
    ASSERT_EQ(ex.code, 0) << ex.err;
    auto exj = json::parse(ex.out);
    EXPECT_EQ(exj["total"], 42);
    auto manifest = json::parse(fx::slurp(exj["manifest"].get<std::string>()));
    EXPECT_DOUBLE_EQ(manifest["lambda1"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(manifest["lambda2"].get<double>(), 1.0);

    // Trainer-style predictions over the test split, scored by eval.
    fx::spit(dir / "trainer_out.jsonl", preds1);
    auto ev = run({"eval", "-c", cfg, "-d", "tagmynews", "--preds", (dir / "trainer_out.jsonl").string()});
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("ACC 100.00"), std::string::npos);

    auto stats = run({"cache", "-c", cfg, "stats"});
    ASSERT_EQ(stats.code, 0);
    EXPECT_GT(json::parse(stats.out)["entries"].get<int>(), 0);
    EXPECT_EQ(run({"cache", "-c", cfg, "verify"}).code, 0);
    EXPECT_EQ(run({"cache", "-c", cfg, "clear"}).code, 0);
    EXPECT_EQ(json::parse(run({"cache", "-c", cfg, "stats"}).out)["entries"], 0);
    EXPECT_EQ(run({"cache", "-c", cfg, "shred"}).code, cli::kUsage);
}

TEST(Cli, BackendFailuresExitThree) {
    TempDir dir("cli");
    fx::spit(dir / "empty_rules.jsonl", "{\"pattern\": \"never matches anything\", \"response\": \"x\"}\n");
    auto cfg = write_config(dir);
    auto body = fx::slurp(cfg);
    body.replace(body.find(fx::fixture("news7/rules.jsonl").string()),
                 fx::fixture("news7/rules.jsonl").string().size(), (dir / "empty_rules.jsonl").string());
    fx::spit(cfg, body);
    auto r = run({"run", "-c", cfg.string(), "-d", "tagmynews"});
    EXPECT_EQ(r.code, cli::kBackendFailure);
    EXPECT_EQ(last_json_line(r.err)["code"], 3);
}
