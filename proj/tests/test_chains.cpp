#include "qlfr/chains.hpp"
#include "qlfr/error.hpp"
#include "qlfr/mock_backend.hpp"
#include "qlfr/text.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace qlfr;

namespace {

const LabelSet& news() {
    static const LabelSet ls(fx::news_labels(), "news");
    return ls;
}

const Example kTennis{"tennis", "Del Potro says make French Open", "sport"};

ScriptedBackend tennis_backend() { return ScriptedBackend::from_file(fx::fixture("tennis/rules.jsonl")); }

ScriptedBackend catch_all() { return ScriptedBackend::from_file(fx::fixture("calls50/rules.jsonl")); }

}  // namespace

TEST(RenderStep, InstructionsAreVerbatim) {
    const std::string c11 = "Given the short text 'Del Potro says make French Open'";
    auto s1 = render_step(template_ids::sse_identify, {c11});
    EXPECT_EQ(s1.context, c11);
    EXPECT_EQ(s1.instruction, "identify key concepts.");
    EXPECT_EQ(s1.prompt, "Given the short text 'Del Potro says make French Open', identify key concepts.");
    auto s3 = render_step(template_ids::sse_rewrite, {c11, "K", "S"});
    EXPECT_EQ(s3.instruction.rfind("Refine and enhance the language", 0), 0u);
    EXPECT_EQ(s3.context, c11 + ". K. S");
    auto vars = TemplateRegistry::Vars{{"identification_cue", CueProfile::news().identification_cue},
                                       {"synthesis_cue", CueProfile::news().synthesis_cue}};
    auto d1 = render_step(template_ids::da_identify, {c11}, TemplateRegistry::builtin(), vars);
    EXPECT_EQ(d1.instruction,
              "identify the key components, consider the main entities, actions, and events described.");
    auto d2 = render_step(template_ids::da_summarize, {c11, "K2"}, TemplateRegistry::builtin(), vars);
    EXPECT_EQ(d2.instruction,
              "Provide a summary of the identified components, including their interrelations and the overall "
              "significance within the context of the text.");
    EXPECT_THROW(render_step("sse.step7", {c11}), ConfigError);
    EXPECT_THROW(render_step(template_ids::sse_identify, {}), DataError);
}

TEST(SseCot, TennisFullChain) {
    auto backend = tennis_backend();
    CompletionClient client(backend);
    auto trace = run_sse_cot(kTennis, news(), ChainVariant::full, client);
    ASSERT_FALSE(trace.error) << *trace.error;
    ASSERT_EQ(trace.steps.size(), 4u);
    EXPECT_EQ(trace.steps[0].output, "Del Potro; French Open");
    EXPECT_NE(trace.steps[1].output.find("tennis"), std::string::npos);
    EXPECT_EQ(trace.final_label(), "sport");
    EXPECT_EQ(trace.steps[3].template_id, "classify.qlfr_step4");
    EXPECT_EQ(trace.steps[3].context, "Given the short text " + trace.steps[2].output);

    auto scored = run_sse_cot(kTennis, news(), ChainVariant::full, client, {PredictStrategy::scored_argmax});
    EXPECT_EQ(scored.final_label(), "sport");
    EXPECT_EQ(scored.prediction->method, PredictMethod::scored);
}

TEST(SseCot, PrefixPropertyAndDeterminism) {
    auto backend = tennis_backend();
    CompletionClient client(backend);
    auto a = run_sse_cot(kTennis, news(), ChainVariant::full, client);
    auto b = run_sse_cot(kTennis, news(), ChainVariant::full, client);
    EXPECT_EQ(trace_to_json(a), trace_to_json(b));
    for (std::size_t i = 0; i + 1 < 3; ++i) {
        const auto& cur = a.steps[i];
        const auto& next = a.steps[i + 1];
        EXPECT_EQ(next.context.rfind(cur.context, 0), 0u) << i;
        EXPECT_GT(next.context.size(), cur.context.size());
        EXPECT_EQ(next.context, text::join_context(cur.context, cur.output));
    }
    for (const auto& s : a.steps) {
        EXPECT_EQ(s.prompt.substr(s.prompt.size() - s.instruction.size()), s.instruction) << s.template_id;
    }
}

TEST(SseCot, VariantCallCountsAndContent) {
    auto inner = catch_all();
    for (auto v : {ChainVariant::full, ChainVariant::no_rewrite, ChainVariant::no_retrieval, ChainVariant::no_both}) {
        CountingBackend counting(inner);
        CompletionClient client(counting);
        auto t = run_sse_cot({"x", "some headline", std::nullopt}, news(), v, client);
        EXPECT_EQ(counting.calls(), static_cast<std::size_t>(call_count(v))) << to_string(v);
        EXPECT_EQ(t.steps.size(), static_cast<std::size_t>(call_count(v)));
        EXPECT_EQ(t.final_label(), "world");
    }
    CompletionClient client(inner);
    auto nr = run_sse_cot({"x", "some headline", std::nullopt}, news(), ChainVariant::no_rewrite, client);
    const auto& prompt = nr.steps.back().prompt;
    EXPECT_NE(prompt.find("some headline"), std::string::npos);
    EXPECT_NE(prompt.find("Related background knowledge"), std::string::npos);
    auto nrt = run_sse_cot({"x", "some headline", std::nullopt}, news(), ChainVariant::no_retrieval, client);
    EXPECT_EQ(nrt.steps[0].template_id, "sse.step3");
    EXPECT_EQ(nrt.steps[0].context, "Given the short text 'some headline'");
}

TEST(SseCot, EmptyTextFailsBeforeAnyCall) {
    auto inner = catch_all();
    CountingBackend counting(inner);
    CompletionClient client(counting);
    EXPECT_THROW(run_sse_cot({"e", "   ", std::nullopt}, news(), ChainVariant::full, client), DataError);
    EXPECT_THROW(run_sse_cot({"e", "t", std::nullopt}, LabelSet{}, ChainVariant::full, client), DataError);
    EXPECT_EQ(counting.calls(), 0u);
}

TEST(SseCot, BackendFailureYieldsPartialTrace) {
    ScriptedBackend backend(ScriptedBackend::parse_rules(
        R"({"pattern": "retrieve related", "refuse": true}
{"pattern": "identify key concepts", "response": "concepts"}
)"));
    CompletionClient client(backend);
    auto t = run_sse_cot({"e", "text", std::nullopt}, news(), ChainVariant::full, client);
    EXPECT_EQ(t.steps.size(), 1u);
    EXPECT_TRUE(t.refused);
    EXPECT_EQ(t.error_step, 2);
    EXPECT_FALSE(t.final_label().has_value());

    ScriptedBackend unmatched(ScriptedBackend::parse_rules(R"({"pattern": "nothing here", "response": "x"})"));
    CompletionClient c2(unmatched);
    auto u = run_sse_cot({"e", "text", std::nullopt}, news(), ChainVariant::full, c2);
    EXPECT_TRUE(u.steps.empty());
    EXPECT_FALSE(u.refused);
    EXPECT_TRUE(u.error.has_value());
}

TEST(SseCot, UnparsedFinalLabelIsFlagged) {
    ScriptedBackend backend(ScriptedBackend::parse_rules(R"({"pattern": "", "response": "I cannot classify this."})"));
    CompletionClient client(backend);
    auto t = run_sse_cot({"e", "text", std::nullopt}, news(), ChainVariant::no_both, client);
    ASSERT_TRUE(t.prediction.has_value());
    EXPECT_FALSE(t.final_label().has_value());
    EXPECT_TRUE(t.prediction->flagged("unparsed"));
}

TEST(SseCot, TraceJsonRoundTrip) {
    auto backend = tennis_backend();
    CompletionClient client(backend);
    auto t = run_sse_cot(kTennis, news(), ChainVariant::full, client);
    auto line = trace_to_json(t);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    auto back = trace_from_json(line);
    EXPECT_EQ(trace_to_json(back), line);
    EXPECT_EQ(back.final_label(), "sport");
}

TEST(DaCot, DecomposeSnippet) {
    auto backend = ScriptedBackend::from_file(fx::fixture("decompose/rules.jsonl"));
    CountingBackend counting(backend);
    CompletionClient client(counting);
    Example ex{"decompose", "Intel unveils dual-core chips at developer forum", "sci_tech"};
    auto t = run_da_cot(ex, CueProfile::news(), client);
    ASSERT_FALSE(t.error) << *t.error;
    ASSERT_EQ(t.steps.size(), 2u);
    EXPECT_NE(t.steps[0].instruction.find("main entities, actions, and events"), std::string::npos);
    EXPECT_FALSE(t.steps[1].output.empty());
    EXPECT_EQ(counting.calls(), 2u);
    EXPECT_FALSE(t.final_label().has_value());
    EXPECT_THROW(run_da_cot({"e", "", std::nullopt}, CueProfile::news(), client), DataError);
    EXPECT_THROW(run_da_cot(ex, CueProfile{"x", "", "y"}, client), ConfigError);
}

TEST(CueProfiles, ShippedFileLoads) {
    auto profiles = load_cue_profiles(fx::source_path("data/cues.json"));
    ASSERT_TRUE(profiles.contains("news"));
    ASSERT_TRUE(profiles.contains("medical"));
    ASSERT_TRUE(profiles.contains("cs"));
    EXPECT_EQ(profiles["news"].identification_cue, CueProfile::news().identification_cue);
    EXPECT_EQ(profiles["news"].synthesis_cue, CueProfile::news().synthesis_cue);
}

TEST(FewShot, BuildsOneChainPerLabelInOrder) {
    auto exemplars = load_fewshot_exemplars(fx::fixture("news7/exemplars.json"));
    ASSERT_EQ(exemplars.size(), 7u);
    EXPECT_EQ(build_fewshot_context(exemplars, news(), FewShotMode::zero_shot), "");
    std::reverse(exemplars.begin(), exemplars.end());
    auto prefix = build_fewshot_context(exemplars, news(), FewShotMode::one_shot);
    std::size_t last = 0;
    for (const auto& l : news()) {
        const auto it = std::find_if(exemplars.begin(), exemplars.end(), [&](const auto& e) { return e.gold == l.name(); });
        auto pos = prefix.find("Given the short text '" + it->text + "'");
        ASSERT_NE(pos, std::string::npos) << l.name();
        EXPECT_GE(pos, last) << l.name();
        last = pos;
    }
    exemplars.pop_back();
    try {
        build_fewshot_context(exemplars, news(), FewShotMode::one_shot);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("'health'"), std::string::npos) << e.what();
    }
    exemplars.push_back(exemplars.front());
    EXPECT_THROW(build_fewshot_context(exemplars, news(), FewShotMode::one_shot), DataError);
}

TEST(FewShot, PrefixGoesIntoPromptsNotContexts) {
    auto backend = catch_all();
    CompletionClient client(backend);
    SseOptions opt;
    opt.fewshot_prefix = "EXEMPLARS\n\n";
    auto t = run_sse_cot({"x", "headline", std::nullopt}, news(), ChainVariant::full, client, opt);
    ASSERT_EQ(t.steps.size(), 4u);
    for (const auto& s : t.steps) {
        EXPECT_EQ(s.prompt.rfind("EXEMPLARS\n\n", 0), 0u);
        EXPECT_EQ(s.context.find("EXEMPLARS"), std::string::npos);
    }
}
