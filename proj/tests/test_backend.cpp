#include "qlfr/backend.hpp"
#include "qlfr/cache.hpp"
#include "qlfr/error.hpp"
#include "qlfr/mock_backend.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

using namespace qlfr;
using namespace std::chrono_literals;
using qlfr::fx::TempDir;

namespace {

/// Fails with TransientBackendError `failures` times, then answers.
class FlakyBackend : public Backend {
public:
    explicit FlakyBackend(int failures) : remaining_(failures) {}
    std::string id() const override { return "flaky"; }
    std::string default_model() const override { return "m"; }
    CompletionResponse complete(const CompletionRequest& request) override {
        ++calls;
        if (remaining_-- > 0) throw TransientBackendError("temporarily unavailable");
        return {"echo: " + request.prompt, FinishReason::stop, {}, {}};
    }
    std::atomic<int> calls{0};

private:
    std::atomic<int> remaining_;
};

/// Records the peak number of concurrent complete() calls.
class SlowBackend : public Backend {
public:
    std::string id() const override { return "slow"; }
    std::string default_model() const override { return "m"; }
    CompletionResponse complete(const CompletionRequest& request) override {
        int now = ++inflight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(5ms);
        --inflight;
        return {request.prompt, FinishReason::stop, {}, {}};
    }
    std::atomic<int> inflight{0};
    std::atomic<int> peak{0};
};

CompletionRequest req(std::string prompt) {
    CompletionRequest r;
    r.model_id = "m";
    r.prompt = std::move(prompt);
    return r;
}

}  // namespace

TEST(RetryPolicy, ExponentialWithCap) {
    RetryPolicy p;
    EXPECT_EQ(p.delay_for(1), 500ms);
    EXPECT_EQ(p.delay_for(2), 1000ms);
    EXPECT_EQ(p.delay_for(3), 2000ms);
    EXPECT_EQ(p.delay_for(10), 8000ms);
}

TEST(Client, RetriesTransientFailures) {
    FlakyBackend flaky(3);
    CompletionClient client(flaky);
    std::vector<std::chrono::milliseconds> slept;
    client.set_sleeper([&](std::chrono::milliseconds d) { slept.push_back(d); });
    auto r = client.complete(req("hi"));
    EXPECT_EQ(r.text, "echo: hi");
    EXPECT_EQ(flaky.calls.load(), 4);
    EXPECT_EQ(slept, (std::vector<std::chrono::milliseconds>{500ms, 1000ms, 2000ms}));
}

TEST(Client, GivesUpAfterMaxAttempts) {
    FlakyBackend flaky(10);
    CompletionClient client(flaky);
    client.set_sleeper([](std::chrono::milliseconds) {});
    EXPECT_THROW(client.complete(req("hi")), BackendError);
    EXPECT_EQ(flaky.calls.load(), 4);
}

TEST(Client, RefusalIsNotRetried) {
    ScriptedBackend mock({MockRule{{"x"}, std::nullopt, {}, true}});
    CountingBackend counting(mock);
    CompletionClient client(counting);
    client.set_sleeper([](std::chrono::milliseconds) {});
    EXPECT_THROW(client.complete(req("x")), RefusalError);
    EXPECT_EQ(counting.calls(), 1u);
}

TEST(Client, ConcurrencyLimit) {
    SlowBackend slow;
    CompletionClient client(slow, nullptr, {}, 2);
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { client.complete(req("p" + std::to_string(i))); });
    threads.clear();
    EXPECT_LE(slow.peak.load(), 2);
    EXPECT_GE(slow.peak.load(), 1);
}

TEST(Cache, KeysAreContentAddressed) {
    auto a = ResponseCache::completion_key("b", req("p"));
    EXPECT_EQ(a, ResponseCache::completion_key("b", req("p")));
    EXPECT_NE(a, ResponseCache::completion_key("c", req("p")));
    EXPECT_NE(a, ResponseCache::completion_key("b", req("q")));
    auto hot = req("p");
    hot.temperature = 0.7;
    EXPECT_NE(a, ResponseCache::completion_key("b", hot));
    auto other_model = req("p");
    other_model.model_id = "m2";
    EXPECT_NE(a, ResponseCache::completion_key("b", other_model));
    EXPECT_EQ(a.size(), 64u);
}

TEST(Cache, WarmCacheSkipsBackend) {
    TempDir dir("cache");
    ScriptedBackend mock({MockRule{{""}, std::string("answer"), {}, false}});
    CountingBackend counting(mock);
    {
        ResponseCache cache(dir.path());
        CompletionClient client(counting, &cache);
        EXPECT_EQ(client.complete(req("one")).text, "answer");
        EXPECT_EQ(client.complete(req("one")).text, "answer");
        EXPECT_EQ(client.cache_hits(), 1u);
    }
    EXPECT_EQ(counting.calls(), 1u);
    ResponseCache reopened(dir.path());
    CompletionClient client(counting, &reopened);
    EXPECT_EQ(client.complete(req("one")).text, "answer");
    EXPECT_EQ(counting.calls(), 1u);
    EXPECT_EQ(reopened.stats().entries, 1u);
    EXPECT_TRUE(reopened.verify().empty());
    EXPECT_EQ(reopened.clear(), 1u);
    EXPECT_EQ(reopened.stats().entries, 0u);
}

TEST(Cache, ScoringIsCachedSeparately) {
    TempDir dir("cache");
    ScriptedBackend mock({MockRule{{""}, std::string("a"), {{"a", -1.0}, {"b", -2.0}}, false}});
    CountingBackend counting(mock);
    ResponseCache cache(dir.path());
    CompletionClient client(counting, &cache);
    ScoringRequest s{"m", "ctx", {"a", "b"}};
    auto first = client.score_candidates(s);
    auto second = client.score_candidates(s);
    ASSERT_EQ(second.size(), 2u);
    EXPECT_EQ(second[1].label, "b");
    EXPECT_DOUBLE_EQ(second[1].score, -2.0);
    EXPECT_EQ(counting.scorings(), 1u);
    client.complete(req("ctx"));
    EXPECT_EQ(cache.stats().entries, 2u);
}

TEST(Cache, TamperedEntryFailsVerification) {
    TempDir dir("cache");
    ScriptedBackend mock({MockRule{{""}, std::string("answer"), {}, false}});
    ResponseCache cache(dir.path());
    CompletionClient client(mock, &cache);
    client.complete(req("one"));
    for (const auto& f : std::filesystem::recursive_directory_iterator(dir.path() / "entries")) {
        if (!f.is_regular_file()) continue;
        auto body = fx::slurp(f.path());
        auto pos = body.find("\"one\"");
        ASSERT_NE(pos, std::string::npos);
        body.replace(pos, 5, "\"two\"");
        fx::spit(f.path(), body);
    }
    EXPECT_EQ(cache.verify().size(), 1u);
}

TEST(Mock, RulesFirstMatchAndErrors) {
    auto rules = ScriptedBackend::parse_rules(
        R"({"pattern": ["alpha", "beta"], "response": "both"}
{"pattern": "alpha", "response": "one"}
{"pattern": "refuse me", "refuse": true}
)");
    ScriptedBackend mock(rules);
    EXPECT_EQ(mock.complete(req("alpha beta")).text, "both");
    EXPECT_EQ(mock.complete(req("alpha")).text, "one");
    EXPECT_THROW(mock.complete(req("gamma")), BackendError);
    EXPECT_THROW(mock.complete(req("please refuse me")), RefusalError);
    EXPECT_FALSE(mock.supports_scoring());
    EXPECT_THROW(mock.score_candidates({"m", "alpha", {"a"}}), CapabilityError);
    EXPECT_EQ(mock.id().rfind("mock/", 0), 0u);
    EXPECT_NE(mock.id(), ScriptedBackend(ScriptedBackend::parse_rules(R"({"pattern":"x","response":"y"})")).id());
    EXPECT_THROW(ScriptedBackend::parse_rules(R"({"pattern": "x"})"), DataError);
    EXPECT_THROW(ScriptedBackend::parse_rules("not json"), DataError);
}
