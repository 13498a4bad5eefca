#include "qlfr/backend.hpp"
#include "qlfr/error.hpp"
#include "qlfr/http_backend.hpp"

#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace qlfr;
using nlohmann::json;

namespace {

/// Minimal OpenAI-compatible server on a loopback port.
class FakeServer {
public:
    FakeServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++chat_calls;
            last_auth = req.get_header_value("Authorization");
            auto body = json::parse(req.body);
            const auto prompt = body["messages"][0]["content"].get<std::string>();
            if (prompt == "flaky" && chat_calls < 3) {
                res.status = 503;
                return;
            }
            if (prompt == "ratelimit") {
                res.status = 429;
                return;
            }
            if (prompt == "bad request") {
                res.status = 400;
                res.set_content(R"({"error":"nope"})", "application/json");
                return;
            }
            json choice = {{"index", 0}, {"finish_reason", "stop"},
                           {"message", {{"role", "assistant"}, {"content", "reply to " + prompt}}}};
            if (prompt == "forbidden") choice["finish_reason"] = "content_filter";
            if (prompt == "long") choice["finish_reason"] = "length";
            json out = {{"id", "cmpl-1"}, {"model", body["model"]}, {"choices", json::array({choice})},
                        {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 4}}}};
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/v1/completions", [](const httplib::Request& req, httplib::Response& res) {
            auto body = json::parse(req.body);
            const auto prompt = body["prompt"].get<std::string>();
            // Context tokens get -9; the candidate continuation gets -0.5 (sport) or -2 per token.
            const auto split = prompt.rfind(' ');
            const auto cand = prompt.substr(split + 1);
            json tokens = json::array({-9.0, nullptr});
            json offsets = json::array({0, 1});
            tokens.push_back(cand == "sport" ? -0.5 : -2.0);
            offsets.push_back(static_cast<long long>(split));
            tokens.push_back(cand == "sport" ? -0.25 : -2.0);
            offsets.push_back(static_cast<long long>(split + 1));
            json out = {{"choices", json::array({{{"text", prompt},
                                                   {"logprobs", {{"token_logprobs", tokens}, {"text_offset", offsets}}}}})}};
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> chat_calls{0};
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpBackendConfig config_for(const FakeServer& s) {
    HttpBackendConfig c;
    c.name = "fake";
    c.base_url = s.base_url();
    c.model = "tiny";
    c.timeout = std::chrono::seconds(5);
    return c;
}

CompletionRequest req(std::string prompt) {
    CompletionRequest r;
    r.prompt = std::move(prompt);
    return r;
}

}  // namespace

TEST(HttpBackend, ChatCompletionRoundTrip) {
    FakeServer server;
    ::setenv("QLFR_TEST_KEY", "sk-test", 1);
    auto cfg = config_for(server);
    cfg.api_key_env = "QLFR_TEST_KEY";
    HttpBackend backend(cfg);
    EXPECT_EQ(backend.id(), "http/fake");
    auto r = backend.complete(req("hello"));
    EXPECT_EQ(r.text, "reply to hello");
    EXPECT_EQ(r.finish_reason, FinishReason::stop);
    EXPECT_EQ(r.usage.completion_tokens, 4);
    EXPECT_EQ(r.provider_meta.at("model"), "tiny");
    EXPECT_EQ(server.last_auth, "Bearer sk-test");
    EXPECT_EQ(backend.complete(req("long")).finish_reason, FinishReason::length);
}

TEST(HttpBackend, ErrorClassification) {
    FakeServer server;
    HttpBackend backend(config_for(server));
    EXPECT_THROW(backend.complete(req("ratelimit")), TransientBackendError);
    EXPECT_THROW(backend.complete(req("forbidden")), RefusalError);
    try {
        backend.complete(req("bad request"));
        FAIL();
    } catch (const TransientBackendError&) {
        FAIL() << "400 must not be retryable";
    } catch (const BackendError&) {
    }
}

TEST(HttpBackend, ClientRetriesServerErrors) {
    FakeServer server;
    HttpBackend backend(config_for(server));
    CompletionClient client(backend);
    client.set_sleeper([](std::chrono::milliseconds) {});
    EXPECT_EQ(client.complete(req("flaky")).text, "reply to flaky");
    EXPECT_EQ(server.chat_calls.load(), 3);
}

TEST(HttpBackend, ConnectionFailureIsTransient) {
    HttpBackendConfig c;
    c.base_url = "http://127.0.0.1:1/v1";
    c.model = "tiny";
    c.timeout = std::chrono::seconds(2);
    HttpBackend backend(c);
    EXPECT_THROW(backend.complete(req("x")), TransientBackendError);
}

TEST(HttpBackend, MissingCredentialIsConfigError) {
    ::unsetenv("QLFR_TEST_MISSING_KEY");
    HttpBackendConfig c;
    c.base_url = "http://127.0.0.1:1/v1";
    c.model = "tiny";
    c.api_key_env = "QLFR_TEST_MISSING_KEY";
    EXPECT_THROW(HttpBackend{c}, ConfigError);
    c.api_key_env.clear();
    c.base_url = "localhost/v1";
    EXPECT_THROW(HttpBackend{c}, ConfigError);
}

TEST(HttpBackend, ScoringSumsContinuationLogprobs) {
    FakeServer server;
    auto cfg = config_for(server);
    EXPECT_FALSE(HttpBackend(cfg).supports_scoring());
    cfg.scoring = true;
    HttpBackend backend(cfg);
    ASSERT_TRUE(backend.supports_scoring());
    ScoringRequest s{"tiny", "Given the short text x", {"sport", "world"}};
    auto scores = backend.score_candidates(s);
    ASSERT_EQ(scores.size(), 2u);
    EXPECT_DOUBLE_EQ(scores[0].score, -0.75);
    EXPECT_DOUBLE_EQ(scores[1].score, -4.0);
}
