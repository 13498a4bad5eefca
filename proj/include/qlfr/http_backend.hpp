#pragma once

#include "qlfr/backend.hpp"

#include <chrono>
#include <string>

namespace qlfr {

struct HttpBackendConfig {
    std::string name = "http";
    std::string base_url;  // e.g. "https://api.openai.com/v1"
    std::string model;
    std::string api_key_env;  // empty: no Authorization header
    std::chrono::seconds timeout{60};
    /// Score candidates through the legacy completions endpoint with
    /// echo + logprobs (vLLM and llama.cpp servers implement it).
    bool scoring = false;
};

/// OpenAI-style chat/completions client.
///
/// 429 and 5xx responses and connection failures surface as
/// TransientBackendError so CompletionClient retries them; a
/// "content_filter" finish reason surfaces as RefusalError.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string id() const override { return "http/" + config_.name; }
    std::string default_model() const override { return config_.model; }
    CompletionResponse complete(const CompletionRequest& request) override;
    bool supports_scoring() const override { return config_.scoring; }
    std::vector<CandidateScore> score_candidates(const ScoringRequest& request) override;

private:
    std::string post(const std::string& path, const std::string& body) const;

    HttpBackendConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string prefix_;  // path part of base_url, no trailing slash
    std::string api_key_;
};

}  // namespace qlfr
