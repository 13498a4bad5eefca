#include "qlfr/http_backend.hpp"

#include "qlfr/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

namespace qlfr {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto& url = config_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("backend base_url needs a scheme: '" + url + "'");
    auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (config_.model.empty()) throw ConfigError("backend '" + config_.name + "' has no model");
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key) {
            throw ConfigError("backend '" + config_.name + "': environment variable " + config_.api_key_env +
                              " is not set");
        }
        api_key_ = key;
    }
}

std::string HttpBackend::post(const std::string& path, const std::string& body) const {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(config_.timeout);
    cli.set_read_timeout(config_.timeout);
    cli.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = cli.Post(prefix_ + path, headers, body, "application/json");
    if (!res) {
        throw TransientBackendError("http: " + origin_ + prefix_ + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientBackendError("http: status " + std::to_string(res->status) + " from " + prefix_ + path);
    }
    if (res->status != 200) {
        throw BackendError("http: status " + std::to_string(res->status) + " from " + prefix_ + path + ": " +
                           res->body.substr(0, 200));
    }
    return res->body;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    json body = {{"model", request.model_id.empty() ? config_.model : request.model_id},
                 {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                 {"max_tokens", request.max_tokens},
                 {"temperature", request.temperature}};
    if (!request.stop.empty()) body["stop"] = request.stop;

    const auto raw = post("/chat/completions", body.dump());
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::exception&) {
        throw BackendError("http: response is not JSON");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw BackendError("http: response has no choices");
    }
    const auto& choice = j["choices"][0];
    const auto reason = choice.value("finish_reason", std::string("stop"));
    if (reason == "content_filter") throw RefusalError("provider refused (content_filter)");

    CompletionResponse resp;
    const auto& msg = choice.value("message", json::object());
    if (msg.contains("refusal") && msg["refusal"].is_string()) {
        throw RefusalError("provider refused: " + msg["refusal"].get<std::string>());
    }
    if (!msg.contains("content") || !msg["content"].is_string()) throw BackendError("http: choice has no content");
    resp.text = msg["content"].get<std::string>();
    resp.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
    if (j.contains("usage") && j["usage"].is_object()) {
        resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        resp.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    if (j.contains("id") && j["id"].is_string()) resp.provider_meta["id"] = j["id"].get<std::string>();
    if (j.contains("model") && j["model"].is_string()) resp.provider_meta["model"] = j["model"].get<std::string>();
    return resp;
}

std::vector<CandidateScore> HttpBackend::score_candidates(const ScoringRequest& request) {
    if (!config_.scoring) return Backend::score_candidates(request);
    std::vector<CandidateScore> out;
    const auto prompt_len = static_cast<long long>(request.context.size());
    for (const auto& cand : request.candidates) {
        json body = {{"model", request.model_id.empty() ? config_.model : request.model_id},
                     {"prompt", request.context + " " + cand},
                     {"max_tokens", 0},
                     {"echo", true},
                     {"logprobs", 0},
                     {"temperature", 0.0}};
        json j;
        try {
            j = json::parse(post("/completions", body.dump()));
            const auto& lp = j.at("choices").at(0).at("logprobs");
            const auto& tokens = lp.at("token_logprobs");
            const auto& offsets = lp.at("text_offset");
            double total = 0.0;
            for (std::size_t i = 0; i < tokens.size() && i < offsets.size(); ++i) {
                if (offsets[i].get<long long>() >= prompt_len && tokens[i].is_number()) {
                    total += tokens[i].get<double>();
                }
            }
            out.push_back({cand, total});
        } catch (const json::exception& e) {
            throw BackendError(std::string("http: malformed logprobs response: ") + e.what());
        }
    }
    return out;
}

}  // namespace qlfr
