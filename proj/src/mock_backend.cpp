#include "qlfr/mock_backend.hpp"

#include "qlfr/error.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace qlfr {

using nlohmann::json;

namespace {

bool matches(const MockRule& rule, std::string_view prompt) {
    for (const auto& p : rule.patterns) {
        if (!text::contains(prompt, p)) return false;
    }
    return true;
}

std::string snippet(std::string_view s) {
    constexpr std::size_t kMax = 120;
    if (s.size() <= kMax) return std::string(s);
    return std::string(s.substr(0, kMax)) + "...";
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<MockRule> rules, std::string model)
    : rules_(std::move(rules)), model_(std::move(model)) {
    json canon = json::array();
    for (const auto& r : rules_) {
        canon.push_back({{"p", r.patterns}, {"r", r.response ? json(*r.response) : json(nullptr)},
                         {"s", r.scores}, {"x", r.refuse}});
        if (!r.scores.empty()) has_scores_ = true;
    }
    id_ = "mock/" + text::sha256_hex(canon.dump()).substr(0, 16);
}

std::vector<MockRule> ScriptedBackend::parse_rules(std::string_view jsonl, const std::string& source) {
    std::vector<MockRule> rules;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto where = source + ":" + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            throw DataError(where + "malformed JSON rule");
        }
        if (!j.is_object() || !j.contains("pattern")) throw DataError(where + "rule needs a \"pattern\"");
        MockRule r;
        const auto& p = j["pattern"];
        if (p.is_string()) {
            r.patterns.push_back(p.get<std::string>());
        } else if (p.is_array()) {
            for (const auto& s : p) {
                if (!s.is_string()) throw DataError(where + "pattern array must hold strings");
                r.patterns.push_back(s.get<std::string>());
            }
        } else {
            throw DataError(where + "\"pattern\" must be a string or array of strings");
        }
        if (j.contains("response")) {
            if (!j["response"].is_string()) throw DataError(where + "\"response\" must be a string");
            r.response = j["response"].get<std::string>();
        }
        if (j.contains("scores")) {
            if (!j["scores"].is_object()) throw DataError(where + "\"scores\" must be an object");
            for (const auto& [k, v] : j["scores"].items()) {
                if (!v.is_number()) throw DataError(where + "score for '" + k + "' is not a number");
                r.scores[k] = v.get<double>();
            }
        }
        r.refuse = j.value("refuse", false);
        if (!r.response && r.scores.empty() && !r.refuse) {
            throw DataError(where + "rule has none of \"response\", \"scores\", \"refuse\"");
        }
        rules.push_back(std::move(r));
    }
    return rules;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path, std::string model) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mock rule file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ScriptedBackend(parse_rules(ss.str(), path.string()), std::move(model));
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    for (const auto& r : rules_) {
        if (!(r.response || r.refuse) || !matches(r, request.prompt)) continue;
        if (r.refuse) throw RefusalError("mock refusal for prompt: " + snippet(request.prompt));
        CompletionResponse resp;
        resp.text = *r.response;
        resp.finish_reason = FinishReason::stop;
        resp.usage.prompt_tokens = static_cast<int>(request.prompt.size() / 4);
        resp.usage.completion_tokens = static_cast<int>(resp.text.size() / 4);
        resp.provider_meta["backend"] = "mock";
        return resp;
    }
    throw BackendError("mock: no rule matches prompt: " + snippet(request.prompt));
}

std::vector<CandidateScore> ScriptedBackend::score_candidates(const ScoringRequest& request) {
    if (!has_scores_) return Backend::score_candidates(request);
    for (const auto& r : rules_) {
        if (r.scores.empty() || !matches(r, request.context)) continue;
        std::vector<CandidateScore> out;
        for (const auto& c : request.candidates) {
            auto it = r.scores.find(c);
            if (it == r.scores.end()) throw BackendError("mock: scoring rule has no score for '" + c + "'");
            out.push_back({c, it->second});
        }
        return out;
    }
    throw BackendError("mock: no scoring rule matches context: " + snippet(request.context));
}

}  // namespace qlfr
