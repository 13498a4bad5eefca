#pragma once

#include "qlfr/backend.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qlfr {

/// One line of a mock rule file.
///
/// `patterns` are substrings that must all occur in the prompt (an empty
/// pattern matches anything). A rule answers completions when it has a
/// `response`, candidate scoring when it has `scores`, and raises a refusal
/// when `refuse` is set.
struct MockRule {
    std::vector<std::string> patterns;
    std::optional<std::string> response;
    std::map<std::string, double> scores;
    bool refuse = false;
};

/// Offline responder driven by an ordered rule list. First match wins; no
/// match is an error. Deterministic, thread-safe (rules are immutable).
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<MockRule> rules, std::string model = "mock-model");

    /// Rule file: JSONL of {"pattern": str | [str...], "response": str,
    /// "scores": {label: number}, "refuse": bool}.
    static ScriptedBackend from_file(const std::filesystem::path& path, std::string model = "mock-model");
    static std::vector<MockRule> parse_rules(std::string_view jsonl, const std::string& source = "<rules>");

    std::string id() const override { return id_; }
    std::string default_model() const override { return model_; }
    CompletionResponse complete(const CompletionRequest& request) override;
    bool supports_scoring() const override { return has_scores_; }
    std::vector<CandidateScore> score_candidates(const ScoringRequest& request) override;

    const std::vector<MockRule>& rules() const noexcept { return rules_; }

private:
    std::vector<MockRule> rules_;
    std::string model_;
    std::string id_;
    bool has_scores_ = false;
};

}  // namespace qlfr
