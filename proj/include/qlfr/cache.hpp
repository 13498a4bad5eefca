#pragma once

#include "qlfr/backend.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qlfr {

/// Content-addressed on-disk response cache.
///
/// Layout under the root directory:
///   entries/<k0k1>/<key>.json   one entry per request digest
///   index.jsonl                 append-only {key, kind, model_id, created_at}
///
/// Entries are written to a temp file and renamed into place, so a crash
/// never leaves a torn entry. Each entry stores its request; a hit whose
/// stored request differs from the lookup raises instead of returning.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    static std::string completion_key(std::string_view backend_id, const CompletionRequest& request);
    static std::string scoring_key(std::string_view backend_id, const ScoringRequest& request);

    std::optional<CompletionResponse> get(std::string_view backend_id, const CompletionRequest& request) const;
    void put(std::string_view backend_id, const CompletionRequest& request, const CompletionResponse& response);

    std::optional<std::vector<CandidateScore>> get(std::string_view backend_id, const ScoringRequest& request) const;
    void put(std::string_view backend_id, const ScoringRequest& request, const std::vector<CandidateScore>& scores);

    struct Stats {
        std::size_t entries = 0;
        std::size_t bytes = 0;
    };
    Stats stats() const;

    /// Re-reads every entry and recomputes its key. Returns keys that fail.
    std::vector<std::string> verify() const;

    /// Removes every entry and the index. Returns the number of entries removed.
    std::size_t clear();

private:
    std::filesystem::path entry_path(const std::string& key) const;
    void write_entry(const std::string& key, const std::string& kind, const std::string& model_id,
                     const std::string& body);

    std::filesystem::path root_;
    mutable std::mutex index_mutex_;
};

}  // namespace qlfr
