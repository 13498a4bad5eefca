#pragma once

#include "qlfr/corpus.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace qlfr {

class ResponseCache;

struct CompletionRequest {
    std::string model_id;
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop;
};

enum class FinishReason { stop, length, error };

std::string to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct CompletionResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    Usage usage;
    std::map<std::string, std::string> provider_meta;
};

/// Score of one candidate label; comparable only within a single call.
struct CandidateScore {
    std::string label;
    double score = 0.0;
};

/// Asks for per-candidate continuation scores of `context`.
struct ScoringRequest {
    std::string model_id;
    std::string context;
    std::vector<std::string> candidates;
};

/// A completion provider. Implementations must be safe to call concurrently.
class Backend {
public:
    virtual ~Backend() = default;

    /// Stable identifier; part of every cache key.
    virtual std::string id() const = 0;
    virtual std::string default_model() const = 0;

    virtual CompletionResponse complete(const CompletionRequest& request) = 0;

    virtual bool supports_scoring() const { return false; }

    /// Throws CapabilityError unless supports_scoring().
    virtual std::vector<CandidateScore> score_candidates(const ScoringRequest& request);
};

/// Forwards to another backend and counts calls. Used to verify call budgets
/// and that warm-cache runs never reach the provider.
class CountingBackend : public Backend {
public:
    explicit CountingBackend(Backend& inner) : inner_(inner) {}

    std::string id() const override { return inner_.id(); }
    std::string default_model() const override { return inner_.default_model(); }
    CompletionResponse complete(const CompletionRequest& request) override;
    bool supports_scoring() const override { return inner_.supports_scoring(); }
    std::vector<CandidateScore> score_candidates(const ScoringRequest& request) override;

    std::size_t completions() const noexcept { return completions_.load(); }
    std::size_t scorings() const noexcept { return scorings_.load(); }
    std::size_t calls() const noexcept { return completions() + scorings(); }
    void reset() noexcept {
        completions_ = 0;
        scorings_ = 0;
    }

private:
    Backend& inner_;
    std::atomic<std::size_t> completions_{0};
    std::atomic<std::size_t> scorings_{0};
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_delay{500};
    std::chrono::milliseconds max_delay{8000};
    double multiplier = 2.0;

    /// Delay before retry number `attempt` (1-based), capped at max_delay.
    std::chrono::milliseconds delay_for(int attempt) const;
};

/// Decoding defaults applied when chains build requests.
struct DecodingDefaults {
    int reasoning_max_tokens = 256;
    int classification_max_tokens = 16;
    double temperature = 0.0;
};

/// Backend + cache + retry + concurrency limit: the handle every pipeline
/// stage calls through.
class CompletionClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    CompletionClient(Backend& backend, ResponseCache* cache = nullptr, RetryPolicy retry = {},
                     std::size_t max_concurrency = 8);

    /// Cache hit: returns the stored response without touching the backend.
    /// Miss: calls the backend (retrying transient failures), stores, returns.
    CompletionResponse complete(const CompletionRequest& request);

    /// Cached like complete(). Throws CapabilityError when unsupported.
    std::vector<CandidateScore> score_candidates(const ScoringRequest& request);

    bool supports_scoring() const { return backend_.supports_scoring(); }

    Backend& backend() noexcept { return backend_; }
    ResponseCache* cache() noexcept { return cache_; }
    std::string model() const { return model_.empty() ? backend_.default_model() : model_; }
    void set_model(std::string model) { model_ = std::move(model); }

    const DecodingDefaults& decoding() const noexcept { return decoding_; }
    void set_decoding(DecodingDefaults d) { decoding_ = d; }

    /// Replaces std::this_thread::sleep_for in retry backoff (tests).
    void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

    std::size_t cache_hits() const noexcept { return hits_.load(); }
    std::size_t cache_misses() const noexcept { return misses_.load(); }

private:
    template <class F>
    auto with_retry(F&& call) -> decltype(call());

    Backend& backend_;
    ResponseCache* cache_;
    RetryPolicy retry_;
    DecodingDefaults decoding_;
    std::string model_;
    std::counting_semaphore<> slots_;
    Sleeper sleeper_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

}  // namespace qlfr
