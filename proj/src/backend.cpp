#include "qlfr/backend.hpp"

#include "qlfr/cache.hpp"
#include "qlfr/error.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace qlfr {

std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    return FinishReason::error;
}

std::vector<CandidateScore> Backend::score_candidates(const ScoringRequest&) {
    throw CapabilityError("backend '" + id() + "' does not support candidate scoring");
}

CompletionResponse CountingBackend::complete(const CompletionRequest& request) {
    ++completions_;
    return inner_.complete(request);
}

std::vector<CandidateScore> CountingBackend::score_candidates(const ScoringRequest& request) {
    ++scorings_;
    return inner_.score_candidates(request);
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
    double d = static_cast<double>(initial_delay.count()) * std::pow(multiplier, std::max(0, attempt - 1));
    d = std::min(d, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(d));
}

CompletionClient::CompletionClient(Backend& backend, ResponseCache* cache, RetryPolicy retry,
                                   std::size_t max_concurrency)
    : backend_(backend),
      cache_(cache),
      retry_(retry),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, max_concurrency))),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

template <class F>
auto CompletionClient::with_retry(F&& call) -> decltype(call()) {
    for (int attempt = 1;; ++attempt) {
        try {
            slots_.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{slots_};
            return call();
        } catch (const TransientBackendError& e) {
            if (attempt >= retry_.max_attempts) {
                throw BackendError(std::string(e.what()) + " (gave up after " + std::to_string(attempt) +
                                   " attempts)");
            }
        }
        sleeper_(retry_.delay_for(attempt));
    }
}

CompletionResponse CompletionClient::complete(const CompletionRequest& request) {
    if (request.prompt.empty()) throw BackendError("completion request has an empty prompt");
    const auto backend_id = backend_.id();
    if (cache_) {
        if (auto hit = cache_->get(backend_id, request)) {
            ++hits_;
            return *std::move(hit);
        }
    }
    ++misses_;
    auto response = with_retry([&] { return backend_.complete(request); });
    if (response.finish_reason != FinishReason::error && cache_) cache_->put(backend_id, request, response);
    return response;
}

std::vector<CandidateScore> CompletionClient::score_candidates(const ScoringRequest& request) {
    if (request.candidates.empty()) throw BackendError("scoring request has no candidates");
    if (!backend_.supports_scoring()) {
        throw CapabilityError("backend '" + backend_.id() + "' does not support candidate scoring");
    }
    const auto backend_id = backend_.id();
    if (cache_) {
        if (auto hit = cache_->get(backend_id, request)) {
            ++hits_;
            return *std::move(hit);
        }
    }
    ++misses_;
    auto scores = with_retry([&] { return backend_.score_candidates(request); });
    if (scores.size() != request.candidates.size()) {
        throw BackendError("backend returned " + std::to_string(scores.size()) + " scores for " +
                           std::to_string(request.candidates.size()) + " candidates");
    }
    for (const auto& s : scores) {
        if (!std::isfinite(s.score)) throw BackendError("non-finite score for candidate '" + s.label + "'");
    }
    if (cache_) cache_->put(backend_id, request, scores);
    return scores;
}

}  // namespace qlfr
