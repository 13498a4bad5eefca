#include "qlfr/cache.hpp"

#include "qlfr/error.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace qlfr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json request_json(const CompletionRequest& r) {
    return {{"model_id", r.model_id},
            {"prompt", r.prompt},
            {"max_tokens", r.max_tokens},
            {"temperature", r.temperature},
            {"stop", r.stop}};
}

json request_json(const ScoringRequest& r) {
    return {{"model_id", r.model_id}, {"context", r.context}, {"candidates", r.candidates}};
}

json response_json(const CompletionResponse& r) {
    return {{"text", r.text},
            {"finish_reason", to_string(r.finish_reason)},
            {"usage", {{"prompt_tokens", r.usage.prompt_tokens}, {"completion_tokens", r.usage.completion_tokens}}},
            {"provider_meta", r.provider_meta}};
}

CompletionResponse response_from_json(const json& j) {
    CompletionResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
    r.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0);
    r.usage.completion_tokens = j.at("usage").value("completion_tokens", 0);
    r.provider_meta = j.value("provider_meta", std::map<std::string, std::string>{});
    return r;
}

std::string digest(std::string_view kind, std::string_view backend_id, const json& request) {
    json keyed = {{"kind", kind}, {"backend_id", backend_id}, {"request", request}};
    return text::sha256_hex(keyed.dump());
}

std::optional<json> read_json(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

std::string temp_suffix() {
    static std::atomic<unsigned long> counter{0};
    std::ostringstream ss;
    ss << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << counter++;
    return ss.str();
}

}  // namespace

ResponseCache::ResponseCache(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "entries");
}

std::string ResponseCache::completion_key(std::string_view backend_id, const CompletionRequest& request) {
    return digest("completion", backend_id, request_json(request));
}

std::string ResponseCache::scoring_key(std::string_view backend_id, const ScoringRequest& request) {
    return digest("scoring", backend_id, request_json(request));
}

fs::path ResponseCache::entry_path(const std::string& key) const {
    return root_ / "entries" / key.substr(0, 2) / (key + ".json");
}

void ResponseCache::write_entry(const std::string& key, const std::string& kind, const std::string& model_id,
                                const std::string& body) {
    const auto path = entry_path(key);
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += temp_suffix();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cache: cannot write " + tmp.string());
        out << body;
        out.flush();
        if (!out) throw Error("cache: short write to " + tmp.string());
    }
    fs::rename(tmp, path);

    json idx = {{"key", key}, {"kind", kind}, {"model_id", model_id}, {"created_at", text::utc_timestamp()}};
    std::lock_guard lock(index_mutex_);
    std::ofstream index(root_ / "index.jsonl", std::ios::app);
    index << idx.dump() << '\n';
}

std::optional<CompletionResponse> ResponseCache::get(std::string_view backend_id,
                                                     const CompletionRequest& request) const {
    const auto key = completion_key(backend_id, request);
    auto j = read_json(entry_path(key));
    if (!j) return std::nullopt;
    if (j->at("request") != request_json(request) || j->at("backend_id") != backend_id) {
        throw Error("cache: key collision on " + key);
    }
    return response_from_json(j->at("response"));
}

void ResponseCache::put(std::string_view backend_id, const CompletionRequest& request,
                        const CompletionResponse& response) {
    const auto key = completion_key(backend_id, request);
    json entry = {{"key", key},
                  {"kind", "completion"},
                  {"backend_id", backend_id},
                  {"request", request_json(request)},
                  {"response", response_json(response)},
                  {"created_at", text::utc_timestamp()}};
    write_entry(key, "completion", request.model_id, entry.dump(2));
}

std::optional<std::vector<CandidateScore>> ResponseCache::get(std::string_view backend_id,
                                                              const ScoringRequest& request) const {
    const auto key = scoring_key(backend_id, request);
    auto j = read_json(entry_path(key));
    if (!j) return std::nullopt;
    if (j->at("request") != request_json(request) || j->at("backend_id") != backend_id) {
        throw Error("cache: key collision on " + key);
    }
    std::vector<CandidateScore> out;
    for (const auto& s : j->at("scores")) {
        out.push_back({s.at("label").get<std::string>(), s.at("score").get<double>()});
    }
    return out;
}

void ResponseCache::put(std::string_view backend_id, const ScoringRequest& request,
                        const std::vector<CandidateScore>& scores) {
    const auto key = scoring_key(backend_id, request);
    json js = json::array();
    for (const auto& s : scores) js.push_back({{"label", s.label}, {"score", s.score}});
    json entry = {{"key", key},
                  {"kind", "scoring"},
                  {"backend_id", backend_id},
                  {"request", request_json(request)},
                  {"scores", js},
                  {"created_at", text::utc_timestamp()}};
    write_entry(key, "scoring", request.model_id, entry.dump(2));
}

ResponseCache::Stats ResponseCache::stats() const {
    Stats s;
    for (const auto& e : fs::recursive_directory_iterator(root_ / "entries")) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
            ++s.entries;
            s.bytes += e.file_size();
        }
    }
    return s;
}

std::vector<std::string> ResponseCache::verify() const {
    std::vector<std::string> bad;
    for (const auto& e : fs::recursive_directory_iterator(root_ / "entries")) {
        if (!e.is_regular_file() || e.path().extension() != ".json") continue;
        const auto stem = e.path().stem().string();
        auto j = read_json(e.path());
        if (!j || !j->contains("request") || !j->contains("backend_id") || !j->contains("kind")) {
            bad.push_back(stem);
            continue;
        }
        const auto kind = (*j)["kind"].get<std::string>();
        if (kind != "completion" && kind != "scoring") {
            bad.push_back(stem);
            continue;
        }
        if (digest(kind, (*j)["backend_id"].get<std::string>(), (*j)["request"]) != stem) bad.push_back(stem);
    }
    return bad;
}

std::size_t ResponseCache::clear() {
    std::lock_guard lock(index_mutex_);
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(root_ / "entries")) {
        if (e.is_regular_file() && e.path().extension() == ".json") ++n;
    }
    fs::remove_all(root_ / "entries");
    fs::remove(root_ / "index.jsonl");
    fs::create_directories(root_ / "entries");
    return n;
}

}  // namespace qlfr
