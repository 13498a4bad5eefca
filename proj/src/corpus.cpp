#include "qlfr/corpus.hpp"

#include "qlfr/error.hpp"
#include "qlfr/random.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace qlfr {

using nlohmann::json;

Label::Label(std::string name) : name_(text::trim(name)), key_(text::normalize_label(name)) {
    if (key_.empty()) throw DataError("label name must be non-empty");
}

LabelSet::LabelSet(std::vector<std::string> names, std::string domain_name)
    : domain_(std::move(domain_name)) {
    labels_.reserve(names.size());
    for (auto& n : names) {
        Label l(std::move(n));
        if (contains(l.key())) throw DataError("duplicate label in label set: '" + l.name() + "'");
        labels_.push_back(std::move(l));
    }
}

std::optional<std::size_t> LabelSet::index_of(std::string_view name) const {
    const auto key = text::normalize_label(name);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].key() == key) return i;
    }
    return std::nullopt;
}

std::vector<std::string> LabelSet::names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto& l : labels_) out.push_back(l.name());
    return out;
}

const Example* Corpus::find(std::string_view id) const {
    for (const auto& e : examples) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::string Splits::hash() const {
    std::string buf;
    for (const auto* part : {&train, &val, &test}) {
        for (const auto& e : *part) {
            buf += e.id;
            buf += '\n';
        }
        buf += "--\n";
    }
    buf += std::to_string(seed);
    return text::sha256_hex(buf);
}

CorpusFormat parse_corpus_format(std::string_view s) {
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "tsv") return CorpusFormat::tsv;
    throw DataError("unknown corpus format '" + std::string(s) + "' (expected jsonl or tsv)");
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open dataset manifest " + manifest_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }
    static const std::set<std::string> kKeys = {"name", "path", "format", "labels", "count", "domain",
                                                "cue_profile"};
    for (const auto& [k, _] : j.items()) {
        if (!kKeys.contains(k)) throw DataError(manifest_path.string() + ": unknown manifest key '" + k + "'");
    }
    DatasetManifest m;
    try {
        m.name = j.at("name").get<std::string>();
        std::filesystem::path p = j.at("path").get<std::string>();
        m.path = p.is_absolute() ? p : manifest_path.parent_path() / p;
        m.format = parse_corpus_format(j.value("format", std::string("jsonl")));
        m.label_set = LabelSet(j.at("labels").get<std::vector<std::string>>(), j.value("domain", std::string()));
        if (j.contains("count")) m.expected_count = j.at("count").get<std::size_t>();
        m.cue_profile = j.value("cue_profile", std::string());
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }
    return m;
}

namespace {

std::string padded_index(std::size_t i) {
    std::string s = std::to_string(i);
    if (s.size() < 6) s.insert(0, 6 - s.size(), '0');
    return s;
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const LabelSet& label_set,
                   std::string name) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file " + path.string());

    Corpus corpus;
    corpus.name = name.empty() ? path.stem().string() : std::move(name);
    corpus.label_set = label_set;
    std::unordered_set<std::string> ids;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;

        Example ex;
        std::string raw_label;
        if (format == CorpusFormat::jsonl) {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception&) {
                fail_line(path, lineno, "malformed JSON record");
            }
            if (!j.is_object()) fail_line(path, lineno, "record is not a JSON object");
            if (!j.contains("text") || !j["text"].is_string()) fail_line(path, lineno, "missing string field \"text\"");
            if (!j.contains("label") || !j["label"].is_string()) fail_line(path, lineno, "missing string field \"label\"");
            ex.text = j["text"].get<std::string>();
            raw_label = j["label"].get<std::string>();
            if (j.contains("id")) {
                if (j["id"].is_string()) {
                    ex.id = j["id"].get<std::string>();
                } else if (j["id"].is_number_integer()) {
                    ex.id = std::to_string(j["id"].get<long long>());
                } else {
                    fail_line(path, lineno, "field \"id\" must be a string or integer");
                }
            }
        } else {
            auto tab = line.rfind('\t');
            if (tab == std::string::npos) fail_line(path, lineno, "expected 'text<TAB>label'");
            ex.text = line.substr(0, tab);
            raw_label = line.substr(tab + 1);
        }

        ex.text = text::trim(ex.text);
        if (ex.text.empty()) fail_line(path, lineno, "empty text");
        auto idx = label_set.index_of(raw_label);
        if (!idx) fail_line(path, lineno, "unknown label '" + raw_label + "'");
        ex.gold = label_set[*idx].name();
        if (ex.id.empty()) ex.id = padded_index(lineno - 1);
        if (!ids.insert(ex.id).second) fail_line(path, lineno, "duplicate id '" + ex.id + "'");
        corpus.examples.push_back(std::move(ex));
    }
    if (corpus.examples.empty()) throw DataError("corpus file " + path.string() + " is empty");
    return corpus;
}

Corpus load_corpus(const DatasetManifest& manifest) {
    Corpus c = load_corpus(manifest.path, manifest.format, manifest.label_set, manifest.name);
    if (manifest.expected_count && *manifest.expected_count != c.size()) {
        throw DataError("dataset '" + manifest.name + "': manifest declares " +
                        std::to_string(*manifest.expected_count) + " records, file has " + std::to_string(c.size()));
    }
    return c;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<Example>& examples, const LabelSet& labels) {
    std::vector<std::vector<std::size_t>> by_class(labels.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& gold = examples[i].gold;
        if (!gold) throw DataError("example '" + examples[i].id + "' has no gold label");
        auto idx = labels.index_of(*gold);
        if (!idx) throw DataError("example '" + examples[i].id + "' has label outside the label set");
        by_class[*idx].push_back(i);
    }
    return by_class;
}

}  // namespace

Splits sample_splits(const Corpus& corpus, int per_class, std::uint64_t seed) {
    if (per_class <= 0 || per_class % 2 != 0) {
        throw DataError("per_class must be a positive even integer, got " + std::to_string(per_class));
    }
    const auto k = static_cast<std::size_t>(per_class);
    auto by_class = indices_by_class(corpus.examples, corpus.label_set);

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < k) {
            throw DataError("class '" + corpus.label_set[c].name() + "' has " + std::to_string(by_class[c].size()) +
                            " examples, need " + std::to_string(k));
        }
    }

    Splits s;
    s.seed = seed;
    std::vector<bool> sampled(corpus.size(), false);
    std::vector<std::size_t> val_idx;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        std::mt19937_64 gen(rng::derive(seed, c));
        auto& pool = by_class[c];
        rng::partial_shuffle(pool, k, gen);
        for (std::size_t i = 0; i < k; ++i) {
            sampled[pool[i]] = true;
            (i < k / 2 ? s.train : s.val).push_back(corpus.examples[pool[i]]);
        }
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!sampled[i]) s.test.push_back(corpus.examples[i]);
    }
    return s;
}

Splits subsample_train(const Splits& splits, const LabelSet& labels, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw DataError("training ratio must be in (0, 1], got " + std::to_string(ratio));
    }
    auto by_class = indices_by_class(splits.train, labels);
    Splits out;
    out.seed = splits.seed;
    out.val = splits.val;
    out.test = splits.test;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        if (pool.empty()) continue;
        // Subtract a hair before ceil so 0.1 * 30 stays 3.
        auto want = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(pool.size()) - 1e-9));
        if (want == 0) throw DataError("ratio " + std::to_string(ratio) + " empties class '" + labels[c].name() + "'");
        std::mt19937_64 gen(rng::derive(seed, c));
        rng::partial_shuffle(pool, want, gen);
        pool.resize(want);
        std::sort(pool.begin(), pool.end());
        for (auto i : pool) out.train.push_back(splits.train[i]);
    }
    return out;
}

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& e : examples) {
        json j = {{"id", e.id}, {"text", e.text}};
        j["label"] = e.gold ? json(*e.gold) : json(nullptr);
        out << j.dump() << '\n';
    }
}

}  // namespace qlfr
