#pragma once

#include "qlfr/classify.hpp"
#include "qlfr/corpus.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace qlfr::fx {

inline std::filesystem::path fixture(const std::string& rel) {
    return std::filesystem::path(QLFR_FIXTURE_DIR) / rel;
}

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(QLFR_SOURCE_DIR) / rel;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("qlfr-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& body) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << body;
}

inline const std::vector<std::string>& news_labels() {
    static const std::vector<std::string> v = {"health", "sport", "entertainment", "business", "sci_tech", "U.S.",
                                               "world"};
    return v;
}

/// Published benchmark corpus shapes: total texts, classes, train size and train percentage.
struct CorpusShape {
    const char* name;
    std::size_t texts;
    std::size_t classes;
    std::size_t train;
    double percent;
};

inline const std::array<CorpusShape, 6>& corpus_shapes() {
    static const std::array<CorpusShape, 6> rows = {{
        {"MR", 10662, 2, 40, 0.38},
        {"Snippets", 12340, 8, 160, 1.30},
        {"Ohsumed", 7400, 23, 460, 6.22},
        {"StackOverflow", 20000, 20, 400, 2.00},
        {"TagMyNews", 32605, 7, 140, 0.43},
        {"AGNews", 20000, 4, 80, 0.40},
    }};
    return rows;
}

/// Synthetic corpus with `texts` examples over `classes` labels, dealt
/// round-robin so every class has at least floor(texts / classes) members.
inline Corpus synthetic_corpus(std::size_t texts, std::size_t classes, const std::string& name = "synthetic") {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < classes; ++c) names.push_back("class_" + std::to_string(c));
    Corpus corpus;
    corpus.name = name;
    corpus.label_set = LabelSet(names, name);
    corpus.examples.reserve(texts);
    for (std::size_t i = 0; i < texts; ++i) {
        corpus.examples.push_back({"s" + std::to_string(i), "synthetic text " + std::to_string(i), names[i % classes]});
    }
    return corpus;
}

/// Brute-force metric oracle over plain strings. Absent predictions are the
/// empty string, which never equals a gold label.
struct OracleScores {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

inline OracleScores oracle_scores(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                                  const std::vector<std::string>& labels) {
    OracleScores s;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i] ? 1 : 0;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    double sum = 0.0;
    for (const auto& c : labels) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (gold[i] == c && pred[i] == c) tp += 1;
            if (gold[i] != c && pred[i] == c) fp += 1;
            if (gold[i] == c && pred[i] != c) fn += 1;
        }
        const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        sum += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    s.macro_f1 = sum / static_cast<double>(labels.size());
    return s;
}

/// Converts string vectors to the library's prediction / example types.
inline void to_library(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                       std::vector<Prediction>& preds, std::vector<Example>& golds) {
    preds.clear();
    golds.clear();
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto id = "e" + std::to_string(i);
        golds.push_back({id, "text " + id, gold[i]});
        Prediction p;
        p.example_id = id;
        if (!pred[i].empty()) p.label = pred[i];
        preds.push_back(p);
    }
}

}  // namespace qlfr::fx
