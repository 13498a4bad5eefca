#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qlfr {

/// A category name. Equality is on the normalized key (trim + ASCII case fold);
/// the display name keeps its original punctuation ("U.S.", "sci_tech").
class Label {
public:
    explicit Label(std::string name);

    const std::string& name() const noexcept { return name_; }
    const std::string& key() const noexcept { return key_; }

    friend bool operator==(const Label& a, const Label& b) noexcept { return a.key_ == b.key_; }

private:
    std::string name_;
    std::string key_;
};

/// Ordered, duplicate-free label set. Order is significant: label
/// injection and the classification prompt enumerate labels in this order,
/// and ties in scored prediction go to the earlier label.
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(std::vector<std::string> names, std::string domain_name = {});

    const std::vector<Label>& labels() const noexcept { return labels_; }
    const std::string& domain_name() const noexcept { return domain_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    const Label& operator[](std::size_t i) const { return labels_.at(i); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return index_of(name).has_value(); }
    std::vector<std::string> names() const;

    auto begin() const noexcept { return labels_.begin(); }
    auto end() const noexcept { return labels_.end(); }

private:
    std::vector<Label> labels_;
    std::string domain_;
};

struct Example {
    std::string id;
    std::string text;
    std::optional<std::string> gold;  // canonical label name from the LabelSet
};

struct Corpus {
    std::string name;
    std::vector<Example> examples;
    LabelSet label_set;

    std::size_t size() const noexcept { return examples.size(); }
    const Example* find(std::string_view id) const;
};

struct Splits {
    std::vector<Example> train;
    std::vector<Example> val;
    std::vector<Example> test;
    std::uint64_t seed = 0;

    /// Digest of the ordered id lists of all three parts plus the seed.
    std::string hash() const;
};

enum class CorpusFormat { jsonl, tsv };

CorpusFormat parse_corpus_format(std::string_view s);

/// Declares where a normalized dataset lives and what it must contain.
struct DatasetManifest {
    std::string name;
    std::filesystem::path path;  // resolved against the manifest's directory
    CorpusFormat format = CorpusFormat::jsonl;
    LabelSet label_set;
    std::optional<std::size_t> expected_count;
    std::string cue_profile;  // optional default DA-CoT profile for this dataset
};

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

/// Reads a corpus file. Errors carry the 1-based line number.
/// Missing ids are assigned as zero-padded line indices.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const LabelSet& label_set,
                   std::string name = {});

/// load_corpus + the manifest's expected count check.
Corpus load_corpus(const DatasetManifest& manifest);

/// Per class (LabelSet order), draws `per_class` examples uniformly without
/// replacement; the first half goes to train, the second half to val, and
/// every unsampled example goes to test in corpus order.
Splits sample_splits(const Corpus& corpus, int per_class, std::uint64_t seed);

/// Stratified subsample of the train part: ceil(ratio * class count) per class.
Splits subsample_train(const Splits& splits, const LabelSet& labels, double ratio, std::uint64_t seed);

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples);

}  // namespace qlfr
