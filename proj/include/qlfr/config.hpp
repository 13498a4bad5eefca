#pragma once

#include "qlfr/backend.hpp"
#include "qlfr/chains.hpp"
#include "qlfr/templates.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace qlfr {

struct BackendSpec {
    std::string name;
    std::string kind;  // "mock" | "http"
    std::string model;
    std::filesystem::path rules;  // mock
    std::string base_url;         // http
    std::string api_key_env;      // http
    bool scoring = false;         // http
    int timeout_s = 60;
    std::size_t max_concurrency = 4;
    int max_attempts = 4;
    int initial_delay_ms = 500;
};

struct DatasetSpec {
    std::string name;
    std::filesystem::path manifest;
    std::string cue_profile;           // empty: manifest's, then "news"
    std::filesystem::path exemplars;   // few-shot worked chains, optional
};

struct ExperimentDefaults {
    std::uint64_t seed = 13;
    int per_class = 40;
    std::string method = "qlfr";
    std::string variant = "full";
    std::string strategy = "parse_text";
    std::string style = "qlfr_step4";
    std::string incontext = "zero_shot";
    double train_ratio = 1.0;
    std::size_t limit = 0;
    std::string backend;
    std::size_t concurrency = 4;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double failure_threshold = 0.10;
    int reasoning_max_tokens = 256;
    int classification_max_tokens = 16;
    double temperature = 0.0;
    std::filesystem::path output_dir = "runs";
    std::filesystem::path cache_dir = ".qlfr-cache";
};

/// Parsed and cross-checked run configuration. Relative paths are resolved
/// against the config file's directory.
struct RunConfigFile {
    std::filesystem::path path;
    std::optional<std::filesystem::path> templates;
    std::map<std::string, DatasetSpec> datasets;
    std::map<std::string, BackendSpec> backends;
    std::map<std::string, CueProfile> cue_profiles;  // always holds "news"
    ExperimentDefaults experiment;

    const DatasetSpec& dataset(const std::string& name) const;
    const BackendSpec& backend(const std::string& name) const;
    const CueProfile& cue_profile(const std::string& name) const;
    TemplateRegistry registry() const;
};

/// TOML-style config with strict keys. Throws ConfigError naming the
/// offending key or the dangling reference.
RunConfigFile parse_config(const std::filesystem::path& path);
RunConfigFile parse_config_string(std::string_view toml_text, const std::filesystem::path& base_dir);

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);
RetryPolicy retry_policy(const BackendSpec& spec);

}  // namespace qlfr
