#include "qlfr/config.hpp"

#include "qlfr/error.hpp"
#include "qlfr/http_backend.hpp"
#include "qlfr/mock_backend.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace qlfr {

namespace fs = std::filesystem;

const DatasetSpec& RunConfigFile::dataset(const std::string& name) const {
    auto it = datasets.find(name);
    if (it == datasets.end()) throw ConfigError("unknown dataset '" + name + "'");
    return it->second;
}

const BackendSpec& RunConfigFile::backend(const std::string& name) const {
    auto it = backends.find(name);
    if (it == backends.end()) throw ConfigError("unknown backend '" + name + "'");
    return it->second;
}

const CueProfile& RunConfigFile::cue_profile(const std::string& name) const {
    auto it = cue_profiles.find(name);
    if (it == cue_profiles.end()) throw ConfigError("unknown cue profile '" + name + "'");
    return it->second;
}

TemplateRegistry RunConfigFile::registry() const {
    return templates ? TemplateRegistry::from_file(*templates) : TemplateRegistry::builtin();
}

namespace {

class Table {
public:
    Table(const toml::table& t, std::string where) : t_(t), where_(std::move(where)) {}

    void allow(std::initializer_list<std::string_view> keys) const {
        std::set<std::string_view> ok(keys);
        for (const auto& [k, _] : t_) {
            if (!ok.contains(k.str())) throw ConfigError("unknown key '" + key(k.str()) + "'");
        }
    }

    template <class T>
    std::optional<T> get(std::string_view k) const {
        const auto* node = t_.get(k);
        if (!node) return std::nullopt;
        if constexpr (std::is_same_v<T, double>) {
            if (auto v = node->value<double>()) return *v;
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (auto v = node->value<std::int64_t>()) {
                if (*v < 0) throw ConfigError("'" + key(k) + "' must be non-negative");
                return static_cast<T>(*v);
            }
        } else {
            if (auto v = node->value_exact<T>()) return *v;
        }
        throw ConfigError("'" + key(k) + "' has the wrong type");
    }

    template <class T>
    void read(std::string_view k, T& out) const {
        if (auto v = get<T>(k)) out = *v;
    }

    const toml::table* sub(std::string_view k) const {
        const auto* node = t_.get(k);
        if (!node) return nullptr;
        if (!node->is_table()) throw ConfigError("'" + key(k) + "' must be a table");
        return node->as_table();
    }

    std::string key(std::string_view k) const { return where_.empty() ? std::string(k) : where_ + "." + std::string(k); }

private:
    const toml::table& t_;
    std::string where_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path existing(const fs::path& base, const std::string& p, const std::string& what) {
    auto path = resolve(base, p);
    if (!fs::exists(path)) throw ConfigError("dangling reference: " + what + " '" + path.string() + "' does not exist");
    return path;
}

}  // namespace

RunConfigFile parse_config_string(std::string_view toml_text, const fs::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(msg.str());
    }

    RunConfigFile cfg;
    cfg.cue_profiles.emplace("news", CueProfile::news());
    Table top(root, "");
    top.allow({"templates", "cues", "experiment", "datasets", "backends", "cue_profiles"});

    if (auto t = top.get<std::string>("templates")) cfg.templates = existing(base_dir, *t, "template registry");
    if (auto c = top.get<std::string>("cues")) {
        for (auto& [name, p] : load_cue_profiles(existing(base_dir, *c, "cue profile file"))) {
            cfg.cue_profiles.insert_or_assign(name, std::move(p));
        }
    }

    if (const auto* ct = top.sub("cue_profiles")) {
        for (const auto& [name, node] : *ct) {
            if (!node.is_table()) throw ConfigError("'cue_profiles." + std::string(name.str()) + "' must be a table");
            Table t(*node.as_table(), "cue_profiles." + std::string(name.str()));
            t.allow({"identification_cue", "synthesis_cue"});
            CueProfile p;
            p.domain_name = std::string(name.str());
            p.identification_cue = t.get<std::string>("identification_cue").value_or("");
            p.synthesis_cue = t.get<std::string>("synthesis_cue").value_or("");
            p.validate();
            cfg.cue_profiles.insert_or_assign(p.domain_name, std::move(p));
        }
    }

    if (const auto* et = top.sub("experiment")) {
        Table t(*et, "experiment");
        t.allow({"seed", "per_class", "method", "variant", "strategy", "style", "incontext", "train_ratio", "limit",
                 "backend", "concurrency", "lambda1", "lambda2", "failure_threshold", "reasoning_max_tokens",
                 "classification_max_tokens", "temperature", "output_dir", "cache_dir"});
        auto& e = cfg.experiment;
        t.read("seed", e.seed);
        t.read("per_class", e.per_class);
        t.read("method", e.method);
        t.read("variant", e.variant);
        t.read("strategy", e.strategy);
        t.read("style", e.style);
        t.read("incontext", e.incontext);
        t.read("train_ratio", e.train_ratio);
        t.read("limit", e.limit);
        t.read("backend", e.backend);
        t.read("concurrency", e.concurrency);
        t.read("lambda1", e.lambda1);
        t.read("lambda2", e.lambda2);
        t.read("failure_threshold", e.failure_threshold);
        t.read("reasoning_max_tokens", e.reasoning_max_tokens);
        t.read("classification_max_tokens", e.classification_max_tokens);
        t.read("temperature", e.temperature);
        if (auto p = t.get<std::string>("output_dir")) e.output_dir = resolve(base_dir, *p);
        else e.output_dir = base_dir / e.output_dir;
        if (auto p = t.get<std::string>("cache_dir")) e.cache_dir = resolve(base_dir, *p);
        else e.cache_dir = base_dir / e.cache_dir;
    } else {
        cfg.experiment.output_dir = base_dir / cfg.experiment.output_dir;
        cfg.experiment.cache_dir = base_dir / cfg.experiment.cache_dir;
    }

    if (const auto* dt = top.sub("datasets")) {
        for (const auto& [name, node] : *dt) {
            const auto where = "datasets." + std::string(name.str());
            if (!node.is_table()) throw ConfigError("'" + where + "' must be a table");
            Table t(*node.as_table(), where);
            t.allow({"manifest", "cue_profile", "exemplars"});
            DatasetSpec d;
            d.name = std::string(name.str());
            auto m = t.get<std::string>("manifest");
            if (!m) throw ConfigError("'" + where + ".manifest' is required");
            d.manifest = existing(base_dir, *m, "dataset manifest");
            d.cue_profile = t.get<std::string>("cue_profile").value_or("");
            if (auto ex = t.get<std::string>("exemplars")) d.exemplars = existing(base_dir, *ex, "few-shot exemplars");
            cfg.datasets.emplace(d.name, std::move(d));
        }
    }

    if (const auto* bt = top.sub("backends")) {
        for (const auto& [name, node] : *bt) {
            const auto where = "backends." + std::string(name.str());
            if (!node.is_table()) throw ConfigError("'" + where + "' must be a table");
            Table t(*node.as_table(), where);
            t.allow({"kind", "model", "rules", "base_url", "api_key_env", "scoring", "timeout_s", "max_concurrency",
                     "max_attempts", "initial_delay_ms"});
            BackendSpec b;
            b.name = std::string(name.str());
            b.kind = t.get<std::string>("kind").value_or("");
            t.read("model", b.model);
            t.read("timeout_s", b.timeout_s);
            t.read("max_concurrency", b.max_concurrency);
            t.read("max_attempts", b.max_attempts);
            t.read("initial_delay_ms", b.initial_delay_ms);
            if (b.kind == "mock") {
                auto r = t.get<std::string>("rules");
                if (!r) throw ConfigError("'" + where + ".rules' is required for a mock backend");
                b.rules = existing(base_dir, *r, "mock rule file");
                if (b.model.empty()) b.model = "mock-model";
            } else if (b.kind == "http") {
                auto u = t.get<std::string>("base_url");
                if (!u) throw ConfigError("'" + where + ".base_url' is required for an http backend");
                b.base_url = *u;
                if (b.model.empty()) throw ConfigError("'" + where + ".model' is required for an http backend");
                t.read("api_key_env", b.api_key_env);
                t.read("scoring", b.scoring);
            } else {
                throw ConfigError("'" + where + ".kind' must be \"mock\" or \"http\"");
            }
            cfg.backends.emplace(b.name, std::move(b));
        }
    }

    // Cross references.
    if (!cfg.experiment.backend.empty() && !cfg.backends.contains(cfg.experiment.backend)) {
        throw ConfigError("dangling reference: experiment.backend '" + cfg.experiment.backend + "' is not defined");
    }
    for (const auto& [name, d] : cfg.datasets) {
        if (!d.cue_profile.empty() && !cfg.cue_profiles.contains(d.cue_profile)) {
            throw ConfigError("dangling reference: datasets." + name + ".cue_profile '" + d.cue_profile +
                              "' is not defined");
        }
    }
    // Value checks that would otherwise fail mid-run.
    parse_chain_variant(cfg.experiment.variant);
    parse_predict_strategy(cfg.experiment.strategy);
    parse_prompt_style(cfg.experiment.style);
    parse_fewshot_mode(cfg.experiment.incontext);
    if (cfg.experiment.per_class <= 0 || cfg.experiment.per_class % 2) {
        throw ConfigError("experiment.per_class must be a positive even integer");
    }
    if (!(cfg.experiment.train_ratio > 0.0 && cfg.experiment.train_ratio <= 1.0)) {
        throw ConfigError("experiment.train_ratio must be in (0, 1]");
    }
    if (cfg.templates) cfg.registry();
    return cfg;
}

RunConfigFile parse_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    auto cfg = parse_config_string(ss.str(), base);
    cfg.path = path;
    return cfg;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.kind == "mock") return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(spec.rules, spec.model));
    if (spec.kind == "http") {
        HttpBackendConfig c;
        c.name = spec.name;
        c.base_url = spec.base_url;
        c.model = spec.model;
        c.api_key_env = spec.api_key_env;
        c.timeout = std::chrono::seconds(spec.timeout_s);
        c.scoring = spec.scoring;
        return std::make_unique<HttpBackend>(c);
    }
    throw ConfigError("backend '" + spec.name + "' has unknown kind '" + spec.kind + "'");
}

RetryPolicy retry_policy(const BackendSpec& spec) {
    RetryPolicy p;
    p.max_attempts = std::max(1, spec.max_attempts);
    p.initial_delay = std::chrono::milliseconds(spec.initial_delay_ms);
    return p;
}

}  // namespace qlfr
