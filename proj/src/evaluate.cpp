#include "qlfr/evaluate.hpp"

#include "qlfr/error.hpp"
#include "qlfr/text.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace qlfr {

using nlohmann::json;

namespace {

/// Gold index aligned with each prediction.
std::vector<std::size_t> align(const std::vector<Prediction>& preds, const std::vector<Example>& golds,
                               const LabelSet& labels) {
    if (preds.empty()) throw DataError("no predictions to score");
    if (preds.size() != golds.size()) {
        throw DataError("id mismatch: " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(golds.size()) + " gold examples");
    }
    std::unordered_map<std::string, std::size_t> gold_of;
    for (const auto& g : golds) {
        if (!g.gold) throw DataError("gold example '" + g.id + "' has no label");
        auto idx = labels.index_of(*g.gold);
        if (!idx) throw DataError("gold label '" + *g.gold + "' is not in the label set");
        if (!gold_of.emplace(g.id, *idx).second) throw DataError("duplicate gold id '" + g.id + "'");
    }
    std::vector<std::size_t> out;
    out.reserve(preds.size());
    std::unordered_map<std::string, bool> seen;
    for (const auto& p : preds) {
        auto it = gold_of.find(p.example_id);
        if (it == gold_of.end()) throw DataError("id mismatch: prediction for unknown example '" + p.example_id + "'");
        if (seen[p.example_id]) throw DataError("duplicate prediction for example '" + p.example_id + "'");
        seen[p.example_id] = true;
        out.push_back(it->second);
    }
    return out;
}

LabelSet labels_from_golds(const std::vector<Example>& golds) {
    std::vector<std::string> names;
    for (const auto& g : golds) {
        if (!g.gold) continue;
        bool known = false;
        for (const auto& n : names) known = known || text::normalize_label(n) == text::normalize_label(*g.gold);
        if (!known) names.push_back(*g.gold);
    }
    return LabelSet(names);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<Example>& golds, const LabelSet& labels) {
    const auto gold_idx = align(preds, golds, labels);
    const auto k = labels.size();

    EvalReport r;
    r.n = preds.size();
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    r.unparsed.assign(k, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto g = gold_idx[i];
        std::optional<std::size_t> p;
        if (preds[i].label) p = labels.index_of(*preds[i].label);
        if (!p) {
            ++r.unparsed[g];
            continue;
        }
        ++r.confusion[g][*p];
        if (*p == g) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = r.confusion[c][c];
        std::size_t predicted = 0;
        for (std::size_t g = 0; g < k; ++g) predicted += r.confusion[g][c];
        std::size_t support = r.unparsed[c];
        for (std::size_t p = 0; p < k; ++p) support += r.confusion[c][p];

        ClassScores s;
        s.label = labels[c].name();
        s.support = support;
        s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        s.recall = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        if (support == 0 && predicted == 0) r.zero_support_classes.push_back(s.label);
        f1_sum += s.f1;
        r.per_class.push_back(std::move(s));
    }
    r.macro_f1 = k ? f1_sum / static_cast<double>(k) : 0.0;
    return r;
}

double accuracy(const std::vector<Prediction>& preds, const std::vector<Example>& golds) {
    return evaluate(preds, golds, labels_from_golds(golds)).accuracy;
}

double macro_f1(const std::vector<Prediction>& preds, const std::vector<Example>& golds, const LabelSet& labels) {
    return evaluate(preds, golds, labels).macro_f1;
}

std::string report_to_json(const EvalReport& r, const LabelSet& labels) {
    json per_class = json::array();
    for (const auto& c : r.per_class) {
        per_class.push_back({{"label", c.label},
                             {"precision", c.precision},
                             {"recall", c.recall},
                             {"f1", c.f1},
                             {"support", c.support}});
    }
    json j = {{"accuracy", r.accuracy},
              {"macro_f1", r.macro_f1},
              {"n", r.n},
              {"labels", labels.names()},
              {"per_class", per_class},
              {"confusion", r.confusion},
              {"unparsed", r.unparsed},
              {"zero_support_classes", r.zero_support_classes},
              {"run_config_hash", r.run_config_hash}};
    j["config"] = r.config_json.empty() ? json(nullptr) : json::parse(r.config_json);
    j["created_at"] = r.created_at;
    return j.dump(2);
}

std::string render_report_table(const EvalReport& r, const std::string& title) {
    std::ostringstream out;
    out << title << "\n";
    out << "  ACC " << fixed(100.0 * r.accuracy, 2) << "  F1 " << fixed(100.0 * r.macro_f1, 2) << "  (n=" << r.n
        << ")\n";
    out << "  label                 P       R       F1      support\n";
    for (const auto& c : r.per_class) {
        std::string name = c.label;
        if (name.size() < 20) name.append(20 - name.size(), ' ');
        out << "  " << name << "  " << fixed(c.precision, 4) << "  " << fixed(c.recall, 4) << "  " << fixed(c.f1, 4)
            << "  " << c.support << "\n";
    }
    return out.str();
}

void write_predictions_jsonl(const std::filesystem::path& path, const std::vector<Prediction>& preds) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : preds) {
        json j = {{"example_id", p.example_id}};
        j["label"] = p.label ? json(*p.label) : json(nullptr);
        j["method"] = to_string(p.method);
        j["raw_output"] = p.raw_output;
        if (!p.flags.empty()) j["flags"] = p.flags;
        out << j.dump() << '\n';
    }
}

std::vector<Prediction> read_predictions_jsonl(const std::filesystem::path& path, const LabelSet& labels) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file " + path.string());
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            throw DataError(where + "malformed JSON");
        }
        if (!j.is_object() || !j.contains("example_id") || !j["example_id"].is_string()) {
            throw DataError(where + "missing string field \"example_id\"");
        }
        Prediction p;
        p.example_id = j["example_id"].get<std::string>();
        if (j.contains("label") && j["label"].is_string()) {
            auto idx = labels.index_of(j["label"].get<std::string>());
            if (idx) {
                p.label = labels[*idx].name();
            } else {
                p.flags.emplace_back("label_outside_set");
            }
        } else if (j.contains("label") && !j["label"].is_null()) {
            throw DataError(where + "\"label\" must be a string or null");
        }
        if (!p.label && !p.flagged("label_outside_set")) p.flags.emplace_back("unparsed");
        if (j.contains("method") && j["method"].is_string()) p.method = parse_predict_method(j["method"].get<std::string>());
        if (j.contains("raw_output") && j["raw_output"].is_string()) p.raw_output = j["raw_output"].get<std::string>();
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace qlfr
