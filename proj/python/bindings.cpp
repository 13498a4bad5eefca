#include "qlfr/chains.hpp"
#include "qlfr/classify.hpp"
#include "qlfr/cli.hpp"
#include "qlfr/corpus.hpp"
#include "qlfr/error.hpp"
#include "qlfr/evaluate.hpp"
#include "qlfr/mock_backend.hpp"
#include "qlfr/rationales.hpp"
#include "qlfr/templates.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace qlfr;

namespace {

py::dict example_dict(const Example& e) {
    py::dict d;
    d["id"] = e.id;
    d["text"] = e.text;
    d["label"] = e.gold ? py::cast(*e.gold) : py::none();
    return d;
}

py::list id_list(const std::vector<Example>& xs) {
    py::list l;
    for (const auto& e : xs) l.append(e.id);
    return l;
}

void to_library(const std::vector<std::string>& gold, const std::vector<std::optional<std::string>>& pred,
                std::vector<Prediction>& preds, std::vector<Example>& golds) {
    if (gold.size() != pred.size()) throw DataError("gold and pred lengths differ");
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto id = std::to_string(i);
        golds.push_back({id, "_", gold[i]});
        Prediction p;
        p.example_id = id;
        p.label = pred[i];
        preds.push_back(std::move(p));
    }
}

py::dict trace_dict(const ChainTrace& t) {
    py::list steps;
    for (const auto& s : t.steps) {
        py::dict d;
        d["step_index"] = s.step_index;
        d["template_id"] = s.template_id;
        d["context"] = s.context;
        d["instruction"] = s.instruction;
        d["prompt"] = s.prompt;
        d["output"] = s.output;
        steps.append(d);
    }
    py::dict out;
    out["example_id"] = t.example_id;
    out["variant"] = to_string(t.variant);
    out["steps"] = steps;
    out["label"] = t.final_label() ? py::cast(*t.final_label()) : py::none();
    out["error"] = t.error ? py::cast(*t.error) : py::none();
    return out;
}

}  // namespace

PYBIND11_MODULE(_qlfr, m) {
    m.doc() = "Bindings for the qlfr short-text classification toolkit";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

    m.def("load_corpus", [](const std::filesystem::path& manifest) {
        auto c = load_corpus(load_manifest(manifest));
        py::list examples;
        for (const auto& e : c.examples) examples.append(example_dict(e));
        py::dict out;
        out["name"] = c.name;
        out["labels"] = c.label_set.names();
        out["examples"] = examples;
        return out;
    }, py::arg("manifest"), "Load a corpus through its dataset manifest.");

    m.def("sample_splits", [](const std::filesystem::path& manifest, int per_class, std::uint64_t seed) {
        auto c = load_corpus(load_manifest(manifest));
        auto s = sample_splits(c, per_class, seed);
        py::dict out;
        out["train"] = id_list(s.train);
        out["val"] = id_list(s.val);
        out["test"] = id_list(s.test);
        out["hash"] = s.hash();
        return out;
    }, py::arg("manifest"), py::arg("per_class"), py::arg("seed"));

    m.def("inject_labels", [](const std::string& text, const std::vector<std::string>& labels, const std::string& sep) {
        return inject_labels(text, LabelSet(labels), sep).rendered;
    }, py::arg("text"), py::arg("labels"), py::arg("separator") = " ");

    m.def("build_classification_prompt", [](const std::string& content, const std::vector<std::string>& labels,
                                            const std::string& style) {
        return build_classification_prompt(content, LabelSet(labels), parse_prompt_style(style));
    }, py::arg("content"), py::arg("labels"), py::arg("style") = "qlfr_step4");

    m.def("extract_label", [](const std::string& raw, const std::vector<std::string>& labels) {
        return extract_label(raw, LabelSet(labels)).label;
    }, py::arg("raw"), py::arg("labels"));

    m.def("accuracy", [](const std::vector<std::string>& gold, const std::vector<std::optional<std::string>>& pred) {
        std::vector<Prediction> preds;
        std::vector<Example> golds;
        to_library(gold, pred, preds, golds);
        return accuracy(preds, golds);
    }, py::arg("gold"), py::arg("pred"));

    m.def("macro_f1", [](const std::vector<std::string>& gold, const std::vector<std::optional<std::string>>& pred,
                         const std::vector<std::string>& labels) {
        std::vector<Prediction> preds;
        std::vector<Example> golds;
        to_library(gold, pred, preds, golds);
        return macro_f1(preds, golds, LabelSet(labels));
    }, py::arg("gold"), py::arg("pred"), py::arg("labels"));

    m.def("call_count", [](const std::string& variant) { return call_count(parse_chain_variant(variant)); });

    m.def("run_sse_cot", [](const std::string& text, const std::vector<std::string>& labels,
                            const std::filesystem::path& rules, const std::string& variant,
                            const std::string& strategy) {
        auto backend = ScriptedBackend::from_file(rules);
        CountingBackend counting(backend);
        CompletionClient client(counting);
        SseOptions opt;
        opt.strategy = parse_predict_strategy(strategy);
        py::gil_scoped_release release;
        auto t = run_sse_cot({"py", text, std::nullopt}, LabelSet(labels), parse_chain_variant(variant), client, opt);
        py::gil_scoped_acquire acquire;
        auto out = trace_dict(t);
        out["calls"] = counting.calls();
        return out;
    }, py::arg("text"), py::arg("labels"), py::arg("rules"), py::arg("variant") = "full",
       py::arg("strategy") = "parse_text", "Run one SSE-CoT chain against a mock rule file.");

    m.def("read_multitask", [](const std::filesystem::path& path) {
        py::list out;
        for (const auto& r : read_multitask_jsonl(path)) {
            py::dict d;
            d["input"] = r.input;
            d["target"] = r.target;
            d["task"] = to_string(r.task);
            out.append(d);
        }
        return out;
    }, py::arg("path"));

    m.def("cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
            py::gil_scoped_release release;
            code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run a qlfr subcommand in-process; returns (exit_code, stdout, stderr).");

    m.attr("TEMPLATE_VERSION") = TemplateRegistry::builtin().version();
}
