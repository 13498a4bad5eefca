#include "qlfr/templates.hpp"

#include "qlfr/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace qlfr {

using nlohmann::json;

TemplateRegistry::TemplateRegistry(std::string version, std::map<std::string, PromptTemplate, std::less<>> templates)
    : version_(std::move(version)), templates_(std::move(templates)) {}

const TemplateRegistry& TemplateRegistry::builtin() {
    static const TemplateRegistry reg(
        "qlfr-v1",
        {
            {"context.short_text", {"Given the short text '{text}'", ""}},
            {"sse.step1", {"identify key concepts.", ", "}},
            {"sse.step2", {"retrieve related common knowledge.", ", "}},
            {"sse.step3",
             {"Refine and enhance the language to guarantee precision, fluidity, and legibility, whilst preserving "
              "the accuracy and wholeness of the integrated information.",
              ". "}},
            {"da.step1", {"identify the key components, consider {identification_cue}.", ", "}},
            {"da.step2", {"Provide a summary of the identified components, {synthesis_cue}.", ". "}},
            {"classify.context", {"Given the short text {content}", ""}},
            {"classify.qlfr_step4",
             {"classify it into one of the categories. The categories are {labels_quoted}.", ". "}},
            {"classify.bare", {"Categorize this text: '{content}'.", ""}},
            {"classify.verbose",
             {"Given the short text '{content}', classify it into one of the categories. The categories are "
              "{labels_plain}.",
              ""}},
        });
    return reg;
}

TemplateRegistry TemplateRegistry::from_json(std::string_view json_text, const std::string& source) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("templates") || !j["templates"].is_object()) {
        throw ConfigError(source + ": registry needs a \"templates\" object");
    }
    std::map<std::string, PromptTemplate, std::less<>> templates;
    for (const auto& [id, v] : j["templates"].items()) {
        PromptTemplate t;
        if (v.is_string()) {
            t.text = v.get<std::string>();
        } else if (v.is_object() && v.contains("text") && v["text"].is_string()) {
            t.text = v["text"].get<std::string>();
            t.join = v.value("join", std::string(". "));
        } else {
            throw ConfigError(source + ": template '" + id + "' must be a string or {text, join}");
        }
        templates.emplace(id, std::move(t));
    }
    return TemplateRegistry(j.value("version", std::string("unversioned")), std::move(templates));
}

TemplateRegistry TemplateRegistry::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template registry " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), path.string());
}

std::string TemplateRegistry::to_json() const {
    json t = json::object();
    for (const auto& [id, tpl] : templates_) t[id] = {{"text", tpl.text}, {"join", tpl.join}};
    return json{{"version", version_}, {"templates", t}}.dump(2);
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw ConfigError("unknown template id '" + std::string(id) + "'");
    return it->second;
}

std::string TemplateRegistry::render(std::string_view id, const Vars& vars) const {
    const auto& text = get(id).text;
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            auto close = text.find('}', i + 1);
            if (close != std::string::npos) {
                std::string_view name(text.data() + i + 1, close - i - 1);
                auto it = vars.find(name);
                if (it == vars.end()) {
                    throw ConfigError("template '" + std::string(id) + "' needs a value for {" + std::string(name) +
                                      "}");
                }
                out += it->second;
                i = close + 1;
                continue;
            }
        }
        out += text[i++];
    }
    return out;
}

}  // namespace qlfr
