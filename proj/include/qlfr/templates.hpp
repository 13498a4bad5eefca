#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace qlfr {

/// A registered prompt fragment. `text` may carry {placeholders}; `join` is
/// the separator placed between the step context and this instruction.
struct PromptTemplate {
    std::string text;
    std::string join = ". ";
};

/// Versioned id -> template map. The shipped registry file and builtin()
/// hold the same content.
class TemplateRegistry {
public:
    using Vars = std::map<std::string, std::string, std::less<>>;

    TemplateRegistry(std::string version, std::map<std::string, PromptTemplate, std::less<>> templates);

    static const TemplateRegistry& builtin();

    /// {"version": str, "templates": {id: {"text": str, "join": str} | str}}
    static TemplateRegistry from_file(const std::filesystem::path& path);
    static TemplateRegistry from_json(std::string_view json_text, const std::string& source = "<registry>");

    std::string to_json() const;

    const std::string& version() const noexcept { return version_; }
    bool has(std::string_view id) const { return templates_.find(id) != templates_.end(); }

    /// Throws ConfigError for unknown ids.
    const PromptTemplate& get(std::string_view id) const;

    /// Substitutes {name} placeholders. Substituted values are not rescanned.
    /// Throws ConfigError on a placeholder without a value.
    std::string render(std::string_view id, const Vars& vars = {}) const;

    const std::map<std::string, PromptTemplate, std::less<>>& all() const noexcept { return templates_; }

private:
    std::string version_;
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

namespace template_ids {
inline constexpr std::string_view short_text_context = "context.short_text";
inline constexpr std::string_view sse_identify = "sse.step1";
inline constexpr std::string_view sse_retrieve = "sse.step2";
inline constexpr std::string_view sse_rewrite = "sse.step3";
inline constexpr std::string_view da_identify = "da.step1";
inline constexpr std::string_view da_summarize = "da.step2";
inline constexpr std::string_view classify_context = "classify.context";
inline constexpr std::string_view classify_step4 = "classify.qlfr_step4";
inline constexpr std::string_view classify_bare = "classify.bare";
inline constexpr std::string_view classify_verbose = "classify.verbose";
}  // namespace template_ids

}  // namespace qlfr
