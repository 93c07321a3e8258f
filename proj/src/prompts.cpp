#include "abca/prompts.hpp"

#include <cctype>

#include "abca/error.hpp"
#include "abca/prompt_assets.inc"

namespace abca {

namespace {

constexpr std::string_view kNames[] = {
    "dagent_identify", "cagent_identify", "dagent_generate", "cagent_generate",
    "dagent_weights",  "cagent_weights",  "cot",             "answer",
    "abstain_type1",   "abstain_type2",   "aggregate",
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of the placeholder starting at text[pos] == '{', or 0.
std::size_t placeholder_at(std::string_view text, std::size_t pos) {
    if (pos + 2 >= text.size() || !is_ident_start(text[pos + 1])) return 0;
    std::size_t end = pos + 2;
    while (end < text.size() && is_ident_char(text[end])) ++end;
    if (end < text.size() && text[end] == '}') return end - pos + 1;
    return 0;
}

}  // namespace

std::string_view template_name(TemplateId id) { return kNames[static_cast<std::size_t>(id)]; }

TemplateId template_from_name(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kNames); ++i)
        if (kNames[i] == name) return static_cast<TemplateId>(i);
    throw Error(ErrorKind::UnknownTemplate, std::string(name));
}

std::string_view template_text(TemplateId id) {
    const auto name = template_name(id);
    for (const auto& [asset, text] : detail::kPromptAssets)
        if (asset == name) return text;
    throw Error(ErrorKind::UnknownTemplate, "asset missing for " + std::string(name));
}

std::vector<std::string> placeholders(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        if (auto len = placeholder_at(text, i)) {
            out.emplace_back(text.substr(i + 1, len - 2));
            i += len - 1;
        }
    }
    return out;
}

bool fully_rendered(std::string_view text) { return placeholders(text).empty(); }

std::string render_prompt(TemplateId id, const Bindings& bindings) {
    const auto text = template_text(id);
    std::string out;
    out.reserve(text.size() * 2);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto len = text[i] == '{' ? placeholder_at(text, i) : 0;
        if (len == 0) {
            out.push_back(text[i]);
            continue;
        }
        const auto name = text.substr(i + 1, len - 2);
        const auto it = bindings.find(name);
        if (it == bindings.end())
            throw Error(ErrorKind::MissingBinding,
                        std::string(name) + " (template " + std::string(template_name(id)) + ")");
        out += it->second;
        i += len - 1;
    }
    return out;
}

std::string render_prompt(std::string_view name, const Bindings& bindings) {
    return render_prompt(template_from_name(name), bindings);
}

}  // namespace abca
