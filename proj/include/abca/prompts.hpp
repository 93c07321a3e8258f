#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace abca {

// The eleven templates driving discovery, sampling and composition. Their text
// lives in assets/prompts/<name>.txt and is embedded verbatim at build time.
enum class TemplateId {
    dagent_identify,
    cagent_identify,
    dagent_generate,
    cagent_generate,
    dagent_weights,
    cagent_weights,
    cot,
    answer,
    abstain_type1,
    abstain_type2,
    aggregate,
};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::dagent_identify, TemplateId::cagent_identify, TemplateId::dagent_generate,
    TemplateId::cagent_generate, TemplateId::dagent_weights,  TemplateId::cagent_weights,
    TemplateId::cot,             TemplateId::answer,          TemplateId::abstain_type1,
    TemplateId::abstain_type2,   TemplateId::aggregate,
};

using Bindings = std::map<std::string, std::string, std::less<>>;

std::string_view template_name(TemplateId id);
TemplateId template_from_name(std::string_view name);  // throws UnknownTemplate

// Raw template text including its trailing newline.
std::string_view template_text(TemplateId id);

// Placeholders are `{identifier}` tokens; JSON braces in the format examples
// are not placeholders.
std::vector<std::string> placeholders(std::string_view text);

// Single-pass substitution: bound values are never rescanned, so user text
// containing braces is safe. Extra bindings are ignored.
std::string render_prompt(TemplateId id, const Bindings& bindings);
std::string render_prompt(std::string_view template_name, const Bindings& bindings);

// True when no `{identifier}` placeholder survives in `text`.
bool fully_rendered(std::string_view text);

}  // namespace abca
