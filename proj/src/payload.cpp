#include "abca/payload.hpp"

#include <cctype>

#include "abca/error.hpp"

namespace abca {

namespace {

using nlohmann::json;

// Index one past the bracket closing the value opened at text[start], or npos.
// Only double-quoted strings are recognised.
std::size_t matching_close(std::string_view text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{' || c == '[') ++depth;
        else if (c == '}' || c == ']') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

bool closes_single_quoted(std::string_view text, std::size_t quote) {
    for (std::size_t i = quote + 1; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == ',' || c == ':' || c == '}' || c == ']';
    }
    return true;
}

// Rewrites 'single quoted' strings into JSON strings. An apostrophe closes a
// string only when followed by a structural character.
std::string repair_single_quotes(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    enum { plain, dq, sq } state = plain;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        switch (state) {
            case plain:
                if (c == '"') state = dq;
                if (c == '\'') {
                    state = sq;
                    out.push_back('"');
                    continue;
                }
                out.push_back(c);
                break;
            case dq:
                out.push_back(c);
                if (c == '\\' && i + 1 < text.size()) out.push_back(text[++i]);
                else if (c == '"') state = plain;
                break;
            case sq:
                if (c == '\\' && i + 1 < text.size() && text[i + 1] == '\'') {
                    out.push_back('\'');
                    ++i;
                } else if (c == '\'' && closes_single_quoted(text, i)) {
                    out.push_back('"');
                    state = plain;
                } else if (c == '"') {
                    out += "\\\"";
                } else {
                    out.push_back(c);
                }
                break;
        }
    }
    return out;
}

std::optional<json> try_parse(std::string_view text, std::size_t start) {
    const auto end = matching_close(text, start);
    if (end == std::string_view::npos) return std::nullopt;
    auto parsed = json::parse(text.substr(start, end - start), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorKind::SchemaViolation, what); }

const json& require_array(const json& j, const char* what) {
    if (!j.is_array()) violation(std::string(what) + " payload must be a JSON array");
    return j;
}

const json& require_object(const json& j, const char* what) {
    if (!j.is_object()) violation(std::string(what) + " must be a JSON object");
    return j;
}

std::string required_string(const json& obj, const char* key, bool nonempty) {
    const auto it = obj.find(key);
    if (it == obj.end()) violation(std::string("missing field '") + key + "'");
    if (!it->is_string()) violation(std::string("field '") + key + "' must be a string");
    auto s = it->get<std::string>();
    if (nonempty && s.empty()) violation(std::string("field '") + key + "' is empty");
    return s;
}

std::string optional_string(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) violation(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

double unit_interval(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) violation(std::string("missing field '") + key + "'");
    if (!it->is_number()) violation(std::string("field '") + key + "' must be a number");
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) violation(std::string("field '") + key + "' outside [0, 1]");
    return v;
}

// Case-insensitive lookup so {"cot": ...} and {"CoT": ...} both parse.
const json* find_key(const json& obj, std::string_view key) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto& k = it.key();
        if (k.size() != key.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < k.size() && same; ++i)
            same = std::tolower(static_cast<unsigned char>(k[i])) ==
                   std::tolower(static_cast<unsigned char>(key[i]));
        if (same) return &*it;
    }
    return nullptr;
}

std::string text_field(std::string_view raw, std::string_view key) {
    const auto j = extract_json(raw);
    require_object(j, "payload");
    const json* v = find_key(j, key);
    if (!v) violation("missing field '" + std::string(key) + "'");
    if (v->is_string()) return v->get<std::string>();
    if (v->is_number() || v->is_boolean()) return v->dump();
    violation("field '" + std::string(key) + "' must be a string");
}

}  // namespace

json extract_json(std::string_view raw) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '{' && raw[i] != '[') continue;
        if (auto parsed = try_parse(raw, i)) return *parsed;
        const auto repaired = repair_single_quotes(raw.substr(i));
        if (auto parsed = try_parse(repaired, 0)) return *parsed;
    }
    throw Error(ErrorKind::MalformedPayload, "no JSON value found in response");
}

std::vector<Dimension> parse_dimensions(std::string_view raw) {
    const auto j = extract_json(raw);
    std::vector<Dimension> out;
    for (const auto& item : require_array(j, "dimensions")) {
        require_object(item, "dimension entry");
        out.push_back({required_string(item, "name", true), optional_string(item, "description"),
                       optional_string(item, "justification"), unit_interval(item, "score")});
    }
    return out;
}

std::vector<AspectCandidate> parse_aspects(std::string_view raw) {
    const auto j = extract_json(raw);
    std::vector<AspectCandidate> out;
    for (const auto& item : require_array(j, "aspects")) {
        require_object(item, "aspect entry");
        out.push_back({required_string(item, "value", true), optional_string(item, "description"),
                       optional_string(item, "justification")});
    }
    return out;
}

std::vector<WeightProposal> parse_weights(std::string_view raw) {
    const auto j = extract_json(raw);
    std::vector<WeightProposal> out;
    for (const auto& item : require_array(j, "weights")) {
        require_object(item, "weight entry");
        out.push_back({required_string(item, "value", true), unit_interval(item, "weight"),
                       optional_string(item, "justification")});
    }
    if (out.empty()) violation("weights payload is empty");
    return out;
}

std::string parse_cot(std::string_view raw) { return text_field(raw, "CoT"); }
std::string parse_answer(std::string_view raw) { return text_field(raw, "answer"); }
std::string parse_final(std::string_view raw) { return text_field(raw, "final_answer"); }

bool parse_judge(std::string_view raw) {
    const auto j = extract_json(raw);
    require_object(j, "judge payload");
    const json* v = find_key(j, "correct");
    if (!v || !v->is_boolean()) violation("judge payload needs boolean 'correct'");
    return v->get<bool>();
}

double parse_confidence(std::string_view raw) {
    const auto j = extract_json(raw);
    require_object(j, "confidence payload");
    return unit_interval(j, "probability");
}

AgentPayload parse_agent_payload(std::string_view raw, PayloadKind expected) {
    switch (expected) {
        case PayloadKind::dimensions: return parse_dimensions(raw);
        case PayloadKind::aspects: return parse_aspects(raw);
        case PayloadKind::weights: return parse_weights(raw);
        case PayloadKind::cot: return CotText{parse_cot(raw)};
        case PayloadKind::answer: return AnswerText{parse_answer(raw)};
        case PayloadKind::final: return FinalText{parse_final(raw)};
        case PayloadKind::judge: return JudgeVerdict{parse_judge(raw)};
        case PayloadKind::confidence: return Confidence{parse_confidence(raw)};
    }
    throw Error(ErrorKind::SchemaViolation, "unknown payload kind");
}

std::optional<std::pair<std::size_t, std::size_t>> locate(std::string_view raw,
                                                           std::string_view value) {
    if (value.empty()) return std::nullopt;
    const auto pos = raw.find(value);
    if (pos == std::string_view::npos) return std::nullopt;
    return std::pair{pos, pos + value.size()};
}

}  // namespace abca
