#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "abca/records.hpp"

namespace abca {

enum class PayloadKind { dimensions, aspects, weights, cot, answer, final, judge, confidence };

struct CotText { std::string text; };
struct AnswerText { std::string text; };
struct FinalText { std::string text; };
struct JudgeVerdict { bool correct = false; };
struct Confidence { double probability = 0.0; };

using AgentPayload = std::variant<std::vector<Dimension>, std::vector<AspectCandidate>,
                                  std::vector<WeightProposal>, CotText, AnswerText, FinalText,
                                  JudgeVerdict, Confidence>;

// First well-formed JSON object or array in `raw`. Surrounding prose and code
// fences are skipped; single-quoted pseudo-JSON (as shown in the prompt
// format examples) is repaired. Throws MalformedPayload.
nlohmann::json extract_json(std::string_view raw);

// Extracts and validates. Throws MalformedPayload or SchemaViolation.
AgentPayload parse_agent_payload(std::string_view raw, PayloadKind expected);

std::vector<Dimension> parse_dimensions(std::string_view raw);
std::vector<AspectCandidate> parse_aspects(std::string_view raw);
std::vector<WeightProposal> parse_weights(std::string_view raw);
std::string parse_cot(std::string_view raw);
std::string parse_answer(std::string_view raw);
std::string parse_final(std::string_view raw);
bool parse_judge(std::string_view raw);
double parse_confidence(std::string_view raw);

// Byte range of `value` inside `raw` (first occurrence), if present verbatim.
std::optional<std::pair<std::size_t, std::size_t>> locate(std::string_view raw,
                                                           std::string_view value);

}  // namespace abca
