#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "abca/backend.hpp"

namespace abca {

// One scripted reply. `match` is a substring of the prompt (all message
// contents joined by a blank line) or, with `regex`, an ECMAScript pattern
// searched anywhere in it. `sample_index` restricts the rule to one draw.
struct MockRule {
    std::string match;
    bool regex = false;
    std::optional<int> sample_index;
    std::string response;
    std::optional<std::vector<TokenScore>> tokens;  // explicit logprobs
    std::optional<double> token_prob;               // uniform per-token probability

    std::shared_ptr<const std::regex> compiled;
};

struct MockScript {
    std::vector<MockRule> rules;  // first match wins
    std::optional<std::string> default_response;
    std::optional<double> default_token_prob;

    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& path);
};

// Splits text into maximal alphanumeric runs and single other characters.
// Concatenating the pieces reproduces the text.
std::vector<std::string> mock_tokenize(std::string_view text);

std::string prompt_text(const CompletionRequest& req);

// Deterministic scripted backend. Stateless apart from a call counter, so the
// same request always yields the same completion regardless of call order.
class MockBackend : public LlmBackend {
public:
    explicit MockBackend(MockScript script);

    Completion complete(const CompletionRequest& req) override;
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    MockScript script_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace abca
