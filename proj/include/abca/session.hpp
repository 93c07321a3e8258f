#pragma once

#include <functional>
#include <string>

#include "abca/backend.hpp"
#include "abca/config.hpp"

namespace abca {

// What every stage needs to talk to the model.
struct Session {
    LlmBackend& llm;
    const AbcaConfig& cfg;
    std::string model_id;
};

CompletionRequest make_request(const Session& s, std::string prompt, double temperature,
                               bool want_logprobs = false, int sample_index = 0);

inline constexpr std::string_view kJsonOnlyReminder = "\n\nReturn ONLY the JSON.";

// Issues `req`; if `parse` throws MalformedPayload or SchemaViolation, re-asks
// up to cfg.parse_retries times with kJsonOnlyReminder appended to the prompt.
// `observe` sees every (prompt, raw response) pair, including failed ones.
// Backend errors propagate untouched; the last parse error is rethrown.
template <class Parse>
auto ask_parsed(const Session& s, CompletionRequest req, Parse&& parse,
                const std::function<void(const std::string&, const Completion&)>& observe = {})
    -> decltype(parse(std::declval<const Completion&>())) {
    for (int attempt = 0;; ++attempt) {
        const auto completion = s.llm.complete(req);
        if (observe) observe(req.messages.back().content, completion);
        try {
            return parse(completion);
        } catch (const Error& e) {
            const bool parse_error =
                e.kind() == ErrorKind::MalformedPayload || e.kind() == ErrorKind::SchemaViolation;
            if (!parse_error || attempt >= s.cfg.parse_retries) throw;
        }
        req.messages.back().content += kJsonOnlyReminder;
    }
}

}  // namespace abca
