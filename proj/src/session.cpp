#include "abca/session.hpp"

namespace abca {

CompletionRequest make_request(const Session& s, std::string prompt, double temperature,
                               bool want_logprobs, int sample_index) {
    CompletionRequest req;
    req.model_id = s.model_id;
    req.messages.push_back({Role::user, std::move(prompt)});
    req.temperature = temperature;
    req.max_tokens = s.cfg.max_tokens;
    req.want_logprobs = want_logprobs;
    req.sample_index = sample_index;
    return req;
}

}  // namespace abca
