#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "abca/backend.hpp"

namespace abca {

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};
};

// Connection settings for an OpenAI-style JSON gateway.
// Environment: ABCA_API_BASE (e.g. https://api.openai.com/v1), ABCA_API_KEY,
// ABCA_MODEL.
struct HttpBackendConfig {
    std::string base_url;
    std::string api_key;
    std::string model_id;
    RetryPolicy retry;
    int max_in_flight = 8;
    std::chrono::seconds timeout{120};

    static HttpBackendConfig from_env();
};

// Splits "scheme://host[:port][/prefix]" into the httplib origin and path prefix.
struct ParsedUrl {
    std::string origin;
    std::string path_prefix;
};
ParsedUrl parse_base_url(const std::string& url);

// Transport shared by the chat and embedding clients: POST a JSON body,
// retrying transport failures, 408/5xx and 429 with exponential backoff.
class JsonHttpClient {
public:
    JsonHttpClient(std::string base_url, std::string api_key, RetryPolicy retry, int max_in_flight,
                   std::chrono::seconds timeout);

    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    std::size_t attempts() const noexcept { return attempts_.load(); }

private:
    ParsedUrl url_;
    std::string api_key_;
    RetryPolicy retry_;
    std::chrono::seconds timeout_;
    std::counting_semaphore<1024> slots_;
    std::atomic<std::size_t> attempts_{0};
};

// Chat-completions client. Request: model, messages, temperature, max_tokens,
// logprobs. Response: choices[0].message.content plus per-token logprobs from
// choices[0].logprobs.content[] (or the legacy tokens/token_logprobs arrays).
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);

    Completion complete(const CompletionRequest& req) override;
    const std::string& model_id() const noexcept { return cfg_.model_id; }
    std::size_t attempts() const noexcept { return client_.attempts(); }

    static nlohmann::json request_body(const CompletionRequest& req);
    static Completion parse_response(const nlohmann::json& body, bool want_logprobs);

private:
    HttpBackendConfig cfg_;
    JsonHttpClient client_;
};

}  // namespace abca
