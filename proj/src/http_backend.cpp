#include "abca/http_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <thread>

#include <httplib.h>

namespace abca {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status == 500 || status == 502 || status == 503 ||
           status == 504;
}

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env() {
    HttpBackendConfig cfg;
    cfg.base_url = env_or("ABCA_API_BASE", "https://api.openai.com/v1");
    cfg.api_key = env_or("ABCA_API_KEY", "");
    cfg.model_id = env_or("ABCA_MODEL", "gpt-4.1");
    return cfg;
}

ParsedUrl parse_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::InvalidConfig, "base URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

JsonHttpClient::JsonHttpClient(std::string base_url, std::string api_key, RetryPolicy retry,
                               int max_in_flight, std::chrono::seconds timeout)
    : url_(parse_base_url(base_url)),
      api_key_(std::move(api_key)),
      retry_(retry),
      timeout_(timeout),
      slots_(std::clamp(max_in_flight, 1, 1024)) {
    if (retry_.max_attempts < 1) throw Error(ErrorKind::InvalidConfig, "max_attempts must be >= 1");
}

nlohmann::json JsonHttpClient::post(const std::string& path, const nlohmann::json& body) {
    const auto payload = body.dump();
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto delay = retry_.base_delay;
    for (int attempt = 1;; ++attempt) {
        ErrorKind kind = ErrorKind::Transport;
        std::string detail;
        std::chrono::milliseconds wait = delay;
        {
            slots_.acquire();
            const std::unique_ptr<decltype(slots_), void (*)(decltype(slots_)*)> slot(
                &slots_, [](decltype(slots_)* sem) { sem->release(); });
            httplib::Client client(url_.origin);
            client.set_connection_timeout(timeout_);
            client.set_read_timeout(timeout_);
            client.set_write_timeout(timeout_);
            ++attempts_;
            auto res = client.Post(url_.path_prefix + path, headers, payload, "application/json");

            if (!res) {
                detail = "request failed: " + httplib::to_string(res.error());
            } else if (res->status >= 200 && res->status < 300) {
                auto parsed = nlohmann::json::parse(res->body, nullptr, false);
                if (parsed.is_discarded())
                    throw Error(ErrorKind::ProviderError, "response body is not JSON");
                return parsed;
            } else {
                detail = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512);
                if (res->status == 429) kind = ErrorKind::RateLimited;
                else if (!retryable_status(res->status)) throw Error(ErrorKind::ProviderError, detail);
                if (res->has_header("Retry-After")) {
                    const auto secs = std::atoi(res->get_header_value("Retry-After").c_str());
                    wait = std::max(wait, std::chrono::milliseconds(secs * 1000));
                }
            }
        }
        if (attempt >= retry_.max_attempts)
            throw Error(kind, detail + " (after " + std::to_string(attempt) + " attempts)");
        std::this_thread::sleep_for(std::min(wait, retry_.max_delay));
        delay = std::min(delay * 2, retry_.max_delay);
    }
}

HttpBackend::HttpBackend(HttpBackendConfig cfg)
    : cfg_(std::move(cfg)),
      client_(cfg_.base_url, cfg_.api_key, cfg_.retry, cfg_.max_in_flight, cfg_.timeout) {}

nlohmann::json HttpBackend::request_body(const CompletionRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    nlohmann::json body = {
        {"model", req.model_id},
        {"messages", std::move(messages)},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    if (req.want_logprobs) body["logprobs"] = true;
    return body;
}

Completion HttpBackend::parse_response(const nlohmann::json& body, bool want_logprobs) {
    try {
        const auto& choice = body.at("choices").at(0);
        Completion c;
        c.provenance = Provenance::live;
        const auto& content = choice.at("message").at("content");
        c.text = content.is_string() ? content.get<std::string>() : std::string();
        if (body.contains("usage") && body["usage"].is_object()) {
            c.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0);
            c.usage.completion_tokens = body["usage"].value("completion_tokens", 0);
        }
        if (choice.contains("logprobs") && choice["logprobs"].is_object()) {
            const auto& lp = choice["logprobs"];
            std::vector<TokenScore> tokens;
            if (lp.contains("content") && lp["content"].is_array()) {
                for (const auto& t : lp["content"])
                    tokens.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
            } else if (lp.contains("tokens") && lp.contains("token_logprobs")) {
                const auto& toks = lp["tokens"];
                const auto& lps = lp["token_logprobs"];
                for (std::size_t i = 0; i < std::min(toks.size(), lps.size()); ++i)
                    tokens.push_back({toks[i].get<std::string>(), lps[i].is_number() ? lps[i].get<double>() : 0.0});
            }
            for (auto& t : tokens) t.logprob = std::min(t.logprob, 0.0);
            if (!tokens.empty()) c.tokens = std::move(tokens);
        }
        if (want_logprobs && !c.tokens) throw MissingLogprobsError(c);
        if (!want_logprobs) c.tokens.reset();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ProviderError, std::string("unexpected response shape: ") + e.what());
    }
}

Completion HttpBackend::complete(const CompletionRequest& req) {
    req.validate();
    auto body = request_body(req);
    if (body["model"].get<std::string>().empty()) body["model"] = cfg_.model_id;
    return parse_response(client_.post("/chat/completions", body), req.want_logprobs);
}

}  // namespace abca
