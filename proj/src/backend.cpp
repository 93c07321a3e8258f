#include "abca/backend.hpp"

#include <array>
#include <cstdio>

#include <openssl/evp.h>

namespace abca {

void CompletionRequest::validate() const {
    if (messages.empty()) throw Error(ErrorKind::ProviderError, "request has no messages");
    if (messages.front().role == Role::assistant)
        throw Error(ErrorKind::ProviderError, "first message must be system or user");
    if (!(temperature >= 0.0)) throw Error(ErrorKind::ProviderError, "negative temperature");
    if (max_tokens < 1) throw Error(ErrorKind::ProviderError, "max_tokens must be positive");
}

UnitVector Embedder::embed_one(const std::string& text) {
    auto out = embed(std::span<const std::string>(&text, 1));
    if (out.size() != 1) throw Error(ErrorKind::ProviderError, "embedder returned wrong count");
    return std::move(out.front());
}

std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw Error(ErrorKind::SchemaViolation, "unknown role '" + s + "'");
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::live: return "live";
        case Provenance::cache: return "cache";
        case Provenance::mock: return "mock";
    }
    return "live";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "live") return Provenance::live;
    if (s == "cache") return Provenance::cache;
    if (s == "mock") return Provenance::mock;
    throw Error(ErrorKind::SchemaViolation, "unknown provenance '" + s + "'");
}

std::string canonical_request(const CompletionRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages)
        messages.push_back({{"content", m.content}, {"role", to_string(m.role)}});
    // nlohmann::json objects are std::map backed, so keys serialise sorted.
    const nlohmann::json j = {
        {"max_tokens", req.max_tokens},
        {"messages", std::move(messages)},
        {"model_id", req.model_id},
        {"sample_index", req.sample_index},
        {"temperature", req.temperature},
        {"want_logprobs", req.want_logprobs},
    };
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, "SHA-256 digest failed");
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string cache_key(const CompletionRequest& req) { return sha256_hex(canonical_request(req)); }

nlohmann::json to_json(const Completion& c) {
    nlohmann::json j = {
        {"text", c.text},
        {"usage", {{"prompt_tokens", c.usage.prompt_tokens},
                   {"completion_tokens", c.usage.completion_tokens}}},
        {"provenance", to_string(c.provenance)},
    };
    if (c.tokens) {
        auto& arr = j["tokens"] = nlohmann::json::array();
        for (const auto& t : *c.tokens) arr.push_back({{"token", t.token}, {"logprob", t.logprob}});
    } else {
        j["tokens"] = nullptr;
    }
    return j;
}

Completion completion_from_json(const nlohmann::json& j) {
    Completion c;
    c.text = j.at("text").get<std::string>();
    if (j.contains("usage")) {
        c.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        c.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    c.provenance = provenance_from_string(j.value("provenance", std::string("live")));
    if (j.contains("tokens") && j["tokens"].is_array()) {
        std::vector<TokenScore> tokens;
        for (const auto& t : j["tokens"])
            tokens.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
        c.tokens = std::move(tokens);
    }
    return c;
}

}  // namespace abca
