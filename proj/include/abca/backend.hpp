#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "abca/core.hpp"

namespace abca {

enum class Role { system, user, assistant };
enum class Provenance { live, cache, mock };

struct Message {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    bool want_logprobs = false;
    // Distinguishes repeated draws of an identical prompt (the k-th CoT, the
    // l-th answer). Part of the cache key; never sent over the wire.
    int sample_index = 0;

    // Throws ProviderError when messages are empty or start with an assistant turn.
    void validate() const;

    friend bool operator==(const CompletionRequest&, const CompletionRequest&) = default;
};

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct Completion {
    std::string text;
    std::optional<std::vector<TokenScore>> tokens;
    Usage usage;
    Provenance provenance = Provenance::live;
};

// Raised when logprobs were requested but the provider returned none. The
// text-only completion is kept so callers can fall back without a second call.
class MissingLogprobsError : public Error {
public:
    explicit MissingLogprobsError(Completion partial)
        : Error(ErrorKind::MissingLogprobs, "provider returned no token logprobs"),
          partial_(std::move(partial)) {}
    const Completion& partial() const noexcept { return partial_; }

private:
    Completion partial_;
};

// A chat-completion provider. Implementations must be safe for concurrent use.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual Completion complete(const CompletionRequest& req) = 0;
};

// Text embedding provider. Implementations must be safe for concurrent use and
// deterministic for a given identity().
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<UnitVector> embed(std::span<const std::string> texts) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string identity() const = 0;

    UnitVector embed_one(const std::string& text);
};

std::string to_string(Role role);
Role role_from_string(const std::string& s);
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// Canonical form hashed into the cache key: a JSON object with sorted keys,
// compact separators, message content byte-for-byte (no whitespace folding).
std::string canonical_request(const CompletionRequest& req);

// Lowercase hex SHA-256 of canonical_request(req).
std::string cache_key(const CompletionRequest& req);

std::string sha256_hex(std::string_view data);

nlohmann::json to_json(const Completion& c);
Completion completion_from_json(const nlohmann::json& j);

}  // namespace abca
