#pragma once

#include <atomic>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "abca/backend.hpp"

namespace abca {

struct CacheEntry {
    std::string key;
    Completion value;
    std::string created_at;  // ISO-8601 UTC
};

// Content-addressed completion cache: one `<sha256>.json` file per request
// under `dir`. Files are written to a temp name and renamed into place.
class CompletionCache {
public:
    explicit CompletionCache(std::filesystem::path dir);

    std::optional<CacheEntry> load(const std::string& key) const;
    void store(const std::string& key, const CompletionRequest& req, const Completion& value) const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

// Decorates a backend with the on-disk cache and per-key single-flight, so
// concurrent identical requests produce one call to the wrapped backend.
class CachedBackend : public LlmBackend {
public:
    CachedBackend(std::shared_ptr<LlmBackend> inner, std::filesystem::path dir, bool bypass = false);

    Completion complete(const CompletionRequest& req) override;

    // Calls forwarded to the wrapped backend.
    std::size_t live_calls() const noexcept { return live_calls_.load(); }
    std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

private:
    Completion fetch(const CompletionRequest& req, const std::string& key);

    std::shared_ptr<LlmBackend> inner_;
    CompletionCache cache_;
    bool bypass_;
    std::mutex mutex_;
    std::map<std::string, std::shared_future<Completion>> in_flight_;
    std::atomic<std::size_t> live_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace abca
