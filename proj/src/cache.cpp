#include "abca/cache.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace abca {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string temp_suffix() {
    std::ostringstream os;
    os << ".tmp." << std::this_thread::get_id() << '.' << std::random_device{}();
    return os.str();
}

// A stored completion lacking tokens still answers a logprob request with
// MissingLogprobs, exactly like the provider did.
Completion checked(Completion c, const CompletionRequest& req) {
    if (req.want_logprobs && !c.tokens) throw MissingLogprobsError(std::move(c));
    return c;
}

}  // namespace

CompletionCache::CompletionCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create cache dir " + dir_.string() + ": " + ec.message());
}

std::optional<CacheEntry> CompletionCache::load(const std::string& key) const {
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    auto j = nlohmann::json::parse(in, nullptr, false);
    // A torn or foreign file is treated as a miss and overwritten later.
    if (j.is_discarded() || !j.is_object() || j.value("key", std::string()) != key) return std::nullopt;
    try {
        return CacheEntry{key, completion_from_json(j.at("completion")),
                          j.value("created_at", std::string())};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void CompletionCache::store(const std::string& key, const CompletionRequest& req,
                            const Completion& value) const {
    const nlohmann::json j = {
        {"key", key},
        {"created_at", utc_now()},
        {"request", nlohmann::json::parse(canonical_request(req))},
        {"completion", to_json(value)},
    };
    const auto final_path = dir_ / (key + ".json");
    const auto tmp_path = dir_ / (key + temp_suffix());
    {
        std::ofstream out(tmp_path, std::ios::binary);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp_path.string());
        out << j.dump(2) << '\n';
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) {
        std::filesystem::remove(tmp_path, ec);
        throw Error(ErrorKind::Io, "cannot publish cache entry " + final_path.string());
    }
}

CachedBackend::CachedBackend(std::shared_ptr<LlmBackend> inner, std::filesystem::path dir,
                             bool bypass)
    : inner_(std::move(inner)), cache_(std::move(dir)), bypass_(bypass) {}

Completion CachedBackend::fetch(const CompletionRequest& req, const std::string& key) {
    ++live_calls_;
    try {
        auto c = inner_->complete(req);
        if (!bypass_) cache_.store(key, req, c);
        return c;
    } catch (const MissingLogprobsError& e) {
        if (!bypass_) cache_.store(key, req, e.partial());
        throw;
    }
}

Completion CachedBackend::complete(const CompletionRequest& req) {
    req.validate();
    const auto key = cache_key(req);
    if (bypass_) return fetch(req, key);

    std::promise<Completion> promise;
    std::shared_future<Completion> future;
    bool leader = false;
    {
        std::lock_guard lock(mutex_);
        if (auto it = in_flight_.find(key); it != in_flight_.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            in_flight_.emplace(key, future);
            leader = true;
        }
    }
    if (!leader) {
        ++cache_hits_;
        auto shared = future.get();
        shared.provenance = Provenance::cache;
        return checked(std::move(shared), req);
    }

    try {
        if (auto hit = cache_.load(key)) {
            ++cache_hits_;
            hit->value.provenance = Provenance::cache;
            promise.set_value(std::move(hit->value));
        } else {
            promise.set_value(fetch(req, key));
        }
    } catch (const MissingLogprobsError& e) {
        promise.set_value(e.partial());
    } catch (...) {
        promise.set_exception(std::current_exception());
    }
    {
        std::lock_guard lock(mutex_);
        in_flight_.erase(key);
    }
    return checked(future.get(), req);
}

}  // namespace abca
