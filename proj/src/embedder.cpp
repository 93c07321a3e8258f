#include "abca/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace abca {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform in (0, 1].
double unit_open(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string normalize_for_embedding(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (c == '\'') continue;
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::vector<Concept> lexicon, std::uint64_t seed)
    : dimension_(dimension), lexicon_(std::move(lexicon)), seed_(seed) {
    if (dimension_ == 0) throw Error(ErrorKind::InvalidConfig, "embedding dimension must be positive");
    std::string signature;
    for (auto& c : lexicon_) {
        for (auto& p : c.phrases) p = normalize_for_embedding(p);
        std::erase_if(c.phrases, [](const std::string& p) { return p.empty(); });
        // Longest phrase first so "i dont know anything" beats "i dont know".
        std::stable_sort(c.phrases.begin(), c.phrases.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        signature += c.name + ':';
        for (const auto& p : c.phrases) signature += p + '|';
    }
    identity_ = "mock:" + std::to_string(dimension_) + ':' + std::to_string(seed_) + ':' +
                std::to_string(fnv1a64(signature));
}

MockEmbedder MockEmbedder::with_null_lexicon(std::size_t dimension,
                                             const std::vector<std::string>& null_phrases,
                                             std::uint64_t seed) {
    Concept null_concept{"null", null_phrases};
    for (const char* extra : {"i do not know", "unknown", "no data", "cannot be determined",
                              "insufficient evidence", "unknowable", "not enough information"})
        null_concept.phrases.emplace_back(extra);
    return MockEmbedder(dimension, {std::move(null_concept)}, seed);
}

std::vector<double> MockEmbedder::direction(std::string_view key) const {
    std::uint64_t state = fnv1a64(key) ^ seed_;
    std::vector<double> v(dimension_);
    for (std::size_t i = 0; i < dimension_; i += 2) {
        const double u1 = unit_open(splitmix64(state));
        const double u2 = unit_open(splitmix64(state));
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < dimension_) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    return v;
}

UnitVector MockEmbedder::embed_text(const std::string& text) const {
    std::string padded = ' ' + normalize_for_embedding(text) + ' ';
    std::vector<double> sum(dimension_, 0.0);
    bool any = false;
    auto add = [&](std::string_view key) {
        const auto d = direction(key);
        for (std::size_t i = 0; i < dimension_; ++i) sum[i] += d[i];
        any = true;
    };
    for (const auto& c : lexicon_) {
        for (const auto& phrase : c.phrases) {
            const std::string needle = ' ' + phrase + ' ';
            for (auto pos = padded.find(needle); pos != std::string::npos; pos = padded.find(needle)) {
                add("concept:" + c.name);
                padded.replace(pos, needle.size(), " ");
            }
        }
    }
    std::size_t start = 0;
    while (start < padded.size()) {
        const auto end = padded.find(' ', start);
        const auto len = (end == std::string::npos ? padded.size() : end) - start;
        if (len > 0) add("word:" + padded.substr(start, len));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (!any) add("empty:");
    return normalize(sum);
}

std::vector<UnitVector> MockEmbedder::embed(std::span<const std::string> texts) {
    std::vector<UnitVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_text(t));
    return out;
}

HttpEmbedderConfig HttpEmbedderConfig::from_env(std::size_t dimension) {
    HttpEmbedderConfig cfg;
    cfg.base_url = env_or("ABCA_EMBED_BASE", env_or("ABCA_API_BASE", "https://api.openai.com/v1"));
    cfg.api_key = env_or("ABCA_EMBED_KEY", env_or("ABCA_API_KEY", ""));
    cfg.model = env_or("ABCA_EMBED_MODEL", cfg.model);
    cfg.dimension = dimension;
    return cfg;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig cfg)
    : cfg_(std::move(cfg)),
      client_(cfg_.base_url, cfg_.api_key, cfg_.retry, cfg_.max_in_flight, std::chrono::seconds(60)) {}

std::string HttpEmbedder::identity() const {
    return "http:" + cfg_.base_url + ':' + cfg_.model + ':' + std::to_string(cfg_.dimension);
}

std::vector<UnitVector> HttpEmbedder::embed(std::span<const std::string> texts) {
    if (texts.empty()) throw Error(ErrorKind::ProviderError, "nothing to embed");
    const nlohmann::json body = {{"model", cfg_.model},
                                 {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto response = client_.post("/embeddings", body);
    try {
        const auto& data = response.at("data");
        if (data.size() != texts.size())
            throw Error(ErrorKind::ProviderError, "embedding count mismatch");
        std::vector<UnitVector> out(texts.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto index = data[i].value("index", i);
            if (index >= texts.size()) throw Error(ErrorKind::ProviderError, "embedding index out of range");
            const auto raw = data[i].at("embedding").get<std::vector<double>>();
            out[index] = normalize(raw, cfg_.dimension);
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ProviderError, std::string("unexpected embedding response: ") + e.what());
    }
}

}  // namespace abca
