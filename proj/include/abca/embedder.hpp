#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "abca/backend.hpp"
#include "abca/http_backend.hpp"

namespace abca {

inline constexpr std::uint64_t kMockEmbedderSeed = 0x61626361ULL;  // "abca"

// Lowercases ASCII, drops apostrophes, maps every other non-alphanumeric byte
// to a space and collapses runs of spaces.
std::string normalize_for_embedding(std::string_view text);

// Offline embedder. A text maps to the normalised sum of one pseudo-random
// Gaussian direction per word, seeded by (seed, word). Phrases listed in the
// concept lexicon collapse to a single shared direction per concept, which
// lets paraphrases of "I don't know" land on the same vector the way a real
// sentence encoder would place them close together.
class MockEmbedder : public Embedder {
public:
    struct Concept {
        std::string name;
        std::vector<std::string> phrases;
    };

    explicit MockEmbedder(std::size_t dimension, std::vector<Concept> lexicon = {},
                          std::uint64_t seed = kMockEmbedderSeed);

    // Lexicon with a single "null" concept covering `null_phrases` plus common
    // variants of the abstention vocabulary.
    static MockEmbedder with_null_lexicon(std::size_t dimension,
                                          const std::vector<std::string>& null_phrases,
                                          std::uint64_t seed = kMockEmbedderSeed);

    std::vector<UnitVector> embed(std::span<const std::string> texts) override;
    std::size_t dimension() const override { return dimension_; }
    std::string identity() const override { return identity_; }

    // Raw (unnormalised) Gaussian direction for a key.
    std::vector<double> direction(std::string_view key) const;

private:
    UnitVector embed_text(const std::string& text) const;

    std::size_t dimension_;
    std::vector<Concept> lexicon_;
    std::uint64_t seed_;
    std::string identity_;
};

// OpenAI-style embeddings endpoint: POST {base}/embeddings with
// {"model", "input": [...]}, reading data[i].embedding.
// Environment: ABCA_EMBED_BASE (falls back to ABCA_API_BASE), ABCA_EMBED_KEY
// (falls back to ABCA_API_KEY), ABCA_EMBED_MODEL (default all-MiniLM-L6-v2).
struct HttpEmbedderConfig {
    std::string base_url;
    std::string api_key;
    std::string model = "all-MiniLM-L6-v2";
    std::size_t dimension = 384;
    RetryPolicy retry;
    int max_in_flight = 8;

    static HttpEmbedderConfig from_env(std::size_t dimension);
};

class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderConfig cfg);

    std::vector<UnitVector> embed(std::span<const std::string> texts) override;
    std::size_t dimension() const override { return cfg_.dimension; }
    std::string identity() const override;

private:
    HttpEmbedderConfig cfg_;
    JsonHttpClient client_;
};

std::uint64_t fnv1a64(std::string_view data);

}  // namespace abca
