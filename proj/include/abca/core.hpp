#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abca/error.hpp"

namespace abca {

enum class AnswerMode { categorical, open_ended };

struct Question {
    std::string id;
    std::string text;
    AnswerMode answer_mode = AnswerMode::open_ended;
    std::vector<std::string> options;  // nonempty iff categorical

    // Throws InvalidConfig when text is empty or options disagree with the mode.
    void validate() const;
};

struct TokenScore {
    std::string token;
    double logprob = 0.0;  // natural log, <= 0
};

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr double kZeroNormTolerance = 1e-12;  // normalize() refuses shorter vectors

// A vector of unit L2 norm. Only obtainable through normalize(), so holding
// one is proof of the invariant.
class UnitVector {
public:
    UnitVector() = default;

    std::size_t dimension() const noexcept { return components_.size(); }
    bool empty() const noexcept { return components_.empty(); }
    std::span<const double> components() const noexcept { return components_; }
    double operator[](std::size_t i) const { return components_[i]; }

    // Re-validates a stored vector (e.g. from an audit bundle) without
    // renormalising it.
    static UnitVector from_normalized(std::vector<double> components);

    friend bool operator==(const UnitVector&, const UnitVector&) = default;

private:
    explicit UnitVector(std::vector<double> c) : components_(std::move(c)) {}
    friend UnitVector normalize(std::span<const double> v);

    std::vector<double> components_;
};

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double dot(const UnitVector& a, const UnitVector& b);

// Angle between two unit vectors; the cosine is clamped to [-1, 1].
double angle_between(const UnitVector& a, const UnitVector& b);

UnitVector normalize(std::span<const double> v);
UnitVector normalize(std::span<const double> v, std::size_t expected_dimension);

// Per-token geometric-mean probability: exp(mean logprob). Removes length bias.
double nwgm_score(std::span<const TokenScore> tokens);

// Probability of a categorical option from its (joint) log-probability.
double categorical_score(double option_logprob);

}  // namespace abca
