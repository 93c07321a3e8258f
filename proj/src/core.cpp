#include "abca/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace abca {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::EmptyGeneration: return "EmptyGeneration";
        case ErrorKind::InvalidLogProb: return "InvalidLogProb";
        case ErrorKind::ZeroNorm: return "ZeroNorm";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::MissingBinding: return "MissingBinding";
        case ErrorKind::UnknownTemplate: return "UnknownTemplate";
        case ErrorKind::MalformedPayload: return "MalformedPayload";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::AspectDiscoveryFailed: return "AspectDiscoveryFailed";
        case ErrorKind::SamplingFailed: return "SamplingFailed";
        case ErrorKind::EmptySample: return "EmptySample";
        case ErrorKind::EstimatorInconsistency: return "EstimatorInconsistency";
        case ErrorKind::ZeroCentroid: return "ZeroCentroid";
        case ErrorKind::DegenerateWeights: return "DegenerateWeights";
        case ErrorKind::CompositionFailed: return "CompositionFailed";
        case ErrorKind::Transport: return "Transport";
        case ErrorKind::RateLimited: return "RateLimited";
        case ErrorKind::ProviderError: return "ProviderError";
        case ErrorKind::MissingLogprobs: return "MissingLogprobs";
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::MissingField: return "MissingField";
        case ErrorKind::JudgeFailed: return "JudgeFailed";
        case ErrorKind::ClassificationError: return "ClassificationError";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

void Question::validate() const {
    if (text.empty()) throw Error(ErrorKind::InvalidConfig, "question text is empty");
    const bool categorical = answer_mode == AnswerMode::categorical;
    if (categorical && options.empty())
        throw Error(ErrorKind::InvalidConfig, "categorical question '" + id + "' has no options");
    if (!categorical && !options.empty())
        throw Error(ErrorKind::InvalidConfig, "open-ended question '" + id + "' carries options");
}

double l2_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::DimensionMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double dot(const UnitVector& a, const UnitVector& b) { return dot(a.components(), b.components()); }

// 2 atan2(|a - b|, |a + b|) stays accurate near 0 and pi, where acos of the
// dot product loses about half the significant digits.
double angle_between(const UnitVector& a, const UnitVector& b) {
    if (a.dimension() != b.dimension())
        throw Error(ErrorKind::DimensionMismatch,
                    std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
    double diff = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        sum += (a[i] + b[i]) * (a[i] + b[i]);
    }
    return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

UnitVector normalize(std::span<const double> v) {
    if (v.empty()) throw Error(ErrorKind::ZeroNorm, "empty vector");
    const double norm = l2_norm(v);
    if (!(norm > kZeroNormTolerance)) throw Error(ErrorKind::ZeroNorm, "norm below tolerance");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return UnitVector(std::move(out));
}

UnitVector normalize(std::span<const double> v, std::size_t expected_dimension) {
    if (v.size() != expected_dimension)
        throw Error(ErrorKind::DimensionMismatch, "expected dimension " +
                                                      std::to_string(expected_dimension) + ", got " +
                                                      std::to_string(v.size()));
    return normalize(v);
}

UnitVector UnitVector::from_normalized(std::vector<double> components) {
    if (std::abs(l2_norm(components) - 1.0) > kUnitNormTolerance)
        throw Error(ErrorKind::ZeroNorm, "stored vector is not unit norm");
    return UnitVector(std::move(components));
}

double nwgm_score(std::span<const TokenScore> tokens) {
    if (tokens.empty()) throw Error(ErrorKind::EmptyGeneration, "no tokens to score");
    double sum = 0.0;
    for (const auto& t : tokens) {
        if (!(t.logprob <= 0.0))
            throw Error(ErrorKind::InvalidLogProb, "token '" + t.token + "' has positive logprob");
        sum += t.logprob;
    }
    // Floor at the smallest normal double so scores stay strictly positive.
    return std::max(std::exp(sum / static_cast<double>(tokens.size())),
                    std::numeric_limits<double>::min());
}

double categorical_score(double option_logprob) {
    if (!(option_logprob <= 0.0))
        throw Error(ErrorKind::InvalidLogProb, "option logprob must be <= 0");
    return std::max(std::exp(option_logprob), std::numeric_limits<double>::min());
}

}  // namespace abca
