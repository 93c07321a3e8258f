#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abca {

enum class ErrorKind {
    EmptyGeneration,
    InvalidLogProb,
    ZeroNorm,
    DimensionMismatch,
    InvalidConfig,
    MissingBinding,
    UnknownTemplate,
    MalformedPayload,
    SchemaViolation,
    AspectDiscoveryFailed,
    SamplingFailed,
    EmptySample,
    EstimatorInconsistency,
    ZeroCentroid,
    DegenerateWeights,
    CompositionFailed,
    Transport,
    RateLimited,
    ProviderError,
    MissingLogprobs,
    MalformedRecord,
    MissingField,
    JudgeFailed,
    ClassificationError,
    EmptyDataset,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library carries one of the kinds above so
// callers can branch on policy (retry, fall back, abort) without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace abca
