#pragma once

#include <span>
#include <string>
#include <vector>

#include "abca/backend.hpp"
#include "abca/config.hpp"
#include "abca/core.hpp"
#include "abca/session.hpp"

namespace abca {

struct AspectSummary {
    std::string aspect;
    double weight = 0.0;
    double tau = 0.0;
    std::string representative_answer;
    UnitVector embedding;
    double alpha = 0.0;  // weight * tau
};

enum class VerdictKind { AbstainType1, AbstainType2, Aggregate };

struct PolicyVerdict {
    VerdictKind kind = VerdictKind::Aggregate;
    double cad = 0.0;            // radians, [0, pi]
    double null_distance = 0.0;  // 1 - c . e_null
    UnitVector centroid;         // empty when the evidence cancelled exactly
    std::vector<double> per_aspect_theta;
    std::vector<std::string> caveat_aspects;  // Aggregate only
    bool zero_centroid = false;
    std::string final_text;
    bool composition_fallback = false;
};

inline constexpr double kZeroCentroidTolerance = 1e-9;
inline constexpr double kTauTolerance = 1e-9;
// Deviations within this of the CAD are rounding noise, not caveats.
inline constexpr double kCaveatTolerance = 1e-9;

// alpha = w * tau. Throws DegenerateWeights outside w in [0,1], tau in (0,1].
double significance(double weight, double tau);

// normalize(sum_i alpha_i e_i). Throws ZeroCentroid when the raw sum is
// shorter than kZeroCentroidTolerance, DegenerateWeights when no alpha is
// positive or any is negative.
UnitVector weighted_centroid(std::span<const UnitVector> embeddings, std::span<const double> alphas);

// arccos(e_i . c) per aspect, cosine clamped to [-1, 1].
std::vector<double> angular_deviations(std::span<const UnitVector> embeddings, const UnitVector& centroid);

// Alpha-weighted mean angular deviation. Throws DegenerateWeights when all
// alphas are zero.
double cad(std::span<const UnitVector> embeddings, std::span<const double> alphas,
           const UnitVector& centroid);

// normalize(mean of the normalised phrase embeddings), memoised per embedder
// identity and phrase list.
UnitVector null_embedding(const std::vector<std::string>& null_phrases, Embedder& embedder);

// Gate order: CAD > theta_max is Type-1; otherwise null_distance <= rho_null
// is Type-2; otherwise Aggregate.
VerdictKind gate(double cad_value, double null_distance, const AbcaConfig& cfg);

// Computes centroid, per-aspect deviations, CAD, null distance and the gate
// verdict. Exact cancellation of the evidence is reported as Type-1 with
// cad = pi. final_text is left empty.
PolicyVerdict decide(std::span<const AspectSummary> summaries, const AbcaConfig& cfg,
                     const UnitVector& null_direction);
PolicyVerdict decide(std::span<const AspectSummary> summaries, const AbcaConfig& cfg, Embedder& embedder);

// One backend call with the template matching the verdict; returns the
// parsed final_answer. Throws CompositionFailed.
std::string compose_response(const PolicyVerdict& verdict, std::span<const AspectSummary> summaries,
                             const Question& q, const Session& s);

// Deterministic text used when composition fails.
std::string fallback_response(const PolicyVerdict& verdict, std::span<const AspectSummary> summaries);

std::string to_string(VerdictKind kind);
VerdictKind verdict_kind_from_string(const std::string& s);

}  // namespace abca
