#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "abca/core.hpp"
#include "abca/records.hpp"
#include "abca/session.hpp"

namespace abca {

struct CoTCandidate {
    int index = 0;
    std::string text;
};

struct AnswerSample {
    int cot_index = 0;
    std::string text;
    double score = 1.0;            // (0, 1]
    bool self_rated = false;       // provider gave no logprobs; score was elicited
};

// p(c_j | x): fraction of the N draws that used CoT j.
struct MediatorDistribution {
    std::vector<double> probs;
};

// mu(c_j | x): mean score of the draws that used CoT j; empty where unused.
struct OutcomeRegression {
    std::vector<std::optional<double>> means;
};

struct AipwTerms {
    double plug_in = 0.0;     // sum_j p_j * mu_j over sampled j
    double correction = 0.0;  // (1/N) sum_l (a_l - mu(c_l)) / p(c_l)
    double tau = 0.0;
};

struct AspectEffect {
    std::string aspect;
    double tau = 0.0;
    double correction = 0.0;
    MediatorDistribution mediator;
    OutcomeRegression regression;
    std::vector<CoTCandidate> cots;
    std::string representative_answer;
    std::vector<AnswerSample> samples;
    bool degraded = false;  // at least one self-rated score
};

// The question text as bound into prompts; categorical questions get their
// options appended as a bulleted list.
std::string question_binding(const Question& q);

// K aspect-conditioned CoTs, one call each (sample_index = k).
// Throws SamplingFailed.
std::vector<CoTCandidate> sample_cots(const Question& q, const AspectCandidate& aspect,
                                      const Dimension& dim, int k, const Session& s);

// Uniform CoT index per draw, via rejection sampling on the raw 64-bit output
// so the sequence is identical on every standard library.
std::vector<int> draw_cot_indices(int n, int k, std::mt19937_64& rng);

// N answers from CoTs picked by draw_cot_indices; all indices are drawn before
// any call is made. Throws SamplingFailed.
std::vector<AnswerSample> sample_answers(const Question& q, const AspectCandidate& aspect,
                                         std::span<const CoTCandidate> cots, int n,
                                         const Session& s, std::mt19937_64& rng);

// Scores the answer span of a completion: NWGM for open-ended answers, the
// exponentiated joint logprob for categorical ones. Tokens overlapping the
// answer text are used when it can be located, otherwise all tokens.
double score_answer(const std::vector<TokenScore>& tokens, std::string_view answer, AnswerMode mode);

MediatorDistribution mediator_distribution(std::span<const AnswerSample> samples, int k);
OutcomeRegression outcome_regression(std::span<const AnswerSample> samples, int k);

// Throws EstimatorInconsistency when a sampled index has p = 0 or no mean.
AipwTerms aipw_terms(std::span<const AnswerSample> samples, const MediatorDistribution& mediator,
                     const OutcomeRegression& regression);
double aipw_effect(std::span<const AnswerSample> samples, const MediatorDistribution& mediator,
                   const OutcomeRegression& regression);

// Text of the best-scoring sample among those whose CoT attains max mu;
// ties resolve to the earliest sample.
std::string representative_answer(std::span<const AnswerSample> samples,
                                  const OutcomeRegression& regression);

// Per-aspect RNG seed, independent of scheduling order.
std::uint64_t aspect_seed(std::uint64_t seed, std::string_view question_id, std::size_t aspect_index);

AspectEffect estimate_aspect(const Question& q, const Dimension& dim, const AspectCandidate& aspect,
                             const Session& s, std::mt19937_64& rng);

}  // namespace abca
