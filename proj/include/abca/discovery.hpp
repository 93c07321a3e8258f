#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "abca/core.hpp"
#include "abca/records.hpp"
#include "abca/session.hpp"

namespace abca {

enum class AgentRole { DAgent, CAgent };
enum class DebateStep { identify, generate, reconcile };

struct TranscriptEntry {
    AgentRole agent = AgentRole::DAgent;
    DebateStep step = DebateStep::identify;
    int round = 1;
    std::string prompt;
    std::string raw_response;
};

// Audit record of the debate, in call order.
struct DebateTranscript {
    std::vector<TranscriptEntry> entries;

    void add(AgentRole agent, DebateStep step, int round, std::string prompt, std::string raw);
    int rounds(DebateStep step) const;
};

struct WeightedAspect {
    AspectCandidate aspect;
    double weight = 0.0;
};

struct AspectFrame {
    std::string question_id;
    Dimension dimension;
    std::vector<WeightedAspect> aspects;
    DebateTranscript transcript;

    // 1 <= |aspects| <= max_aspects, weights in [0, 1] summing to 1 within 1e-6.
    void validate(int max_aspects) const;
};

inline constexpr double kWeightSumTolerance = 1e-6;

// Step 1: T rounds of DAgent proposal and CAgent critique. The critic's
// zero-scored entries are rejections. Returns the top-scored survivor of the
// latest round that had any (ties: earliest in the critic's ranking).
// Throws AspectDiscoveryFailed.
Dimension identify_dimension(const Question& q, const Session& s, DebateTranscript& transcript);

// Step 2: T rounds of aspect proposal and validation. Each round the critic
// sees the previous survivors followed by new proposals. Values are deduped
// case-insensitively (first kept) and cut to max_aspects in critic order.
// Throws AspectDiscoveryFailed.
std::vector<AspectCandidate> generate_aspects(const Question& q, const Dimension& dim,
                                              const Session& s, DebateTranscript& transcript);

// Step 3: alternate DAgent weights and CAgent assessment until their L1
// distance drops below weight_convergence_threshold or T rounds elapse; the
// result is the renormalised mean of the last pair.
std::vector<WeightedAspect> reconcile_weights(const Question& q, const Dimension& dim,
                                              const std::vector<AspectCandidate>& aspects,
                                              const Session& s, DebateTranscript& transcript);

// Elementwise mean renormalised to sum 1. Throws SchemaViolation on arity
// mismatch or an all-zero result.
std::vector<double> average_weights(std::span<const double> dagent, std::span<const double> cagent);

// Rescales to sum 1. Throws SchemaViolation when the sum is not positive.
std::vector<double> renormalize(std::vector<double> weights);

double l1_distance(std::span<const double> a, std::span<const double> b);

// Orders an agent's weight list to match `aspects`: by case-insensitive value
// when every name matches, else positionally. Throws SchemaViolation on arity
// mismatch. align_proposals returns, per aspect, the index of its proposal.
std::vector<std::size_t> align_proposals(const std::vector<AspectCandidate>& aspects,
                                         const std::vector<WeightProposal>& proposals);
std::vector<double> align_weights(const std::vector<AspectCandidate>& aspects,
                                  const std::vector<WeightProposal>& proposals);

// Runs all three steps.
AspectFrame discover(const Question& q, const Session& s);

std::string lowercase(std::string_view s);

std::string to_string(AgentRole r);
std::string to_string(DebateStep s);

}  // namespace abca
