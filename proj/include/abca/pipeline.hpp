#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abca/discovery.hpp"
#include "abca/estimation.hpp"
#include "abca/policy.hpp"
#include "abca/session.hpp"

namespace abca {

// Everything produced for one question: the audit bundle.
struct QuestionResult {
    Question question;
    std::optional<AspectFrame> frame;  // absent when discovery failed
    std::vector<AspectEffect> effects;
    std::vector<AspectSummary> summaries;
    PolicyVerdict verdict;
    std::string final_text;
    // Set when discovery failed and the question was answered by a single
    // direct prompt; that answer is still gated against the null consensus.
    bool discovery_degraded = false;
    std::string degraded_reason;

    bool abstained() const noexcept { return verdict.kind != VerdictKind::Aggregate; }
};

// Prompt used when aspect discovery fails.
std::string direct_answer_prompt(const Question& q);

// Discovery, per-aspect estimation, the abstention gate and response
// composition. Throws on unrecoverable backend or sampling failures.
QuestionResult run_pipeline(const Question& q, const Session& s, Embedder& embedder);

}  // namespace abca
