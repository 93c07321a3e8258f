#include "abca/estimation.hpp"

#include <algorithm>
#include <limits>

#include "abca/embedder.hpp"
#include "abca/payload.hpp"
#include "abca/prompts.hpp"

namespace abca {

namespace {

[[noreturn]] void sampling_failed(const std::string& what, const Error& cause) {
    throw Error(ErrorKind::SamplingFailed, what + ": " + cause.what());
}

void check_indices(std::span<const AnswerSample> samples, int k) {
    if (samples.empty()) throw Error(ErrorKind::EmptySample, "no answer samples");
    if (k < 1) throw Error(ErrorKind::EmptySample, "K must be positive");
    for (const auto& s : samples)
        if (s.cot_index < 0 || s.cot_index >= k)
            throw Error(ErrorKind::EstimatorInconsistency,
                        "cot index " + std::to_string(s.cot_index) + " outside [0, K)");
}

const std::string kSelfRatingPrompt =
    "Assess how likely the proposed answer is to be correct.\n\n"
    "Question: {question}\n\n"
    "Proposed answer: {answer}\n\n"
    "Return your response in this JSON format:\n\n"
    "{\"probability\": 0.5}";

double self_rate(const Question& q, const std::string& answer, const Session& s, int sample_index) {
    std::string prompt = kSelfRatingPrompt;
    prompt.replace(prompt.find("{question}"), 10, question_binding(q));
    prompt.replace(prompt.find("{answer}"), 8, answer);
    const double p = ask_parsed(s, make_request(s, std::move(prompt), s.cfg.agent_temperature, false, sample_index),
                                [](const Completion& c) { return parse_confidence(c.text); });
    return std::max(p, 1e-6);
}

}  // namespace

std::string question_binding(const Question& q) {
    if (q.answer_mode != AnswerMode::categorical) return q.text;
    std::string out = q.text + "\nOptions:";
    for (const auto& o : q.options) out += "\n- " + o;
    return out;
}

std::vector<CoTCandidate> sample_cots(const Question& q, const AspectCandidate& aspect,
                                      const Dimension& dim, int k, const Session& s) {
    if (k < 1) throw Error(ErrorKind::SamplingFailed, "K must be positive");
    const auto prompt = render_prompt(TemplateId::cot, {{"aspect_value", aspect.value},
                                                        {"dimension", dim.name},
                                                        {"question", question_binding(q)}});
    std::vector<CoTCandidate> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        try {
            auto text = ask_parsed(s, make_request(s, prompt, s.cfg.sampling_temperature, false, i),
                                   [](const Completion& c) { return parse_cot(c.text); });
            out.push_back({i, std::move(text)});
        } catch (const Error& e) {
            sampling_failed("CoT " + std::to_string(i) + " for aspect '" + aspect.value + "'", e);
        }
    }
    return out;
}

std::vector<int> draw_cot_indices(int n, int k, std::mt19937_64& rng) {
    if (n < 1 || k < 1) throw Error(ErrorKind::SamplingFailed, "N and K must be positive");
    const auto bound = static_cast<std::uint64_t>(k);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint64_t x;
        do x = rng();
        while (x >= limit);
        out.push_back(static_cast<int>(x % bound));
    }
    return out;
}

double score_answer(const std::vector<TokenScore>& tokens, std::string_view answer, AnswerMode mode) {
    if (tokens.empty()) throw Error(ErrorKind::EmptyGeneration, "no tokens to score");
    std::string joined;
    std::vector<std::size_t> starts;
    for (const auto& t : tokens) {
        starts.push_back(joined.size());
        joined += t.token;
    }
    std::vector<TokenScore> span;
    if (const auto range = locate(joined, answer)) {
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto begin = starts[i];
            const auto end = begin + tokens[i].token.size();
            if (end > range->first && begin < range->second) span.push_back(tokens[i]);
        }
    }
    if (span.empty()) span = tokens;

    if (mode == AnswerMode::open_ended) return nwgm_score(span);
    double joint = 0.0;
    for (const auto& t : span) {
        if (!(t.logprob <= 0.0)) throw Error(ErrorKind::InvalidLogProb, "positive token logprob");
        joint += t.logprob;
    }
    return categorical_score(joint);
}

std::vector<AnswerSample> sample_answers(const Question& q, const AspectCandidate& aspect,
                                         std::span<const CoTCandidate> cots, int n,
                                         const Session& s, std::mt19937_64& rng) {
    if (cots.empty()) throw Error(ErrorKind::SamplingFailed, "no CoTs to answer from");
    const auto indices = draw_cot_indices(n, static_cast<int>(cots.size()), rng);
    std::vector<AnswerSample> out;
    out.reserve(indices.size());
    for (std::size_t l = 0; l < indices.size(); ++l) {
        const auto& cot = cots[static_cast<std::size_t>(indices[l])];
        const auto prompt = render_prompt(TemplateId::answer, {{"aspect_value", aspect.value},
                                                               {"question", question_binding(q)},
                                                               {"CoT", cot.text}});
        const int tag = static_cast<int>(l);
        try {
            AnswerSample sample{cot.index, {}, 1.0, false};
            auto parse = [&](const Completion& c) {
                if (!c.tokens) throw MissingLogprobsError(c);
                sample.text = parse_answer(c.text);
                sample.score = score_answer(*c.tokens, sample.text, q.answer_mode);
                return true;
            };
            auto parse_text_only = [&](const Completion& c) {
                sample.text = parse_answer(c.text);
                return true;
            };
            try {
                ask_parsed(s, make_request(s, prompt, s.cfg.sampling_temperature, true, tag), parse);
            } catch (const MissingLogprobsError& missing) {
                try {
                    parse_text_only(missing.partial());
                } catch (const Error&) {
                    ask_parsed(s, make_request(s, prompt, s.cfg.sampling_temperature, false, tag),
                               parse_text_only);
                }
                sample.score = self_rate(q, sample.text, s, tag);
                sample.self_rated = true;
            }
            out.push_back(std::move(sample));
        } catch (const Error& e) {
            sampling_failed("answer " + std::to_string(l) + " for aspect '" + aspect.value + "'", e);
        }
    }
    return out;
}

MediatorDistribution mediator_distribution(std::span<const AnswerSample> samples, int k) {
    check_indices(samples, k);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.cot_index)];
    MediatorDistribution out;
    const auto n = static_cast<double>(samples.size());
    for (auto c : counts) out.probs.push_back(static_cast<double>(c) / n);
    return out;
}

OutcomeRegression outcome_regression(std::span<const AnswerSample> samples, int k) {
    check_indices(samples, k);
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (const auto& s : samples) {
        sums[static_cast<std::size_t>(s.cot_index)] += s.score;
        ++counts[static_cast<std::size_t>(s.cot_index)];
    }
    OutcomeRegression out;
    for (std::size_t j = 0; j < sums.size(); ++j)
        out.means.push_back(counts[j] ? std::optional(sums[j] / static_cast<double>(counts[j]))
                                      : std::nullopt);
    return out;
}

AipwTerms aipw_terms(std::span<const AnswerSample> samples, const MediatorDistribution& mediator,
                     const OutcomeRegression& regression) {
    if (samples.empty()) throw Error(ErrorKind::EmptySample, "no answer samples");
    if (mediator.probs.size() != regression.means.size())
        throw Error(ErrorKind::EstimatorInconsistency, "mediator and regression differ in K");
    const auto k = static_cast<int>(mediator.probs.size());

    AipwTerms t;
    for (std::size_t j = 0; j < mediator.probs.size(); ++j) {
        if (mediator.probs[j] <= 0.0) continue;
        if (!regression.means[j])
            throw Error(ErrorKind::EstimatorInconsistency, "CoT with positive mass has no outcome mean");
        t.plug_in += mediator.probs[j] * *regression.means[j];
    }
    double residuals = 0.0;
    for (const auto& s : samples) {
        if (s.cot_index < 0 || s.cot_index >= k)
            throw Error(ErrorKind::EstimatorInconsistency, "sample index outside [0, K)");
        const auto j = static_cast<std::size_t>(s.cot_index);
        if (!(mediator.probs[j] > 0.0) || !regression.means[j])
            throw Error(ErrorKind::EstimatorInconsistency,
                        "sampled CoT " + std::to_string(j) + " has zero mass or no mean");
        residuals += (s.score - *regression.means[j]) / mediator.probs[j];
    }
    t.correction = residuals / static_cast<double>(samples.size());
    t.tau = t.plug_in + t.correction;
    return t;
}

double aipw_effect(std::span<const AnswerSample> samples, const MediatorDistribution& mediator,
                   const OutcomeRegression& regression) {
    return aipw_terms(samples, mediator, regression).tau;
}

std::string representative_answer(std::span<const AnswerSample> samples,
                                  const OutcomeRegression& regression) {
    if (samples.empty()) throw Error(ErrorKind::EmptySample, "no answer samples");
    std::optional<double> best_mean;
    for (const auto& m : regression.means)
        if (m && (!best_mean || *m > *best_mean)) best_mean = m;
    if (!best_mean) throw Error(ErrorKind::EmptySample, "outcome regression has no means");

    const AnswerSample* best = nullptr;
    for (const auto& s : samples) {
        const auto j = static_cast<std::size_t>(s.cot_index);
        if (j >= regression.means.size() || regression.means[j] != best_mean) continue;
        if (!best || s.score > best->score) best = &s;
    }
    if (!best) throw Error(ErrorKind::EstimatorInconsistency, "no sample under the best CoT");
    return best->text;
}

std::uint64_t aspect_seed(std::uint64_t seed, std::string_view question_id, std::size_t aspect_index) {
    std::uint64_t z = seed ^ fnv1a64(question_id);
    z += 0x9E3779B97F4A7C15ULL * (aspect_index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

AspectEffect estimate_aspect(const Question& q, const Dimension& dim, const AspectCandidate& aspect,
                             const Session& s, std::mt19937_64& rng) {
    AspectEffect effect;
    effect.aspect = aspect.value;
    effect.cots = sample_cots(q, aspect, dim, s.cfg.cot_samples, s);
    effect.samples = sample_answers(q, aspect, effect.cots, s.cfg.answer_samples, s, rng);
    const int k = static_cast<int>(effect.cots.size());
    effect.mediator = mediator_distribution(effect.samples, k);
    effect.regression = outcome_regression(effect.samples, k);
    const auto terms = aipw_terms(effect.samples, effect.mediator, effect.regression);
    effect.tau = terms.tau;
    effect.correction = terms.correction;
    effect.representative_answer = representative_answer(effect.samples, effect.regression);
    effect.degraded = std::any_of(effect.samples.begin(), effect.samples.end(),
                                  [](const auto& a) { return a.self_rated; });
    return effect;
}

}  // namespace abca
