#include "abca/pipeline.hpp"

#include "abca/payload.hpp"

namespace abca {

namespace {

bool discovery_recoverable(const Error& e) {
    return e.kind() == ErrorKind::AspectDiscoveryFailed || e.kind() == ErrorKind::MalformedPayload ||
           e.kind() == ErrorKind::SchemaViolation;
}

QuestionResult answer_directly(QuestionResult result, const Session& s, Embedder& embedder) {
    const auto& q = result.question;
    const auto text = ask_parsed(s, make_request(s, direct_answer_prompt(q), s.cfg.agent_temperature),
                                 [](const Completion& c) { return parse_answer(c.text); });
    AspectSummary only{"direct", 1.0, 1.0, text, embedder.embed_one(text), 1.0};
    result.summaries.push_back(std::move(only));
    result.verdict = decide(result.summaries, s.cfg, embedder);
    result.verdict.final_text = result.verdict.kind == VerdictKind::Aggregate
                                    ? text
                                    : fallback_response(result.verdict, result.summaries);
    result.final_text = result.verdict.final_text;
    return result;
}

}  // namespace

std::string direct_answer_prompt(const Question& q) {
    return "Answer the question below.\n\nQuestion: " + question_binding(q) +
           "\n\nIf you cannot determine an answer, use phrases like \"no data\", \"cannot be "
           "determined\", \"insufficient evidence\", or \"unknowable\".\n\n"
           "Return your response in this JSON format:\n\n{\"answer\": \"Your specific, concise answer here.\"}";
}

QuestionResult run_pipeline(const Question& q, const Session& s, Embedder& embedder) {
    q.validate();
    s.cfg.validate();
    QuestionResult result;
    result.question = q;

    try {
        result.frame = discover(q, s);
    } catch (const Error& e) {
        if (!discovery_recoverable(e)) throw;
        result.discovery_degraded = true;
        result.degraded_reason = e.what();
        return answer_directly(std::move(result), s, embedder);
    }

    const auto& frame = *result.frame;
    for (std::size_t i = 0; i < frame.aspects.size(); ++i) {
        std::mt19937_64 rng(aspect_seed(s.cfg.seed, q.id, i));
        result.effects.push_back(estimate_aspect(q, frame.dimension, frame.aspects[i].aspect, s, rng));
    }

    std::vector<std::string> answers;
    for (const auto& e : result.effects) answers.push_back(e.representative_answer);
    auto embeddings = embedder.embed(answers);
    for (std::size_t i = 0; i < frame.aspects.size(); ++i) {
        const double w = frame.aspects[i].weight;
        const double tau = result.effects[i].tau;
        result.summaries.push_back({frame.aspects[i].aspect.value, w, tau, answers[i],
                                    std::move(embeddings[i]), significance(w, tau)});
    }

    result.verdict = decide(result.summaries, s.cfg, embedder);
    try {
        result.verdict.final_text = compose_response(result.verdict, result.summaries, q, s);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::CompositionFailed) throw;
        result.verdict.final_text = fallback_response(result.verdict, result.summaries);
        result.verdict.composition_fallback = true;
    }
    result.final_text = result.verdict.final_text;
    return result;
}

}  // namespace abca
