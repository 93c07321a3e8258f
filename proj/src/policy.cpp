#include "abca/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "abca/estimation.hpp"
#include "abca/payload.hpp"
#include "abca/prompts.hpp"

namespace abca {

namespace {

void check_alphas(std::span<const double> alphas) {
    bool any_positive = false;
    for (double a : alphas) {
        if (!(a >= 0.0)) throw Error(ErrorKind::DegenerateWeights, "negative significance");
        any_positive = any_positive || a > 0.0;
    }
    if (!any_positive) throw Error(ErrorKind::DegenerateWeights, "all significances are zero");
}

std::vector<std::size_t> by_descending_alpha(std::span<const AspectSummary> summaries) {
    std::vector<std::size_t> order(summaries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return summaries[a].alpha > summaries[b].alpha; });
    return order;
}

std::string aspect_list(std::span<const AspectSummary> summaries) {
    std::string out;
    for (const auto& s : summaries) {
        if (!out.empty()) out += ", ";
        out += s.aspect;
    }
    return out;
}

nlohmann::json aspect_details(const PolicyVerdict& v, std::span<const AspectSummary> summaries) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        nlohmann::json item = {{"aspect", summaries[i].aspect},
                               {"weight", summaries[i].weight},
                               {"significance", summaries[i].alpha},
                               {"answer", summaries[i].representative_answer}};
        if (i < v.per_aspect_theta.size()) item["angular_deviation"] = v.per_aspect_theta[i];
        arr.push_back(std::move(item));
    }
    return arr;
}

}  // namespace

std::string to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::AbstainType1: return "AbstainType1";
        case VerdictKind::AbstainType2: return "AbstainType2";
        case VerdictKind::Aggregate: return "Aggregate";
    }
    return "Aggregate";
}

VerdictKind verdict_kind_from_string(const std::string& s) {
    if (s == "AbstainType1") return VerdictKind::AbstainType1;
    if (s == "AbstainType2") return VerdictKind::AbstainType2;
    if (s == "Aggregate") return VerdictKind::Aggregate;
    throw Error(ErrorKind::SchemaViolation, "unknown verdict kind '" + s + "'");
}

double significance(double weight, double tau) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw Error(ErrorKind::DegenerateWeights, "weight outside [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0 + kTauTolerance))
        throw Error(ErrorKind::DegenerateWeights, "tau outside (0, 1]");
    return weight * tau;
}

UnitVector weighted_centroid(std::span<const UnitVector> embeddings, std::span<const double> alphas) {
    if (embeddings.empty() || embeddings.size() != alphas.size())
        throw Error(ErrorKind::DegenerateWeights, "embeddings and significances differ in arity");
    check_alphas(alphas);
    const auto dim = embeddings.front().dimension();
    std::vector<double> raw(dim, 0.0);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].dimension() != dim)
            throw Error(ErrorKind::DimensionMismatch, "aspect embeddings differ in dimension");
        for (std::size_t d = 0; d < dim; ++d) raw[d] += alphas[i] * embeddings[i][d];
    }
    if (l2_norm(raw) < kZeroCentroidTolerance)
        throw Error(ErrorKind::ZeroCentroid, "significance-weighted evidence cancels out");
    return normalize(raw);
}

std::vector<double> angular_deviations(std::span<const UnitVector> embeddings, const UnitVector& centroid) {
    std::vector<double> out;
    out.reserve(embeddings.size());
    for (const auto& e : embeddings) out.push_back(angle_between(e, centroid));
    return out;
}

double cad(std::span<const UnitVector> embeddings, std::span<const double> alphas,
           const UnitVector& centroid) {
    if (embeddings.size() != alphas.size())
        throw Error(ErrorKind::DegenerateWeights, "embeddings and significances differ in arity");
    check_alphas(alphas);
    const auto thetas = angular_deviations(embeddings, centroid);
    double weighted = 0.0, total = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        weighted += alphas[i] * thetas[i];
        total += alphas[i];
    }
    return std::clamp(weighted / total, 0.0, std::numbers::pi);
}

UnitVector null_embedding(const std::vector<std::string>& null_phrases, Embedder& embedder) {
    if (null_phrases.empty()) throw Error(ErrorKind::InvalidConfig, "no null phrases");
    static std::mutex mutex;
    static std::map<std::string, UnitVector> memo;
    std::string key = embedder.identity();
    for (const auto& p : null_phrases) key += '\x1f' + p;
    {
        std::lock_guard lock(mutex);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
    }
    const auto vectors = embedder.embed(null_phrases);
    std::vector<double> mean(embedder.dimension(), 0.0);
    for (const auto& v : vectors) {
        if (v.dimension() != mean.size())
            throw Error(ErrorKind::DimensionMismatch, "null phrase embedding has wrong dimension");
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += v[d] / static_cast<double>(vectors.size());
    }
    auto result = normalize(mean);
    std::lock_guard lock(mutex);
    return memo.emplace(std::move(key), std::move(result)).first->second;
}

VerdictKind gate(double cad_value, double null_distance, const AbcaConfig& cfg) {
    if (cad_value > cfg.theta_max) return VerdictKind::AbstainType1;
    if (null_distance <= cfg.rho_null) return VerdictKind::AbstainType2;
    return VerdictKind::Aggregate;
}

PolicyVerdict decide(std::span<const AspectSummary> summaries, const AbcaConfig& cfg,
                     const UnitVector& null_direction) {
    if (summaries.empty()) throw Error(ErrorKind::EmptySample, "no aspect summaries");
    std::vector<UnitVector> embeddings;
    std::vector<double> alphas;
    for (const auto& s : summaries) {
        embeddings.push_back(s.embedding);
        alphas.push_back(s.alpha);
    }

    PolicyVerdict v;
    try {
        v.centroid = weighted_centroid(embeddings, alphas);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroCentroid) throw;
        // Perfectly opposed evidence: maximal conflict.
        v.kind = VerdictKind::AbstainType1;
        v.cad = std::numbers::pi;
        v.null_distance = 1.0;
        v.zero_centroid = true;
        v.per_aspect_theta.assign(summaries.size(), std::numbers::pi / 2);
        return v;
    }
    v.per_aspect_theta = angular_deviations(embeddings, v.centroid);
    v.cad = cad(embeddings, alphas, v.centroid);
    v.null_distance = 1.0 - std::clamp(dot(v.centroid, null_direction), -1.0, 1.0);
    v.kind = gate(v.cad, v.null_distance, cfg);
    if (v.kind == VerdictKind::Aggregate)
        for (std::size_t i = 0; i < summaries.size(); ++i)
            if (v.per_aspect_theta[i] > v.cad + kCaveatTolerance) v.caveat_aspects.push_back(summaries[i].aspect);
    return v;
}

PolicyVerdict decide(std::span<const AspectSummary> summaries, const AbcaConfig& cfg, Embedder& embedder) {
    return decide(summaries, cfg, null_embedding(cfg.null_phrases, embedder));
}

std::string compose_response(const PolicyVerdict& verdict, std::span<const AspectSummary> summaries,
                             const Question& q, const Session& s) {
    std::string prompt;
    const auto question = question_binding(q);
    switch (verdict.kind) {
        case VerdictKind::AbstainType1: {
            nlohmann::json details = {{"centroid_angular_deviation", verdict.cad},
                                      {"aspects", aspect_details(verdict, summaries)}};
            prompt = render_prompt(TemplateId::abstain_type1,
                                   {{"question", question}, {"conflict_details", details.dump(2)}});
            break;
        }
        case VerdictKind::AbstainType2: {
            nlohmann::json details = {{"null_consensus_distance", verdict.null_distance},
                                      {"aspects", aspect_details(verdict, summaries)}};
            prompt = render_prompt(TemplateId::abstain_type2,
                                   {{"question", question}, {"insufficiency_details", details.dump(2)}});
            break;
        }
        case VerdictKind::Aggregate: {
            nlohmann::json aspects = nlohmann::json::array();
            for (auto i : by_descending_alpha(summaries))
                aspects.push_back({{"aspect", summaries[i].aspect},
                                   {"significance", summaries[i].alpha},
                                   {"answer", summaries[i].representative_answer}});
            nlohmann::json summary = {{"aspects", std::move(aspects)}, {"caveats", verdict.caveat_aspects}};
            prompt = render_prompt(TemplateId::aggregate,
                                   {{"question", question}, {"aspects_summary", summary.dump(2)}});
            break;
        }
    }
    try {
        return ask_parsed(s, make_request(s, std::move(prompt), s.cfg.agent_temperature),
                          [](const Completion& c) { return parse_final(c.text); });
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::MalformedPayload && e.kind() != ErrorKind::SchemaViolation) throw;
        throw Error(ErrorKind::CompositionFailed, e.what());
    }
}

std::string fallback_response(const PolicyVerdict& verdict, std::span<const AspectSummary> summaries) {
    switch (verdict.kind) {
        case VerdictKind::AbstainType1:
            return "Abstaining due to conflicting evidence across: " + aspect_list(summaries);
        case VerdictKind::AbstainType2:
            return "Abstaining due to insufficient evidence across: " + aspect_list(summaries);
        case VerdictKind::Aggregate:
            break;
    }
    if (summaries.empty()) return {};
    return summaries[by_descending_alpha(summaries).front()].representative_answer;
}

}  // namespace abca
