#include "abca/discovery.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "abca/payload.hpp"
#include "abca/prompts.hpp"

namespace abca {

namespace {

using nlohmann::json;

json dimensions_json(const std::vector<Dimension>& dims) {
    json arr = json::array();
    for (const auto& d : dims)
        arr.push_back({{"name", d.name},
                       {"description", d.description},
                       {"justification", d.justification},
                       {"score", d.score}});
    return arr;
}

json aspects_json(const std::vector<AspectCandidate>& aspects) {
    json arr = json::array();
    for (const auto& a : aspects)
        arr.push_back({{"value", a.value}, {"description", a.description}, {"justification", a.justification}});
    return arr;
}

std::string feedback(const char* heading, int previous_round, const json& payload) {
    return "\n\n" + std::string(heading) + " (round " + std::to_string(previous_round) + "):\n" +
           payload.dump(2) +
           "\nRevise your response in light of this assessment and return the complete list in the "
           "same JSON format.";
}

template <class T, class Key>
std::vector<T> dedup(std::vector<T> items, Key key) {
    std::set<std::string> seen;
    std::vector<T> out;
    for (auto& item : items)
        if (seen.insert(lowercase(key(item))).second) out.push_back(std::move(item));
    return out;
}

template <class Parse>
auto debate_call(const Session& s, DebateTranscript& transcript, AgentRole agent, DebateStep step,
                 int round, std::string prompt, Parse&& parse) {
    auto observe = [&](const std::string& p, const Completion& c) {
        transcript.add(agent, step, round, p, c.text);
    };
    return ask_parsed(s, make_request(s, std::move(prompt), s.cfg.agent_temperature),
                      std::forward<Parse>(parse), observe);
}

[[noreturn]] void discovery_failed(const std::string& why) {
    throw Error(ErrorKind::AspectDiscoveryFailed, why);
}

bool is_parse_error(const Error& e) {
    return e.kind() == ErrorKind::MalformedPayload || e.kind() == ErrorKind::SchemaViolation;
}

}  // namespace

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string to_string(AgentRole r) { return r == AgentRole::DAgent ? "DAgent" : "CAgent"; }

std::string to_string(DebateStep s) {
    switch (s) {
        case DebateStep::identify: return "identify";
        case DebateStep::generate: return "generate";
        case DebateStep::reconcile: return "reconcile";
    }
    return "identify";
}

void DebateTranscript::add(AgentRole agent, DebateStep step, int round, std::string prompt,
                           std::string raw) {
    entries.push_back({agent, step, round, std::move(prompt), std::move(raw)});
}

int DebateTranscript::rounds(DebateStep step) const {
    int most = 0;
    for (const auto& e : entries)
        if (e.step == step) most = std::max(most, e.round);
    return most;
}

void AspectFrame::validate(int max_aspects) const {
    if (aspects.empty() || static_cast<int>(aspects.size()) > max_aspects)
        throw Error(ErrorKind::SchemaViolation, "aspect count outside [1, max_aspects]");
    double sum = 0.0;
    for (const auto& a : aspects) {
        if (!(a.weight >= 0.0 && a.weight <= 1.0))
            throw Error(ErrorKind::SchemaViolation, "weight outside [0, 1]");
        sum += a.weight;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
        throw Error(ErrorKind::SchemaViolation, "weights do not sum to 1");
}

std::vector<double> renormalize(std::vector<double> weights) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(sum > 0.0)) throw Error(ErrorKind::SchemaViolation, "weights sum to zero");
    for (double& w : weights) w /= sum;
    return weights;
}

std::vector<double> average_weights(std::span<const double> dagent, std::span<const double> cagent) {
    if (dagent.size() != cagent.size())
        throw Error(ErrorKind::SchemaViolation, "weight vectors differ in arity");
    std::vector<double> mean(dagent.size());
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = (dagent[i] + cagent[i]) / 2.0;
    return renormalize(std::move(mean));
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::SchemaViolation, "weight vectors differ in arity");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

std::vector<std::size_t> align_proposals(const std::vector<AspectCandidate>& aspects,
                                         const std::vector<WeightProposal>& proposals) {
    if (aspects.size() != proposals.size())
        throw Error(ErrorKind::SchemaViolation,
                    "expected " + std::to_string(aspects.size()) + " weights, got " +
                        std::to_string(proposals.size()));
    std::vector<std::size_t> order(aspects.size(), proposals.size());
    for (std::size_t p = 0; p < proposals.size(); ++p) {
        const auto key = lowercase(proposals[p].value);
        const auto it = std::find_if(aspects.begin(), aspects.end(),
                                     [&](const auto& a) { return lowercase(a.value) == key; });
        const auto idx = static_cast<std::size_t>(it - aspects.begin());
        if (it == aspects.end() || order[idx] != proposals.size()) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            return order;
        }
        order[idx] = p;
    }
    return order;
}

std::vector<double> align_weights(const std::vector<AspectCandidate>& aspects,
                                  const std::vector<WeightProposal>& proposals) {
    const auto order = align_proposals(aspects, proposals);
    std::vector<double> out(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) out[i] = proposals[order[i]].weight;
    return out;
}

Dimension identify_dimension(const Question& q, const Session& s, DebateTranscript& transcript) {
    std::vector<Dimension> survivors;       // latest critic ranking, rejections removed
    std::vector<Dimension> last_nonempty;
    json last_ranking;
    try {
        for (int round = 1; round <= s.cfg.debate_rounds; ++round) {
            auto prompt = render_prompt(TemplateId::dagent_identify, {{"question", q.text}});
            if (round > 1) prompt += feedback("Critical Agent ranking", round - 1, last_ranking);
            auto proposed = debate_call(s, transcript, AgentRole::DAgent, DebateStep::identify, round,
                                        std::move(prompt),
                                        [](const Completion& c) { return parse_dimensions(c.text); });

            std::vector<Dimension> pool = survivors;
            pool.insert(pool.end(), proposed.begin(), proposed.end());
            pool = dedup(std::move(pool), [](const Dimension& d) { return d.name; });

            auto ranked = debate_call(
                s, transcript, AgentRole::CAgent, DebateStep::identify, round,
                render_prompt(TemplateId::cagent_identify,
                              {{"question", q.text}, {"dimensions_json", dimensions_json(pool).dump(2)}}),
                [](const Completion& c) { return parse_dimensions(c.text); });

            last_ranking = dimensions_json(ranked);
            survivors.clear();
            for (auto& d : ranked)
                if (d.score > 0.0) survivors.push_back(std::move(d));
            survivors = dedup(std::move(survivors), [](const Dimension& d) { return d.name; });
            if (!survivors.empty()) last_nonempty = survivors;
        }
    } catch (const Error& e) {
        if (is_parse_error(e)) discovery_failed(std::string("dimension debate: ") + e.what());
        throw;
    }
    if (last_nonempty.empty()) discovery_failed("critic rejected every dimension in every round");
    // max_element returns the first of equal maxima, i.e. the earliest rank.
    return *std::max_element(last_nonempty.begin(), last_nonempty.end(),
                             [](const auto& a, const auto& b) { return a.score < b.score; });
}

std::vector<AspectCandidate> generate_aspects(const Question& q, const Dimension& dim,
                                              const Session& s, DebateTranscript& transcript) {
    const auto max_aspects = static_cast<std::size_t>(s.cfg.max_aspects);
    std::vector<AspectCandidate> survivors;
    std::vector<AspectCandidate> last_nonempty;
    try {
        for (int round = 1; round <= s.cfg.debate_rounds; ++round) {
            auto prompt = render_prompt(TemplateId::dagent_generate,
                                        {{"question", q.text},
                                         {"dimension_name", dim.name},
                                         {"dimension_description", dim.description},
                                         {"dimension_justification", dim.justification},
                                         {"max_aspects", std::to_string(s.cfg.max_aspects)}});
            if (round > 1) prompt += feedback("Critical Agent accepted aspects", round - 1, aspects_json(survivors));
            auto proposed = debate_call(s, transcript, AgentRole::DAgent, DebateStep::generate, round,
                                        std::move(prompt),
                                        [](const Completion& c) { return parse_aspects(c.text); });

            std::vector<AspectCandidate> pool = survivors;
            pool.insert(pool.end(), proposed.begin(), proposed.end());
            pool = dedup(std::move(pool), [](const AspectCandidate& a) { return a.value; });

            auto kept = debate_call(s, transcript, AgentRole::CAgent, DebateStep::generate, round,
                                    render_prompt(TemplateId::cagent_generate,
                                                  {{"question", q.text},
                                                   {"dimension_name", dim.name},
                                                   {"dimension_description", dim.description},
                                                   {"aspects_json", aspects_json(pool).dump(2)}}),
                                    [](const Completion& c) { return parse_aspects(c.text); });

            survivors = dedup(std::move(kept), [](const AspectCandidate& a) { return a.value; });
            if (survivors.size() > max_aspects) survivors.resize(max_aspects);
            if (!survivors.empty()) last_nonempty = survivors;
        }
    } catch (const Error& e) {
        if (is_parse_error(e)) discovery_failed(std::string("aspect debate: ") + e.what());
        throw;
    }
    if (last_nonempty.empty()) discovery_failed("no aspect survived the critic");
    return last_nonempty;
}

std::vector<WeightedAspect> reconcile_weights(const Question& q, const Dimension& dim,
                                              const std::vector<AspectCandidate>& aspects,
                                              const Session& s, DebateTranscript& transcript) {
    if (aspects.empty()) throw Error(ErrorKind::SchemaViolation, "no aspects to weight");
    const auto aspects_text = aspects_json(aspects).dump(2);
    std::vector<double> d_weights, c_weights;
    json last_assessment;
    for (int round = 1; round <= s.cfg.debate_rounds; ++round) {
        auto prompt = render_prompt(TemplateId::dagent_weights,
                                    {{"question", q.text},
                                     {"dimension_name", dim.name},
                                     {"dimension_description", dim.description},
                                     {"aspects_json", aspects_text}});
        if (round > 1) prompt += feedback("Critical Agent weights", round - 1, last_assessment);
        const auto proposal = debate_call(s, transcript, AgentRole::DAgent, DebateStep::reconcile, round,
                                          std::move(prompt), [&](const Completion& c) {
                                              auto p = parse_weights(c.text);
                                              align_weights(aspects, p);
                                              return p;
                                          });
        d_weights = renormalize(align_weights(aspects, proposal));
        const auto d_order = align_proposals(aspects, proposal);

        json weights = json::array();
        json justifications = json::array();
        for (std::size_t i = 0; i < aspects.size(); ++i) {
            weights.push_back({{"value", aspects[i].value}, {"weight", d_weights[i]}});
            justifications.push_back({{"value", aspects[i].value},
                                      {"justification", proposal[d_order[i]].justification}});
        }
        const auto assessment = debate_call(
            s, transcript, AgentRole::CAgent, DebateStep::reconcile, round,
            render_prompt(TemplateId::cagent_weights,
                          {{"question", q.text},
                           {"dimension_name", dim.name},
                           {"dimension_description", dim.description},
                           {"aspects_weights_json", weights.dump(2)},
                           {"dagent_justifications", justifications.dump(2)}}),
            [&](const Completion& c) {
                auto p = parse_weights(c.text);
                align_weights(aspects, p);
                return p;
            });
        c_weights = renormalize(align_weights(aspects, assessment));
        const auto c_order = align_proposals(aspects, assessment);

        last_assessment = json::array();
        for (std::size_t i = 0; i < aspects.size(); ++i)
            last_assessment.push_back({{"value", aspects[i].value},
                                       {"weight", c_weights[i]},
                                       {"justification", assessment[c_order[i]].justification}});
        if (l1_distance(d_weights, c_weights) < s.cfg.weight_convergence_threshold) break;
    }
    const auto averaged = average_weights(d_weights, c_weights);
    std::vector<WeightedAspect> out;
    out.reserve(aspects.size());
    for (std::size_t i = 0; i < aspects.size(); ++i) out.push_back({aspects[i], averaged[i]});
    return out;
}

AspectFrame discover(const Question& q, const Session& s) {
    q.validate();
    AspectFrame frame;
    frame.question_id = q.id;
    frame.dimension = identify_dimension(q, s, frame.transcript);
    const auto aspects = generate_aspects(q, frame.dimension, s, frame.transcript);
    frame.aspects = reconcile_weights(q, frame.dimension, aspects, s, frame.transcript);
    frame.validate(s.cfg.max_aspects);
    return frame;
}

}  // namespace abca
