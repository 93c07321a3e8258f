#include "abca/serialize.hpp"

namespace abca {

using nlohmann::json;

namespace {

std::string mode_name(AnswerMode m) { return m == AnswerMode::categorical ? "categorical" : "open_ended"; }

AnswerMode mode_from(const std::string& s) {
    if (s == "categorical") return AnswerMode::categorical;
    if (s == "open_ended") return AnswerMode::open_ended;
    throw Error(ErrorKind::SchemaViolation, "unknown answer_mode '" + s + "'");
}

AgentRole agent_from(const std::string& s) {
    if (s == "DAgent") return AgentRole::DAgent;
    if (s == "CAgent") return AgentRole::CAgent;
    throw Error(ErrorKind::SchemaViolation, "unknown agent '" + s + "'");
}

DebateStep step_from(const std::string& s) {
    if (s == "identify") return DebateStep::identify;
    if (s == "generate") return DebateStep::generate;
    if (s == "reconcile") return DebateStep::reconcile;
    throw Error(ErrorKind::SchemaViolation, "unknown debate step '" + s + "'");
}

Dimension dimension_from_json(const json& j) {
    return {j.at("name").get<std::string>(), j.value("description", ""), j.value("justification", ""),
            j.at("score").get<double>()};
}

}  // namespace

json to_json(const Question& q) {
    json j = {{"id", q.id}, {"text", q.text}, {"answer_mode", mode_name(q.answer_mode)}};
    if (!q.options.empty()) j["options"] = q.options;
    return j;
}

Question question_from_json(const json& j) {
    Question q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.answer_mode = mode_from(j.value("answer_mode", std::string("open_ended")));
    q.options = j.value("options", std::vector<std::string>{});
    return q;
}

json to_json(const Dimension& d) {
    return {{"name", d.name}, {"description", d.description}, {"justification", d.justification}, {"score", d.score}};
}

json to_json(const DebateTranscript& t) {
    json arr = json::array();
    for (const auto& e : t.entries)
        arr.push_back({{"agent", to_string(e.agent)},
                       {"step", to_string(e.step)},
                       {"round", e.round},
                       {"prompt", e.prompt},
                       {"raw_response", e.raw_response}});
    return arr;
}

json to_json(const AspectFrame& f) {
    json aspects = json::array();
    for (const auto& a : f.aspects)
        aspects.push_back({{"value", a.aspect.value},
                           {"description", a.aspect.description},
                           {"justification", a.aspect.justification},
                           {"weight", a.weight}});
    return {{"question_id", f.question_id},
            {"dimension", to_json(f.dimension)},
            {"aspects", std::move(aspects)},
            {"transcript", to_json(f.transcript)}};
}

AspectFrame frame_from_json(const json& j) {
    AspectFrame f;
    f.question_id = j.at("question_id").get<std::string>();
    f.dimension = dimension_from_json(j.at("dimension"));
    for (const auto& a : j.at("aspects"))
        f.aspects.push_back({{a.at("value").get<std::string>(), a.value("description", ""),
                              a.value("justification", "")},
                             a.at("weight").get<double>()});
    for (const auto& e : j.at("transcript"))
        f.transcript.add(agent_from(e.at("agent")), step_from(e.at("step")), e.at("round").get<int>(),
                         e.at("prompt").get<std::string>(), e.at("raw_response").get<std::string>());
    return f;
}

json to_json(const AspectEffect& e) {
    json cots = json::array();
    for (const auto& c : e.cots) cots.push_back({{"index", c.index}, {"text", c.text}});
    json samples = json::array();
    for (const auto& s : e.samples)
        samples.push_back({{"cot_index", s.cot_index}, {"text", s.text}, {"score", s.score}, {"self_rated", s.self_rated}});
    json means = json::array();
    for (const auto& m : e.regression.means) means.push_back(m ? json(*m) : json(nullptr));
    return {{"aspect", e.aspect},
            {"tau", e.tau},
            {"correction", e.correction},
            {"mediator", e.mediator.probs},
            {"regression", std::move(means)},
            {"cots", std::move(cots)},
            {"samples", std::move(samples)},
            {"representative_answer", e.representative_answer},
            {"degraded", e.degraded}};
}

AspectEffect effect_from_json(const json& j) {
    AspectEffect e;
    e.aspect = j.at("aspect").get<std::string>();
    e.tau = j.at("tau").get<double>();
    e.correction = j.value("correction", 0.0);
    e.mediator.probs = j.at("mediator").get<std::vector<double>>();
    for (const auto& m : j.at("regression"))
        e.regression.means.push_back(m.is_null() ? std::nullopt : std::optional(m.get<double>()));
    for (const auto& c : j.at("cots")) e.cots.push_back({c.at("index").get<int>(), c.at("text").get<std::string>()});
    for (const auto& s : j.at("samples"))
        e.samples.push_back({s.at("cot_index").get<int>(), s.at("text").get<std::string>(),
                             s.at("score").get<double>(), s.value("self_rated", false)});
    e.representative_answer = j.at("representative_answer").get<std::string>();
    e.degraded = j.value("degraded", false);
    return e;
}

json to_json(const UnitVector& v) {
    return json(std::vector<double>(v.components().begin(), v.components().end()));
}

UnitVector unit_vector_from_json(const json& j) {
    auto c = j.get<std::vector<double>>();
    if (c.empty()) return {};
    return UnitVector::from_normalized(std::move(c));
}

json to_json(const AspectSummary& s) {
    return {{"aspect", s.aspect},
            {"weight", s.weight},
            {"tau", s.tau},
            {"alpha", s.alpha},
            {"representative_answer", s.representative_answer},
            {"embedding", to_json(s.embedding)}};
}

AspectSummary summary_from_json(const json& j) {
    return {j.at("aspect").get<std::string>(),
            j.at("weight").get<double>(),
            j.at("tau").get<double>(),
            j.at("representative_answer").get<std::string>(),
            unit_vector_from_json(j.at("embedding")),
            j.at("alpha").get<double>()};
}

json to_json(const PolicyVerdict& v) {
    return {{"kind", to_string(v.kind)},
            {"cad", v.cad},
            {"null_distance", v.null_distance},
            {"centroid", to_json(v.centroid)},
            {"per_aspect_theta", v.per_aspect_theta},
            {"caveat_aspects", v.caveat_aspects},
            {"zero_centroid", v.zero_centroid},
            {"final_text", v.final_text},
            {"composition_fallback", v.composition_fallback}};
}

PolicyVerdict verdict_from_json(const json& j) {
    PolicyVerdict v;
    v.kind = verdict_kind_from_string(j.at("kind").get<std::string>());
    v.cad = j.at("cad").get<double>();
    v.null_distance = j.at("null_distance").get<double>();
    v.centroid = unit_vector_from_json(j.at("centroid"));
    v.per_aspect_theta = j.at("per_aspect_theta").get<std::vector<double>>();
    v.caveat_aspects = j.at("caveat_aspects").get<std::vector<std::string>>();
    v.zero_centroid = j.value("zero_centroid", false);
    v.final_text = j.value("final_text", "");
    v.composition_fallback = j.value("composition_fallback", false);
    return v;
}

json to_json(const QuestionResult& r) {
    json effects = json::array();
    for (const auto& e : r.effects) effects.push_back(to_json(e));
    json summaries = json::array();
    for (const auto& s : r.summaries) summaries.push_back(to_json(s));
    return {{"question", to_json(r.question)},
            {"frame", r.frame ? to_json(*r.frame) : json(nullptr)},
            {"effects", std::move(effects)},
            {"summaries", std::move(summaries)},
            {"verdict", to_json(r.verdict)},
            {"final_text", r.final_text},
            {"discovery_degraded", r.discovery_degraded},
            {"degraded_reason", r.degraded_reason}};
}

QuestionResult result_from_json(const json& j) {
    QuestionResult r;
    r.question = question_from_json(j.at("question"));
    if (!j.at("frame").is_null()) r.frame = frame_from_json(j["frame"]);
    for (const auto& e : j.at("effects")) r.effects.push_back(effect_from_json(e));
    for (const auto& s : j.at("summaries")) r.summaries.push_back(summary_from_json(s));
    r.verdict = verdict_from_json(j.at("verdict"));
    r.final_text = j.at("final_text").get<std::string>();
    r.discovery_degraded = j.value("discovery_degraded", false);
    r.degraded_reason = j.value("degraded_reason", "");
    return r;
}

json to_json(const ConfusionMatrix& m) {
    return {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn},
            {"n_answerable", m.n_answerable}, {"n_unanswerable", m.n_unanswerable}};
}

ConfusionMatrix matrix_from_json(const json& j) {
    ConfusionMatrix m;
    m.tp = j.at("tp").get<std::size_t>();
    m.fp = j.at("fp").get<std::size_t>();
    m.fn = j.at("fn").get<std::size_t>();
    m.tn = j.at("tn").get<std::size_t>();
    m.n_answerable = j.at("n_answerable").get<std::size_t>();
    m.n_unanswerable = j.at("n_unanswerable").get<std::size_t>();
    return m;
}

json to_json(const MetricsReport& m) {
    return {{"matrix", to_json(m.matrix)},
            {"acc", m.acc}, {"a_ac", m.a_ac}, {"u_ac", m.u_ac}, {"a_f1", m.a_f1}, {"u_f1", m.u_f1},
            {"p_a", m.p_a}, {"r_a", m.r_a}, {"p_u", m.p_u}, {"r_u", m.r_u},
            {"type1", m.type1}, {"type2", m.type2},
            {"pct_type1", m.pct_type1()}, {"pct_type2", m.pct_type2()},
            {"degenerate", m.degenerate}};
}

MetricsReport metrics_from_json(const json& j) {
    MetricsReport m;
    m.matrix = matrix_from_json(j.at("matrix"));
    m.acc = j.at("acc").get<double>();
    m.a_ac = j.at("a_ac").get<double>();
    m.u_ac = j.at("u_ac").get<double>();
    m.a_f1 = j.at("a_f1").get<double>();
    m.u_f1 = j.at("u_f1").get<double>();
    m.p_a = j.at("p_a").get<double>();
    m.r_a = j.at("r_a").get<double>();
    m.p_u = j.at("p_u").get<double>();
    m.r_u = j.at("r_u").get<double>();
    m.type1 = j.at("type1").get<std::size_t>();
    m.type2 = j.at("type2").get<std::size_t>();
    m.degenerate = j.value("degenerate", std::vector<std::string>{});
    return m;
}

json to_json(const RecordOutcome& o) {
    json j = {{"record", to_json(o.record)},
              {"result", o.result ? to_json(*o.result) : json(nullptr)},
              {"correct", o.correct ? json(*o.correct) : json(nullptr)},
              {"cell", o.cell ? json(to_string(*o.cell)) : json(nullptr)},
              {"aborted", o.aborted()}};
    if (o.aborted()) j["error"] = o.error;
    return j;
}

RecordOutcome outcome_from_json(const json& j) {
    RecordOutcome o;
    o.record = record_from_json(j.at("record"), 0);
    if (!j.at("result").is_null()) o.result = result_from_json(j["result"]);
    if (!j.at("correct").is_null()) o.correct = j["correct"].get<bool>();
    if (!j.at("cell").is_null()) o.cell = cell_from_string(j["cell"].get<std::string>());
    o.error = j.value("error", "");
    return o;
}

json to_json(const BenchmarkReport& r) {
    json outcomes = json::array();
    for (const auto& o : r.outcomes) outcomes.push_back(to_json(o));
    return {{"metrics", to_json(r.metrics)}, {"aborted", r.aborted_ids}, {"records", std::move(outcomes)}};
}

BenchmarkReport report_from_json(const json& j) {
    BenchmarkReport r;
    r.metrics = metrics_from_json(j.at("metrics"));
    r.aborted_ids = j.at("aborted").get<std::vector<std::string>>();
    for (const auto& o : j.at("records")) r.outcomes.push_back(outcome_from_json(o));
    return r;
}

}  // namespace abca
