#pragma once

#include <json.hpp>

#include "abca/discovery.hpp"
#include "abca/estimation.hpp"
#include "abca/harness.hpp"
#include "abca/pipeline.hpp"
#include "abca/policy.hpp"

// JSON forms of the audit bundle and report types. Every to_json has a
// matching *_from_json so bundles written by `abca ask`/`abca eval` can be
// reloaded by `abca inspect`.
namespace abca {

nlohmann::json to_json(const Question& q);
Question question_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Dimension& d);
nlohmann::json to_json(const DebateTranscript& t);
nlohmann::json to_json(const AspectFrame& f);
AspectFrame frame_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AspectEffect& e);
AspectEffect effect_from_json(const nlohmann::json& j);

nlohmann::json to_json(const UnitVector& v);
UnitVector unit_vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AspectSummary& s);
AspectSummary summary_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PolicyVerdict& v);
PolicyVerdict verdict_from_json(const nlohmann::json& j);

nlohmann::json to_json(const QuestionResult& r);
QuestionResult result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ConfusionMatrix& m);
ConfusionMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RecordOutcome& o);
RecordOutcome outcome_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BenchmarkReport& r);
BenchmarkReport report_from_json(const nlohmann::json& j);

}  // namespace abca
