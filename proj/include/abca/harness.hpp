#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abca/config.hpp"
#include "abca/pipeline.hpp"

namespace abca {

// One line of a JSONL dataset.
struct DatasetRecord {
    std::string id;
    std::string question;
    bool answerable = true;
    std::vector<std::string> gold_answers;  // nonempty when answerable
    std::optional<std::string> category;    // carried through, never interpreted
    AnswerMode answer_mode = AnswerMode::open_ended;
    std::vector<std::string> options;

    Question to_question() const;
    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

nlohmann::json to_json(const DatasetRecord& r);

// Throws MalformedRecord / MissingField with "line N" in the message.
DatasetRecord record_from_json(const nlohmann::json& j, std::size_t line);
std::vector<DatasetRecord> parse_dataset(std::istream& in);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

// Lowercase, punctuation to spaces, collapsed whitespace.
std::string normalize_answer(std::string_view text);

// Correct iff some normalised gold answer occurs in the normalised prediction
// on word boundaries, or the prediction occurs in the gold answer.
bool judge_string_match(std::string_view prediction, const std::vector<std::string>& gold_answers);

std::string llm_judge_prompt(std::string_view prediction, const DatasetRecord& record);

// Answering an unanswerable record is never correct, so no judging happens
// for those. llm_judge needs a session and throws JudgeFailed.
bool judge(std::string_view prediction, const DatasetRecord& record, JudgeMode mode,
           const Session* session = nullptr);

enum class Cell { TP, FP, FN, TN };

//                 answerable   unanswerable
// answered ok        TP            FP
// answered wrong     FP            FP
// abstained          FN            TN
// Throws ClassificationError unless `correct` is present exactly when the
// model answered.
Cell classify(bool abstained, std::optional<bool> correct, bool answerable);

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t n_answerable = 0, n_unanswerable = 0;

    void add(Cell cell, bool answerable);
    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    // tp + fn <= |A|, tn <= |U|, total == |A| + |U|.
    bool consistent() const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricsReport {
    ConfusionMatrix matrix;
    double acc = 0, a_ac = 0, u_ac = 0, a_f1 = 0, u_f1 = 0;
    double p_a = 0, r_a = 0, p_u = 0, r_u = 0;
    std::size_t type1 = 0, type2 = 0;
    std::vector<std::string> degenerate;  // metrics whose ratio was 0/0

    double pct_type1() const noexcept;
    double pct_type2() const noexcept;
};

MetricsReport metrics(const ConfusionMatrix& cm);

struct RecordOutcome {
    DatasetRecord record;
    std::optional<QuestionResult> result;  // absent when aborted
    std::optional<bool> correct;
    std::optional<Cell> cell;
    std::string error;

    bool aborted() const noexcept { return !result.has_value(); }
};

struct BenchmarkReport {
    MetricsReport metrics;
    std::vector<RecordOutcome> outcomes;  // dataset order
    std::vector<std::string> aborted_ids;
};

// Runs every record on a pool of `parallelism` workers. Results are stored by
// dataset position and aggregated afterwards, so the report does not depend
// on scheduling. Throws EmptyDataset.
BenchmarkReport run_benchmark(const std::vector<DatasetRecord>& records, const AbcaConfig& cfg,
                              LlmBackend& llm, Embedder& embedder, const std::string& model_id,
                              int parallelism);

enum class ReportFormat { json, markdown };
ReportFormat report_format_from_string(const std::string& s);

std::string emit_report(const BenchmarkReport& report, ReportFormat format);

// JSON array with one audit bundle per record, in dataset order.
nlohmann::json results_array(const BenchmarkReport& report);

std::string to_string(Cell c);
Cell cell_from_string(const std::string& s);

}  // namespace abca
