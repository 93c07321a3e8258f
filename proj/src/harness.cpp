#include "abca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "abca/payload.hpp"
#include "abca/serialize.hpp"

namespace abca {

using nlohmann::json;

Question DatasetRecord::to_question() const {
    return {id, question, answer_mode, options};
}

json to_json(const DatasetRecord& r) {
    json j = {{"id", r.id}, {"question", r.question}, {"answerable", r.answerable}, {"gold_answers", r.gold_answers}};
    if (r.category) j["category"] = *r.category;
    if (r.answer_mode == AnswerMode::categorical) {
        j["answer_mode"] = "categorical";
        j["options"] = r.options;
    }
    return j;
}

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const json& required(const json& j, const char* name, std::size_t line) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null())
        throw Error(ErrorKind::MissingField, at_line(line) + "missing field '" + name + "'");
    return *it;
}

template <class T>
T typed(const json& v, const char* name, std::size_t line) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::MalformedRecord, at_line(line) + "field '" + name + "' has the wrong type");
    }
}

}  // namespace

DatasetRecord record_from_json(const json& j, std::size_t line) {
    if (!j.is_object()) throw Error(ErrorKind::MalformedRecord, at_line(line) + "not a JSON object");
    DatasetRecord r;
    const auto& id = required(j, "id", line);
    r.id = id.is_number_integer() ? std::to_string(id.get<long long>()) : typed<std::string>(id, "id", line);
    r.question = typed<std::string>(required(j, "question", line), "question", line);
    r.answerable = typed<bool>(required(j, "answerable", line), "answerable", line);
    if (auto it = j.find("gold_answers"); it != j.end() && !it->is_null())
        r.gold_answers = typed<std::vector<std::string>>(*it, "gold_answers", line);
    if (r.answerable && r.gold_answers.empty())
        throw Error(ErrorKind::MissingField, at_line(line) + "missing field 'gold_answers' for an answerable record");
    if (auto it = j.find("category"); it != j.end() && !it->is_null())
        r.category = typed<std::string>(*it, "category", line);
    if (auto it = j.find("answer_mode"); it != j.end() && !it->is_null()) {
        const auto mode = typed<std::string>(*it, "answer_mode", line);
        if (mode == "categorical") r.answer_mode = AnswerMode::categorical;
        else if (mode != "open_ended")
            throw Error(ErrorKind::MalformedRecord, at_line(line) + "unknown answer_mode '" + mode + "'");
    }
    if (auto it = j.find("options"); it != j.end() && !it->is_null())
        r.options = typed<std::vector<std::string>>(*it, "options", line);
    try {
        r.to_question().validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::MalformedRecord, at_line(line) + e.what());
    }
    return r;
}

std::vector<DatasetRecord> parse_dataset(std::istream& in) {
    std::vector<DatasetRecord> out;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::MalformedRecord, at_line(line) + e.what());
        }
        out.push_back(record_from_json(j, line));
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open dataset " + path.string());
    return parse_dataset(in);
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write dataset " + path.string());
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::string normalize_answer(std::string_view text) {
    std::string out;
    bool space = false;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            if (space && !out.empty()) out.push_back(' ');
            space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (c != '\'') {
            space = true;
        }
    }
    return out;
}

namespace {

bool contains_words(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    const std::string h = " " + haystack + " ";
    return h.find(" " + needle + " ") != std::string::npos;
}

}  // namespace

bool judge_string_match(std::string_view prediction, const std::vector<std::string>& gold_answers) {
    const auto pred = normalize_answer(prediction);
    for (const auto& g : gold_answers) {
        const auto gold = normalize_answer(g);
        if (contains_words(pred, gold) || contains_words(gold, pred)) return true;
    }
    return false;
}

std::string llm_judge_prompt(std::string_view prediction, const DatasetRecord& record) {
    std::string gold;
    for (const auto& g : record.gold_answers) gold += "- " + g + "\n";
    return "You are grading an answer to a question against reference answers.\n\n"
           "Question: " + record.question + "\n\nReference answers:\n" + gold +
           "\nCandidate answer: " + std::string(prediction) +
           "\n\nDecide whether the candidate answer is correct, meaning it agrees with at least one "
           "reference answer and adds no contradicting claim.\n\n"
           "Return your response in this JSON format:\n\n{\"correct\": true}";
}

bool judge(std::string_view prediction, const DatasetRecord& record, JudgeMode mode, const Session* session) {
    if (!record.answerable) return false;
    if (mode == JudgeMode::string_match) return judge_string_match(prediction, record.gold_answers);
    if (!session) throw Error(ErrorKind::JudgeFailed, "llm_judge needs a backend");
    try {
        return ask_parsed(*session,
                          make_request(*session, llm_judge_prompt(prediction, record), session->cfg.agent_temperature),
                          [](const Completion& c) { return parse_judge(c.text); });
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::MalformedPayload || e.kind() == ErrorKind::SchemaViolation)
            throw Error(ErrorKind::JudgeFailed, e.what());
        throw;
    }
}

Cell classify(bool abstained, std::optional<bool> correct, bool answerable) {
    if (abstained == correct.has_value())
        throw Error(ErrorKind::ClassificationError,
                    abstained ? "abstention carries a correctness judgement" : "answer has no correctness judgement");
    if (abstained) return answerable ? Cell::FN : Cell::TN;
    return answerable && *correct ? Cell::TP : Cell::FP;
}

void ConfusionMatrix::add(Cell cell, bool answerable) {
    switch (cell) {
        case Cell::TP: ++tp; break;
        case Cell::FP: ++fp; break;
        case Cell::FN: ++fn; break;
        case Cell::TN: ++tn; break;
    }
    ++(answerable ? n_answerable : n_unanswerable);
}

bool ConfusionMatrix::consistent() const noexcept {
    return tp + fn <= n_answerable && tn <= n_unanswerable && total() == n_answerable + n_unanswerable;
}

double MetricsReport::pct_type1() const noexcept {
    const auto n = type1 + type2;
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(type1) / static_cast<double>(n);
}

double MetricsReport::pct_type2() const noexcept {
    return type1 + type2 == 0 ? 0.0 : 100.0 - pct_type1();
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    MetricsReport m;
    m.matrix = cm;
    auto ratio = [&](const char* name, double num, double den) {
        if (den == 0.0) {
            m.degenerate.emplace_back(name);
            return 0.0;
        }
        return num / den;
    };
    auto f1 = [&](const char* name, double p, double r) {
        if (p + r == 0.0) {
            m.degenerate.emplace_back(name);
            return 0.0;
        }
        return 2.0 * p * r / (p + r);
    };
    const auto tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const auto fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
    m.acc = ratio("acc", tp + tn, tp + fp + fn + tn);
    m.a_ac = ratio("a_ac", tp, static_cast<double>(cm.n_answerable));
    m.u_ac = ratio("u_ac", tn, static_cast<double>(cm.n_unanswerable));
    m.p_a = ratio("p_a", tp, tp + fp);
    m.r_a = ratio("r_a", tp, tp + fn);
    m.p_u = ratio("p_u", tn, tn + fn);
    m.r_u = ratio("r_u", tn, tn + fp);
    m.a_f1 = f1("a_f1", m.p_a, m.r_a);
    m.u_f1 = f1("u_f1", m.p_u, m.r_u);
    return m;
}

namespace {

RecordOutcome run_record(const DatasetRecord& record, const Session& s, Embedder& embedder) {
    RecordOutcome o;
    o.record = record;
    try {
        auto result = run_pipeline(record.to_question(), s, embedder);
        if (!result.abstained()) o.correct = judge(result.final_text, record, s.cfg.judge_mode, &s);
        o.cell = classify(result.abstained(), o.correct, record.answerable);
        o.result = std::move(result);
    } catch (const std::exception& e) {
        o.result.reset();
        o.correct.reset();
        o.cell.reset();
        o.error = e.what();
    }
    return o;
}

}  // namespace

BenchmarkReport run_benchmark(const std::vector<DatasetRecord>& records, const AbcaConfig& cfg, LlmBackend& llm,
                              Embedder& embedder, const std::string& model_id, int parallelism) {
    if (records.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no records");
    cfg.validate();
    const Session s{llm, cfg, model_id};

    BenchmarkReport report;
    report.outcomes.resize(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < records.size();)
            report.outcomes[i] = run_record(records[i], s, embedder);
    };
    const auto workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), 1, records.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }

    ConfusionMatrix cm;
    std::size_t type1 = 0, type2 = 0;
    for (const auto& o : report.outcomes) {
        if (o.aborted()) {
            report.aborted_ids.push_back(o.record.id);
            continue;
        }
        cm.add(*o.cell, o.record.answerable);
        if (o.result->verdict.kind == VerdictKind::AbstainType1) ++type1;
        if (o.result->verdict.kind == VerdictKind::AbstainType2) ++type2;
    }
    report.metrics = metrics(cm);
    report.metrics.type1 = type1;
    report.metrics.type2 = type2;
    return report;
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "markdown") return ReportFormat::markdown;
    throw Error(ErrorKind::InvalidConfig, "unknown report format '" + s + "'");
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

}  // namespace

std::string emit_report(const BenchmarkReport& report, ReportFormat format) {
    if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";

    const auto& m = report.metrics;
    std::ostringstream out;
    out << "| Acc | A-Ac | U-Ac | A-F1 | U-F1 | %T1 | %T2 |\n"
        << "|---|---|---|---|---|---|---|\n"
        << "| " << fixed(m.acc, 3) << " | " << fixed(m.a_ac, 3) << " | " << fixed(m.u_ac, 3) << " | "
        << fixed(m.a_f1, 3) << " | " << fixed(m.u_f1, 3) << " | " << fixed(m.pct_type1(), 1) << " | "
        << fixed(m.pct_type2(), 1) << " |\n\n";
    const auto& c = m.matrix;
    out << "TP " << c.tp << ", FP " << c.fp << ", FN " << c.fn << ", TN " << c.tn << " (answerable " << c.n_answerable
        << ", unanswerable " << c.n_unanswerable << ")\n";
    out << "Abstentions: Type-1 " << m.type1 << ", Type-2 " << m.type2 << "\n";
    if (!m.degenerate.empty()) {
        out << "Degenerate ratios reported as 0:";
        for (const auto& d : m.degenerate) out << ' ' << d;
        out << "\n";
    }
    if (!report.aborted_ids.empty()) {
        out << "\nAborted records:\n";
        for (const auto& o : report.outcomes)
            if (o.aborted()) out << "- " << o.record.id << ": " << o.error << "\n";
    }
    return out.str();
}

json results_array(const BenchmarkReport& report) {
    json arr = json::array();
    for (const auto& o : report.outcomes) arr.push_back(to_json(o));
    return arr;
}

std::string to_string(Cell c) {
    switch (c) {
        case Cell::TP: return "TP";
        case Cell::FP: return "FP";
        case Cell::FN: return "FN";
        case Cell::TN: return "TN";
    }
    return "?";
}

Cell cell_from_string(const std::string& s) {
    if (s == "TP") return Cell::TP;
    if (s == "FP") return Cell::FP;
    if (s == "FN") return Cell::FN;
    if (s == "TN") return Cell::TN;
    throw Error(ErrorKind::ClassificationError, "unknown cell '" + s + "'");
}

}  // namespace abca
