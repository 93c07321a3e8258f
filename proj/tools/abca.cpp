#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "abca/cache.hpp"
#include "abca/embedder.hpp"
#include "abca/harness.hpp"
#include "abca/http_backend.hpp"
#include "abca/mock_backend.hpp"
#include "abca/serialize.hpp"

namespace {

struct Options {
    std::string config_path;
    std::string backend = "http";
    std::string embedder;  // defaults to the backend kind
    std::string script;
    std::string cache_dir;
    std::optional<std::uint64_t> seed;
    int parallelism = 1;
    std::string judge;
    std::string format = "markdown";
};

struct Runtime {
    abca::AbcaConfig cfg;
    std::shared_ptr<abca::LlmBackend> llm;
    std::unique_ptr<abca::Embedder> embedder;
    std::string model_id;
};

Runtime make_runtime(const Options& o) {
    Runtime rt;
    if (!o.config_path.empty()) rt.cfg = abca::load_config(o.config_path);
    if (o.seed) rt.cfg.seed = *o.seed;
    if (!o.judge.empty()) rt.cfg.judge_mode = abca::judge_mode_from_string(o.judge);
    rt.cfg.validate();

    if (o.backend == "mock") {
        if (o.script.empty()) throw abca::Error(abca::ErrorKind::InvalidConfig, "--backend mock needs --script");
        rt.llm = std::make_shared<abca::MockBackend>(abca::MockScript::load(o.script));
        rt.model_id = "mock";
    } else {
        auto http = abca::HttpBackendConfig::from_env();
        rt.model_id = http.model_id;
        rt.llm = std::make_shared<abca::HttpBackend>(std::move(http));
    }
    if (!o.cache_dir.empty()) rt.llm = std::make_shared<abca::CachedBackend>(rt.llm, o.cache_dir);

    const auto kind = o.embedder.empty() ? o.backend : o.embedder;
    if (kind == "mock")
        rt.embedder = std::make_unique<abca::MockEmbedder>(
            abca::MockEmbedder::with_null_lexicon(rt.cfg.embedding_dim, rt.cfg.null_phrases));
    else
        rt.embedder = std::make_unique<abca::HttpEmbedder>(abca::HttpEmbedderConfig::from_env(rt.cfg.embedding_dim));
    return rt;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw abca::Error(abca::ErrorKind::Io, "cannot write " + path);
    out << text;
}

void print_bundle(const abca::QuestionResult& r, std::ostream& out) {
    out << "Question [" << r.question.id << "]: " << r.question.text << "\n";
    if (r.frame) {
        out << "Dimension: " << r.frame->dimension.name << " (score " << r.frame->dimension.score << ")\n";
        out << "Debate transcript: " << r.frame->transcript.entries.size() << " exchanges\n";
    }
    if (r.discovery_degraded) out << "Discovery degraded: " << r.degraded_reason << "\n";
    out << "Aspects:\n";
    for (std::size_t i = 0; i < r.summaries.size(); ++i) {
        const auto& s = r.summaries[i];
        out << "  - " << s.aspect << "  w=" << s.weight << "  tau=" << s.tau << "  alpha=" << s.alpha;
        if (i < r.verdict.per_aspect_theta.size()) out << "  theta=" << r.verdict.per_aspect_theta[i];
        out << "\n      answer: " << s.representative_answer << "\n";
        if (i < r.effects.size() && r.effects[i].degraded) out << "      (self-rated scores)\n";
    }
    out << "Verdict: " << abca::to_string(r.verdict.kind) << "  CAD=" << r.verdict.cad
        << "  null distance=" << r.verdict.null_distance;
    if (r.verdict.zero_centroid) out << "  (zero centroid)";
    out << "\n";
    if (!r.verdict.caveat_aspects.empty()) {
        out << "Caveats:";
        for (const auto& c : r.verdict.caveat_aspects) out << ' ' << c;
        out << "\n";
    }
    out << "Response";
    if (r.verdict.composition_fallback) out << " (fallback)";
    out << ":\n" << r.final_text << "\n";
}

int run_ask(const Options& o, const std::string& question, const std::string& id,
            const std::vector<std::string>& options, const std::string& out_path) {
    auto rt = make_runtime(o);
    abca::Question q{id, question,
                     options.empty() ? abca::AnswerMode::open_ended : abca::AnswerMode::categorical, options};
    const abca::Session s{*rt.llm, rt.cfg, rt.model_id};
    const auto result = abca::run_pipeline(q, s, *rt.embedder);
    const auto path = out_path.empty() ? id + ".audit.json" : out_path;
    write_file(path, abca::to_json(result).dump(2) + "\n");
    if (o.format == "json") {
        std::cout << abca::to_json(result).dump(2) << "\n";
    } else {
        std::cout << abca::to_string(result.verdict.kind) << "\n" << result.final_text << "\n";
    }
    std::cerr << "audit bundle: " << path << "\n";
    return 0;
}

int run_eval(const Options& o, const std::string& dataset, const std::string& out_path,
             const std::string& report_path) {
    auto rt = make_runtime(o);
    const auto records = abca::load_dataset(dataset);
    const auto report =
        abca::run_benchmark(records, rt.cfg, *rt.llm, *rt.embedder, rt.model_id, o.parallelism);
    if (!out_path.empty()) write_file(out_path, abca::results_array(report).dump(2) + "\n");
    const auto text = abca::emit_report(report, abca::report_format_from_string(o.format));
    if (report_path.empty())
        std::cout << text;
    else
        write_file(report_path, text);
    for (const auto& oc : report.outcomes)
        if (oc.aborted()) std::cerr << "aborted " << oc.record.id << ": " << oc.error << "\n";
    return report.aborted_ids.empty() ? 0 : 1;
}

int run_inspect(const Options& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw abca::Error(abca::ErrorKind::Io, "cannot open " + path);
    const auto j = nlohmann::json::parse(in);
    const auto show = [&](const nlohmann::json& bundle) {
        const auto r = abca::result_from_json(bundle);
        if (o.format == "json")
            std::cout << abca::to_json(r).dump(2) << "\n";
        else
            print_bundle(r, std::cout);
    };
    if (j.is_array()) {
        // result file from `abca eval`
        for (const auto& item : j) {
            if (item.at("result").is_null()) {
                std::cout << "Record " << item.at("record").at("id").get<std::string>()
                          << " aborted: " << item.value("error", "") << "\n\n";
                continue;
            }
            show(item.at("result"));
            if (!item.at("cell").is_null()) std::cout << "Cell: " << item["cell"].get<std::string>() << "\n";
            std::cout << "\n";
        }
    } else {
        show(j);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Answer questions with an LLM, or abstain when the evidence conflicts or is missing"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--backend", o.backend, "LLM backend")->check(CLI::IsMember({"http", "mock"}));
    app.add_option("--embedder", o.embedder, "Embedding backend (default: same as --backend)")
        ->check(CLI::IsMember({"http", "mock"}));
    app.add_option("--script", o.script, "Mock backend script")->check(CLI::ExistingFile);
    app.add_option("--cache-dir", o.cache_dir, "Completion cache directory");
    app.add_option("--seed", o.seed, "Sampling seed (overrides config)");
    app.add_option("--parallelism", o.parallelism, "Concurrent records in eval")->check(CLI::PositiveNumber);
    app.add_option("--judge", o.judge, "Answer judge")->check(CLI::IsMember({"string_match", "llm_judge"}));
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "markdown"}));

    std::string question, id = "q1", out_path, dataset, report_path, bundle;
    std::vector<std::string> options;
    auto* ask = app.add_subcommand("ask", "Answer one question or abstain");
    ask->add_option("question", question, "Question text")->required();
    ask->add_option("--id", id, "Question id");
    ask->add_option("--options", options, "Answer options (makes the question categorical)")->delimiter(',');
    ask->add_option("--out", out_path, "Audit bundle path (default <id>.audit.json)");

    auto* eval = app.add_subcommand("eval", "Run a JSONL dataset and report metrics");
    eval->add_option("dataset", dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", out_path, "Result file (JSON array of audit bundles)");
    eval->add_option("--report", report_path, "Write the report here instead of stdout");

    auto* inspect = app.add_subcommand("inspect", "Pretty-print an audit bundle or result file");
    inspect->add_option("bundle", bundle, "Audit bundle or result file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ask) return run_ask(o, question, id, options, out_path);
        if (*eval) return run_eval(o, dataset, out_path, report_path);
        return run_inspect(o, bundle);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
