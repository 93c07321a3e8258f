#include "abca/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "abca/error.hpp"

namespace abca {

std::vector<std::string> default_null_phrases() {
    return {"I don't know", "No data", "Cannot be determined", "Insufficient evidence",
            "Unknowable"};
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

template <class T>
T read_field(const nlohmann::json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        invalid("field '" + key + "' has the wrong type");
    }
}

}  // namespace

void AbcaConfig::validate() const {
    if (debate_rounds < 1) invalid("debate_rounds must be >= 1");
    if (max_aspects < 1) invalid("max_aspects must be >= 1");
    if (cot_samples < 1) invalid("cot_samples must be >= 1");
    if (answer_samples < 1) invalid("answer_samples must be >= 1");
    if (!(theta_max > 0.0 && theta_max < std::numbers::pi)) invalid("theta_max must lie in (0, pi)");
    if (!(rho_null > 0.0 && rho_null < 1.0)) invalid("rho_null must lie in (0, 1)");
    if (!(weight_convergence_threshold >= 0.0)) invalid("weight_convergence_threshold must be >= 0");
    if (null_phrases.empty()) invalid("null_phrases must be nonempty");
    for (const auto& p : null_phrases)
        if (p.empty()) invalid("null_phrases contains an empty phrase");
    if (embedding_dim < 1) invalid("embedding_dim must be >= 1");
    if (!(sampling_temperature >= 0.0)) invalid("sampling_temperature must be >= 0");
    if (!(agent_temperature >= 0.0)) invalid("agent_temperature must be >= 0");
    if (max_tokens < 1) invalid("max_tokens must be >= 1");
    if (parse_retries < 0) invalid("parse_retries must be >= 0");
}

std::string to_string(JudgeMode mode) {
    return mode == JudgeMode::string_match ? "string_match" : "llm_judge";
}

JudgeMode judge_mode_from_string(const std::string& s) {
    if (s == "string_match") return JudgeMode::string_match;
    if (s == "llm_judge") return JudgeMode::llm_judge;
    invalid("unknown judge_mode '" + s + "'");
}

nlohmann::json to_json(const AbcaConfig& cfg) {
    return {
        {"debate_rounds", cfg.debate_rounds},
        {"max_aspects", cfg.max_aspects},
        {"cot_samples", cfg.cot_samples},
        {"answer_samples", cfg.answer_samples},
        {"theta_max", cfg.theta_max},
        {"rho_null", cfg.rho_null},
        {"weight_convergence_threshold", cfg.weight_convergence_threshold},
        {"null_phrases", cfg.null_phrases},
        {"judge_mode", to_string(cfg.judge_mode)},
        {"seed", cfg.seed},
        {"embedding_dim", cfg.embedding_dim},
        {"sampling_temperature", cfg.sampling_temperature},
        {"agent_temperature", cfg.agent_temperature},
        {"max_tokens", cfg.max_tokens},
        {"parse_retries", cfg.parse_retries},
    };
}

AbcaConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) invalid("config document must be a JSON object");
    AbcaConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "debate_rounds") cfg.debate_rounds = read_field<int>(value, key);
        else if (key == "max_aspects") cfg.max_aspects = read_field<int>(value, key);
        else if (key == "cot_samples") cfg.cot_samples = read_field<int>(value, key);
        else if (key == "answer_samples") cfg.answer_samples = read_field<int>(value, key);
        else if (key == "theta_max") cfg.theta_max = read_field<double>(value, key);
        else if (key == "rho_null") cfg.rho_null = read_field<double>(value, key);
        else if (key == "weight_convergence_threshold")
            cfg.weight_convergence_threshold = read_field<double>(value, key);
        else if (key == "null_phrases")
            cfg.null_phrases = read_field<std::vector<std::string>>(value, key);
        else if (key == "judge_mode")
            cfg.judge_mode = judge_mode_from_string(read_field<std::string>(value, key));
        else if (key == "seed") cfg.seed = read_field<std::uint64_t>(value, key);
        else if (key == "embedding_dim") cfg.embedding_dim = read_field<std::size_t>(value, key);
        else if (key == "sampling_temperature")
            cfg.sampling_temperature = read_field<double>(value, key);
        else if (key == "agent_temperature") cfg.agent_temperature = read_field<double>(value, key);
        else if (key == "max_tokens") cfg.max_tokens = read_field<int>(value, key);
        else if (key == "parse_retries") cfg.parse_retries = read_field<int>(value, key);
        else invalid("unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

AbcaConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        invalid(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const AbcaConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write config " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

}  // namespace abca
