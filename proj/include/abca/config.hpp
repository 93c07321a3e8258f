#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace abca {

enum class JudgeMode { string_match, llm_judge };

std::vector<std::string> default_null_phrases();

// Pipeline parameters. Defaults are the reference operating point:
// T=2 debate rounds, at most 5 aspects, K=2 CoTs, N=4 answers,
// theta_max=0.5 rad, rho_null=0.2.
struct AbcaConfig {
    int debate_rounds = 2;
    int max_aspects = 5;
    int cot_samples = 2;
    int answer_samples = 4;
    double theta_max = 0.5;
    double rho_null = 0.2;
    double weight_convergence_threshold = 0.1;  // L1 distance
    std::vector<std::string> null_phrases = default_null_phrases();
    JudgeMode judge_mode = JudgeMode::string_match;
    std::uint64_t seed = 42;

    std::size_t embedding_dim = 384;
    double sampling_temperature = 0.7;  // CoT and answer draws
    double agent_temperature = 0.0;     // debate agents, composition, judge
    int max_tokens = 1024;
    int parse_retries = 2;

    // Throws Error(InvalidConfig) naming the first violated bound.
    void validate() const;

    friend bool operator==(const AbcaConfig&, const AbcaConfig&) = default;
};

nlohmann::json to_json(const AbcaConfig& cfg);

// Strict: every key must be a known field; missing keys keep their defaults.
AbcaConfig config_from_json(const nlohmann::json& j);

AbcaConfig load_config(const std::filesystem::path& path);
void save_config(const AbcaConfig& cfg, const std::filesystem::path& path);

std::string to_string(JudgeMode mode);
JudgeMode judge_mode_from_string(const std::string& s);

}  // namespace abca
