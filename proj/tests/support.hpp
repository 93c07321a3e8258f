#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <json.hpp>

#include "abca/backend.hpp"
#include "abca/mock_backend.hpp"

namespace abca::test {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(ABCA_SOURCE_DIR) / rel;
}

inline MockScript script_file(const std::string& name) {
    return MockScript::load(source_path("assets/scripts/" + name));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("abca-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Backend whose behaviour is a plain function of the request.
class FunctionBackend : public LlmBackend {
public:
    explicit FunctionBackend(std::function<Completion(const CompletionRequest&)> fn) : fn_(std::move(fn)) {}
    Completion complete(const CompletionRequest& req) override {
        ++calls;
        return fn_(req);
    }
    int calls = 0;

private:
    std::function<Completion(const CompletionRequest&)> fn_;
};

inline nlohmann::json rule(std::string match, std::string response) {
    return {{"match", std::move(match)}, {"response", std::move(response)}};
}

inline nlohmann::json rule(std::string match, std::string response, double token_prob) {
    return {{"match", std::move(match)}, {"response", std::move(response)}, {"token_prob", token_prob}};
}

// Substrings that identify each stock prompt.
namespace marker {
inline constexpr const char* dagent_identify = "identifies context dimensions that influence";
inline constexpr const char* cagent_identify = "CRITICALLY evaluates proposed dimensions";
inline constexpr const char* dagent_generate = "identifies specific aspects within a context dimension";
inline constexpr const char* cagent_generate = "CRITICALLY evaluates the proposed aspects";
inline constexpr const char* dagent_weights = "assigns importance weights";
inline constexpr const char* cagent_weights = "rigorously evaluates weight assignments";
inline constexpr const char* cot = "generate a chain of thought for answering";
inline constexpr const char* answer = "use the chain of thought below to answer";
inline constexpr const char* type1 = "reveals contradictory information";
inline constexpr const char* type2 = "reveals insufficient knowledge";
inline constexpr const char* aggregate = "Synthesise the following aspect-based answers";
}  // namespace marker

}  // namespace abca::test
