#include "abca/mock_backend.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace abca {

namespace {

[[noreturn]] void bad_script(const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "mock script: " + what);
}

double probability(const nlohmann::json& j, const char* key) {
    const double p = j.at(key).get<double>();
    if (!(p > 0.0 && p <= 1.0)) bad_script(std::string(key) + " must lie in (0, 1]");
    return p;
}

}  // namespace

MockScript MockScript::from_json(const nlohmann::json& j) {
    if (!j.is_object()) bad_script("document must be an object");
    MockScript script;
    try {
        for (const auto& r : j.value("rules", nlohmann::json::array())) {
            MockRule rule;
            rule.match = r.at("match").get<std::string>();
            rule.regex = r.value("regex", false);
            if (r.contains("sample_index")) rule.sample_index = r["sample_index"].get<int>();
            rule.response = r.at("response").get<std::string>();
            if (r.contains("token_prob")) rule.token_prob = probability(r, "token_prob");
            if (r.contains("tokens")) {
                std::vector<TokenScore> tokens;
                for (const auto& t : r["tokens"])
                    tokens.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
                rule.tokens = std::move(tokens);
            }
            if (rule.regex) rule.compiled = std::make_shared<const std::regex>(rule.match);
            script.rules.push_back(std::move(rule));
        }
        if (j.contains("default_response"))
            script.default_response = j["default_response"].get<std::string>();
        if (j.contains("default_token_prob"))
            script.default_token_prob = probability(j, "default_token_prob");
    } catch (const nlohmann::json::exception& e) {
        bad_script(e.what());
    } catch (const std::regex_error& e) {
        bad_script(std::string("bad regex: ") + e.what());
    }
    return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open mock script " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) bad_script(path.string() + " is not valid JSON");
    return from_json(j);
}

std::vector<std::string> mock_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t j = i;
        while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i) ++j;
        out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string prompt_text(const CompletionRequest& req) {
    std::string out;
    for (const auto& m : req.messages) {
        if (!out.empty()) out += "\n\n";
        out += m.content;
    }
    return out;
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

Completion MockBackend::complete(const CompletionRequest& req) {
    req.validate();
    ++calls_;
    const auto prompt = prompt_text(req);

    const MockRule* hit = nullptr;
    for (const auto& rule : script_.rules) {
        if (rule.sample_index && *rule.sample_index != req.sample_index) continue;
        const bool matched = rule.regex ? std::regex_search(prompt, *rule.compiled)
                                        : prompt.find(rule.match) != std::string::npos;
        if (matched) {
            hit = &rule;
            break;
        }
    }
    if (!hit && !script_.default_response) throw Error(ErrorKind::ProviderError, "no-rule");

    Completion c;
    c.provenance = Provenance::mock;
    c.text = hit ? hit->response : *script_.default_response;
    const auto pieces = mock_tokenize(c.text);
    c.usage = {static_cast<int>(mock_tokenize(prompt).size()), static_cast<int>(pieces.size())};
    if (!req.want_logprobs) return c;

    if (hit && hit->tokens) {
        c.tokens = *hit->tokens;
        return c;
    }
    const auto prob = hit && hit->token_prob ? hit->token_prob : script_.default_token_prob;
    if (!prob || pieces.empty()) throw MissingLogprobsError(std::move(c));
    std::vector<TokenScore> tokens;
    tokens.reserve(pieces.size());
    for (const auto& p : pieces) tokens.push_back({p, std::log(*prob)});
    c.tokens = std::move(tokens);
    return c;
}

}  // namespace abca
