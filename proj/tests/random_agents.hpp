#pragma once

#include <random>
#include <string>

#include <json.hpp>

#include "abca/payload.hpp"
#include "support.hpp"

namespace abca::test {

// A critic and proposer that answer at random (seeded per question), parsing
// the pool they are shown out of the prompt.
class RandomAgents {
public:
    Completion operator()(const CompletionRequest& r) {
        const auto& p = r.messages.back().content;
        std::mt19937_64 rng(std::hash<std::string>{}(p));
        auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); };
        auto score = [&] { return pick(0, 3) == 0 ? 0.0 : pick(1, 10) / 10.0; };
        if (p.find(marker::dagent_identify) != std::string::npos) {
            nlohmann::json arr = nlohmann::json::array();
            for (int i = 0, n = pick(1, 4); i < n; ++i)
                arr.push_back({{"name", "Dim" + std::to_string(pick(0, 6))}, {"score", pick(1, 10) / 10.0}});
            return {arr.dump()};
        }
        if (p.find(marker::cagent_identify) != std::string::npos) {
            auto pool = parse_dimensions(p.substr(p.find("Proposed Dimensions: ")));
            nlohmann::json arr = nlohmann::json::array();
            bool any = false;
            for (auto& d : pool) {
                const double s = score();
                any = any || s > 0;
                arr.push_back({{"name", d.name}, {"score", s}});
            }
            if (!any) arr[0]["score"] = 0.5;
            return {arr.dump()};
        }
        if (p.find(marker::dagent_generate) != std::string::npos) {
            nlohmann::json arr = nlohmann::json::array();
            for (int i = 0, n = pick(1, 9); i < n; ++i) arr.push_back({{"value", "Aspect" + std::to_string(pick(0, 12))}});
            return {arr.dump()};
        }
        if (p.find(marker::cagent_generate) != std::string::npos) {
            auto pool = parse_aspects(p.substr(p.find("Proposed Aspects: ")));
            std::shuffle(pool.begin(), pool.end(), rng);
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t i = 0, n = 1 + rng() % pool.size(); i < n; ++i) arr.push_back({{"value", pool[i].value}});
            return {arr.dump()};
        }
        const bool critic = p.find(marker::cagent_weights) != std::string::npos;
        const auto marker = critic ? "Aspects and Weights: " : "Aspects: ";
        auto pool = parse_weights_or_aspects(p.substr(p.find(marker)));
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& name : pool) arr.push_back({{"value", name}, {"weight", pick(1, 100) / 100.0}});
        return {arr.dump()};
    }

private:
    static std::vector<std::string> parse_weights_or_aspects(const std::string& text) {
        std::vector<std::string> out;
        for (const auto& item : extract_json(text)) out.push_back(item.at("value").get<std::string>());
        return out;
    }
};

}  // namespace abca::test
