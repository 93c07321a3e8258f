#pragma once

#include <string>

namespace abca {

// Records exchanged with the debate agents, in the field layout the prompt
// templates request.

struct Dimension {
    std::string name;
    std::string description;
    std::string justification;
    double score = 0.0;  // [0, 1]; 0 means rejected by the critic

    friend bool operator==(const Dimension&, const Dimension&) = default;
};

struct AspectCandidate {
    std::string value;
    std::string description;
    std::string justification;

    friend bool operator==(const AspectCandidate&, const AspectCandidate&) = default;
};

struct WeightProposal {
    std::string value;
    double weight = 0.0;
    std::string justification;

    friend bool operator==(const WeightProposal&, const WeightProposal&) = default;
};

}  // namespace abca
