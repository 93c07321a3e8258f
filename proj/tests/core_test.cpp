#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "abca/core.hpp"
#include "abca/error.hpp"

using namespace abca;

namespace {

std::vector<TokenScore> tokens_from_probs(std::initializer_list<double> probs) {
    std::vector<TokenScore> out;
    for (double p : probs) out.push_back({"t", std::log(p)});
    return out;
}

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no abca::Error thrown";
    return ErrorKind::Io;
}

}  // namespace

TEST(Nwgm, EqualProbabilities) {
    EXPECT_NEAR(nwgm_score(tokens_from_probs({0.5, 0.5})), 0.5, 1e-15);
}

TEST(Nwgm, SingleToken) {
    EXPECT_NEAR(nwgm_score(tokens_from_probs({0.8})), 0.8, 1e-15);
}

TEST(Nwgm, LengthInvariance) {
    EXPECT_NEAR(nwgm_score(tokens_from_probs({0.9, 0.9, 0.9, 0.9})), 0.9, 1e-15);
    EXPECT_NEAR(nwgm_score(tokens_from_probs({0.9, 0.9})), 0.9, 1e-15);
}

TEST(Nwgm, MatchesGeometricMeanOfProbabilities) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TokenScore> toks;
        double product = 1.0;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            const double p = u(rng);
            product *= p;
            toks.push_back({"x", std::log(p)});
        }
        EXPECT_NEAR(nwgm_score(toks), std::pow(product, 1.0 / n), 1e-12);
    }
}

TEST(Nwgm, Errors) {
    EXPECT_EQ(kind_of([] { nwgm_score(std::vector<TokenScore>{}); }), ErrorKind::EmptyGeneration);
    EXPECT_EQ(kind_of([] { nwgm_score(std::vector<TokenScore>{{"a", 0.1}}); }), ErrorKind::InvalidLogProb);
    EXPECT_EQ(kind_of([] { nwgm_score(std::vector<TokenScore>{{"a", std::nan("")}}); }), ErrorKind::InvalidLogProb);
}

TEST(Nwgm, VeryNegativeLogprobStaysPositive) {
    const double s = nwgm_score(std::vector<TokenScore>{{"a", -1e6}});
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 1.0);
}

TEST(Categorical, Values) {
    EXPECT_DOUBLE_EQ(categorical_score(std::log(1.0)), 1.0);
    EXPECT_NEAR(categorical_score(std::log(0.25)), 0.25, 1e-15);
    // 0.7 recovered from its logarithm computed as log(7) - log(10).
    EXPECT_NEAR(categorical_score(std::log(7.0) - std::log(10.0)), 0.7, 1e-15);
    EXPECT_EQ(kind_of([] { categorical_score(0.5); }), ErrorKind::InvalidLogProb);
}

TEST(Normalize, ThreeFourFive) {
    const std::vector<double> v{3, 4};
    const auto u = normalize(v);
    ASSERT_EQ(u.dimension(), 2u);
    EXPECT_NEAR(u[0], 0.6, 1e-15);
    EXPECT_NEAR(u[1], 0.8, 1e-15);
}

TEST(Normalize, Idempotent) {
    const std::vector<double> v{1, -2, 2};
    const auto once = normalize(v);
    const auto twice = normalize(once.components());
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(once[i], twice[i], 1e-15);
}

TEST(Normalize, Errors) {
    EXPECT_EQ(kind_of([] { normalize(std::vector<double>{0, 0}); }), ErrorKind::ZeroNorm);
    EXPECT_EQ(kind_of([] { normalize(std::vector<double>{1, 0}, 3); }), ErrorKind::DimensionMismatch);
    EXPECT_EQ(kind_of([] { UnitVector::from_normalized({1, 1}); }), ErrorKind::ZeroNorm);
}

TEST(Geometry, AngleBetween) {
    const auto a = normalize(std::vector<double>{1, 0});
    const auto b = normalize(std::vector<double>{0, 1});
    const auto c = normalize(std::vector<double>{-1, 0});
    EXPECT_NEAR(angle_between(a, b), std::numbers::pi / 2, 1e-15);
    EXPECT_NEAR(angle_between(a, c), std::numbers::pi, 1e-15);
    EXPECT_DOUBLE_EQ(angle_between(a, a), 0.0);
    EXPECT_EQ(kind_of([&] { dot(a, normalize(std::vector<double>{1, 1, 1})); }), ErrorKind::DimensionMismatch);
}

TEST(Geometry, SmallAnglesStayAccurate) {
    const auto a = normalize(std::vector<double>{1, 0});
    for (double t : {1e-4, 1e-7, 1e-10}) {
        const auto b = normalize(std::vector<double>{std::cos(t), std::sin(t)});
        EXPECT_NEAR(angle_between(a, b) / t, 1.0, 1e-6) << t;
    }
    EXPECT_EQ(kind_of([&] { angle_between(a, normalize(std::vector<double>{1, 1, 1})); }), ErrorKind::DimensionMismatch);
}

TEST(QuestionTest, Validation) {
    EXPECT_NO_THROW((Question{"q", "text", AnswerMode::open_ended, {}}.validate()));
    EXPECT_THROW((Question{"q", "", AnswerMode::open_ended, {}}.validate()), Error);
    EXPECT_THROW((Question{"q", "text", AnswerMode::categorical, {}}.validate()), Error);
}
