#include <cmath>
#include <limits>
#include <map>

#include <gtest/gtest.h>

#include "abca/error.hpp"
#include "abca/estimation.hpp"
#include "support.hpp"

using namespace abca;
using nlohmann::json;
namespace mk = abca::test::marker;

namespace {

std::vector<AnswerSample> samples(std::initializer_list<std::pair<int, double>> items) {
    std::vector<AnswerSample> out;
    int n = 0;
    for (const auto& [j, a] : items) out.push_back({j, "ans" + std::to_string(n++), a, false});
    return out;
}

// Unbiased index draw written independently from the library: reject raw
// outputs in the incomplete top block of [0, 2^64).
std::vector<int> oracle_indices(int n, int k, std::mt19937_64 rng) {
    const unsigned __int128 range = static_cast<unsigned __int128>(1) << 64;
    const auto usable = static_cast<unsigned __int128>(range - range % static_cast<unsigned>(k));
    std::vector<int> out;
    while (static_cast<int>(out.size()) < n) {
        const std::uint64_t x = rng();
        // the library also rejects the one extra block when k divides 2^64
        const bool extra = range % static_cast<unsigned>(k) == 0 &&
                           x >= std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % k);
        if (static_cast<unsigned __int128>(x) >= usable || extra) continue;
        out.push_back(static_cast<int>(x % static_cast<std::uint64_t>(k)));
    }
    return out;
}

const Question kQ{"q1", "What is the capital of France?", AnswerMode::open_ended, {}};
const Dimension kDim{"Evidence Source", "", "", 0.9};
const AspectCandidate kAspect{"Reference Works", "", ""};

std::string cot_json(const std::string& text) { return json{{"CoT", text}}.dump(); }
std::string answer_json(const std::string& text) { return json{{"answer", text}}.dump(); }

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

}  // namespace

TEST(Mediator, Counting) {
    EXPECT_EQ(mediator_distribution(samples({{0, 1}, {0, 1}, {1, 1}, {1, 1}}), 2).probs,
              (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(mediator_distribution(samples({{0, 1}}), 2).probs, (std::vector<double>{1.0, 0.0}));
}

TEST(Mediator, MatchesBruteForceCount) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 8);
        const int n = 1 + static_cast<int>(rng() % 32);
        std::vector<AnswerSample> s;
        for (int l = 0; l < n; ++l) s.push_back({static_cast<int>(rng() % static_cast<unsigned>(k)), "", 0.5, false});
        const auto p = mediator_distribution(s, k);
        for (int j = 0; j < k; ++j) {
            int count = 0;
            for (const auto& x : s) count += x.cot_index == j;
            EXPECT_EQ(p.probs[static_cast<std::size_t>(j)], static_cast<double>(count) / n);
        }
    }
}

TEST(Mediator, Errors) {
    EXPECT_EQ(kind_of([] { mediator_distribution({}, 2); }), ErrorKind::EmptySample);
    EXPECT_EQ(kind_of([] { mediator_distribution(samples({{2, 1}}), 2); }), ErrorKind::EstimatorInconsistency);
}

TEST(Regression, GroupMeans) {
    const auto r = outcome_regression(samples({{0, 0.8}, {0, 0.6}, {1, 0.4}}), 2);
    ASSERT_TRUE(r.means[0] && r.means[1]);
    EXPECT_NEAR(*r.means[0], 0.7, 1e-15);
    EXPECT_NEAR(*r.means[1], 0.4, 1e-15);
    const auto only0 = outcome_regression(samples({{0, 0.3}, {0, 0.5}}), 2);
    EXPECT_NEAR(*only0.means[0], 0.4, 1e-15);
    EXPECT_FALSE(only0.means[1]);
}

TEST(Regression, MatchesGroupwiseOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 8);
        const int n = 1 + static_cast<int>(rng() % 32);
        std::vector<AnswerSample> s;
        std::map<int, std::vector<double>> groups;
        for (int l = 0; l < n; ++l) {
            const int j = static_cast<int>(rng() % static_cast<unsigned>(k));
            const double a = u(rng);
            s.push_back({j, "", a, false});
            groups[j].push_back(a);
        }
        const auto r = outcome_regression(s, k);
        for (int j = 0; j < k; ++j) {
            const auto it = groups.find(j);
            if (it == groups.end()) {
                EXPECT_FALSE(r.means[static_cast<std::size_t>(j)]);
                continue;
            }
            double sum = 0;
            for (double a : it->second) sum += a;
            EXPECT_NEAR(*r.means[static_cast<std::size_t>(j)], sum / static_cast<double>(it->second.size()), 1e-15);
        }
    }
}

TEST(Aipw, SameSampleHandOracle) {
    const auto s = samples({{0, 0.8}, {0, 0.6}, {1, 0.4}});
    const auto p = mediator_distribution(s, 2);
    const auto mu = outcome_regression(s, 2);
    const auto t = aipw_terms(s, p, mu);

    const double p0 = 2.0 / 3.0, p1 = 1.0 / 3.0;
    const double mu0 = (0.8 + 0.6) / 2.0, mu1 = 0.4;
    const double plug_in = p0 * mu0 + p1 * mu1;
    const double correction = ((0.8 - mu0) / p0 + (0.6 - mu0) / p0 + (0.4 - mu1) / p1) / 3.0;
    EXPECT_EQ(t.plug_in, plug_in);
    EXPECT_EQ(t.correction, correction);
    EXPECT_EQ(t.tau, plug_in + correction);
    EXPECT_NEAR(t.tau, 0.6, 1e-12);
    EXPECT_NEAR(t.correction, 0.0, 1e-12);
}

TEST(Aipw, ExternalRegressionHandOracle) {
    const auto s = samples({{0, 0.8}, {0, 0.6}, {1, 0.4}});
    const auto p = mediator_distribution(s, 2);
    const OutcomeRegression external{{0.5, 0.5}};
    const auto t = aipw_terms(s, p, external);

    const double p0 = 2.0 / 3.0, p1 = 1.0 / 3.0;
    const double plug_in = p0 * 0.5 + p1 * 0.5;
    const double correction = ((0.8 - 0.5) / p0 + (0.6 - 0.5) / p0 + (0.4 - 0.5) / p1) / 3.0;
    EXPECT_EQ(t.plug_in, plug_in);
    EXPECT_EQ(t.correction, correction);
    EXPECT_EQ(t.tau, plug_in + correction);
    EXPECT_NEAR(t.plug_in, 0.5, 1e-12);
    EXPECT_NEAR(t.correction, 0.1, 1e-12);
    EXPECT_NEAR(t.tau, 0.6, 1e-12);
}

TEST(Aipw, IdentityCase) {
    const auto s = samples({{0, 0.35}, {0, 0.35}, {0, 0.35}});
    EXPECT_NEAR(aipw_effect(s, mediator_distribution(s, 2), outcome_regression(s, 2)), 0.35, 1e-15);
}

TEST(Aipw, CorrectionVanishesUnderSameSampleFit) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(std::nextafter(0.0, 1.0), 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 8);
        const int n = 1 + static_cast<int>(rng() % 32);
        std::vector<AnswerSample> s;
        for (int l = 0; l < n; ++l) s.push_back({static_cast<int>(rng() % static_cast<unsigned>(k)), "", u(rng), false});
        const auto t = aipw_terms(s, mediator_distribution(s, k), outcome_regression(s, k));
        EXPECT_NEAR(t.correction, 0.0, 1e-12);
        EXPECT_NEAR(t.tau, t.plug_in, 1e-12);
    }
}

TEST(Aipw, Inconsistencies) {
    const auto s = samples({{0, 0.8}, {1, 0.4}});
    EXPECT_EQ(kind_of([&] { aipw_terms(s, {{1.0, 0.0}}, {{0.8, 0.4}}); }), ErrorKind::EstimatorInconsistency);
    EXPECT_EQ(kind_of([&] { aipw_terms(s, {{0.5, 0.5}}, {{0.8, std::nullopt}}); }), ErrorKind::EstimatorInconsistency);
    EXPECT_EQ(kind_of([&] { aipw_terms(s, {{0.5, 0.5}}, {{0.8}}); }), ErrorKind::EstimatorInconsistency);
    EXPECT_EQ(kind_of([&] { aipw_terms({}, {{1.0}}, {{0.8}}); }), ErrorKind::EmptySample);
}

TEST(Representative, ArgmaxAndTies) {
    const auto s = samples({{1, 0.4}, {0, 0.8}, {0, 0.6}});
    EXPECT_EQ(representative_answer(s, outcome_regression(s, 2)), "ans1");
    EXPECT_EQ(representative_answer(samples({{0, 0.2}}), OutcomeRegression{{0.2}}), "ans0");
    // tie on mu: both CoTs qualify, earliest best-scoring sample wins
    const auto tie = samples({{1, 0.5}, {0, 0.5}, {0, 0.5}, {1, 0.5}});
    EXPECT_EQ(representative_answer(tie, outcome_regression(tie, 2)), "ans0");
}

TEST(Indices, EngineIsTheStandardOne) {
    // The standard requires this value for the 10000th draw of a default-seeded engine.
    std::mt19937_64 e;
    e.discard(9999);
    EXPECT_EQ(e(), 9981545732273789042ULL);
}

TEST(Indices, MatchOracleForAllSmallK) {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL})
        for (int k = 1; k <= 8; ++k) {
            std::mt19937_64 rng(seed);
            EXPECT_EQ(draw_cot_indices(32, k, rng), oracle_indices(32, k, std::mt19937_64(seed)));
        }
}

TEST(Indices, DocumentedSeedGolden) {
    std::mt19937_64 rng(42);
    EXPECT_EQ(draw_cot_indices(4, 2, rng), (std::vector<int>{0, 0, 0, 0}));
}

TEST(Indices, Errors) {
    std::mt19937_64 rng(1);
    EXPECT_THROW(draw_cot_indices(0, 2, rng), Error);
    EXPECT_THROW(draw_cot_indices(2, 0, rng), Error);
}

TEST(Score, AnswerSpanOnly) {
    const std::vector<TokenScore> toks{{"{\"answer\": \"", -2.0}, {"Paris", -0.2}, {"\"}", -3.0}};
    EXPECT_NEAR(score_answer(toks, "Paris", AnswerMode::open_ended), std::exp(-0.2), 1e-15);
    const std::vector<TokenScore> two{{"{\"answer\": \"", -2.0}, {"New", -0.1}, {" York", -0.3}, {"\"}", -3.0}};
    EXPECT_NEAR(score_answer(two, "New York", AnswerMode::open_ended), std::exp(-0.2), 1e-15);
    EXPECT_NEAR(score_answer(two, "New York", AnswerMode::categorical), std::exp(-0.4), 1e-15);
    // unlocatable answer: every token counts
    EXPECT_NEAR(score_answer(toks, "Lyon", AnswerMode::open_ended), std::exp(-5.2 / 3.0), 1e-15);
}

TEST(Sampling, CotsAreScriptedInOrder) {
    MockBackend mock(MockScript::from_json(
        {{"rules", {{{"match", mk::cot}, {"sample_index", 0}, {"response", cot_json("first")}},
                    {{"match", mk::cot}, {"sample_index", 1}, {"response", cot_json("second")}}}}}));
    AbcaConfig cfg;
    const auto cots = sample_cots(kQ, kAspect, kDim, 2, Session{mock, cfg, "m"});
    ASSERT_EQ(cots.size(), 2u);
    EXPECT_EQ(cots[0].index, 0);
    EXPECT_EQ(cots[0].text, "first");
    EXPECT_EQ(cots[1].index, 1);
    EXPECT_EQ(cots[1].text, "second");
}

TEST(Sampling, MalformedCotFails) {
    MockBackend mock(MockScript::from_json({{"rules", {test::rule(mk::cot, "no json")}}}));
    AbcaConfig cfg;
    EXPECT_EQ(kind_of([&] { sample_cots(kQ, kAspect, kDim, 1, Session{mock, cfg, "m"}); }),
              ErrorKind::SamplingFailed);
    EXPECT_EQ(mock.calls(), 3u);
}

TEST(Sampling, ConstantScores) {
    MockBackend mock(MockScript::from_json({{"rules",
                                             {test::rule(mk::cot, cot_json("think")),
                                              test::rule(mk::answer, answer_json("Paris"), 0.9)}}}));
    AbcaConfig cfg;
    std::mt19937_64 rng(1);
    const auto effect = estimate_aspect(kQ, kDim, kAspect, Session{mock, cfg, "m"}, rng);
    ASSERT_EQ(effect.samples.size(), 4u);
    for (const auto& s : effect.samples) EXPECT_NEAR(s.score, 0.9, 1e-12);
    EXPECT_NEAR(effect.tau, 0.9, 1e-12);
    EXPECT_EQ(effect.representative_answer, "Paris");
    EXPECT_FALSE(effect.degraded);
}

TEST(Sampling, LiteConfiguration) {
    MockBackend mock(MockScript::from_json({{"rules",
                                             {test::rule(mk::cot, cot_json("think")),
                                              test::rule(mk::answer, answer_json("Paris"), 0.37)}}}));
    AbcaConfig cfg;
    cfg.debate_rounds = cfg.cot_samples = cfg.answer_samples = 1;
    std::mt19937_64 rng(1);
    const auto effect = estimate_aspect(kQ, kDim, kAspect, Session{mock, cfg, "m"}, rng);
    ASSERT_EQ(effect.samples.size(), 1u);
    EXPECT_EQ(effect.samples[0].cot_index, 0);
    EXPECT_EQ(effect.tau, effect.samples[0].score);
    EXPECT_NEAR(effect.tau, 0.37, 1e-12);
}

TEST(Sampling, TwoCotsHandOracle) {
    MockBackend mock(MockScript::from_json(
        {{"rules", {{{"match", mk::cot}, {"sample_index", 0}, {"response", cot_json("route A")}},
                    {{"match", mk::cot}, {"sample_index", 1}, {"response", cot_json("route B")}},
                    test::rule("Chain of Thought: route A", answer_json("Paris"), 0.8),
                    test::rule("Chain of Thought: route B", answer_json("Lyon"), 0.4)}}}));
    AbcaConfig cfg;
    cfg.answer_samples = 8;
    const std::uint64_t seed = aspect_seed(cfg.seed, kQ.id, 0);
    std::mt19937_64 rng(seed);
    const auto effect = estimate_aspect(kQ, kDim, kAspect, Session{mock, cfg, "m"}, rng);

    const auto idx = oracle_indices(8, 2, std::mt19937_64(seed));
    double n0 = 0, n1 = 0;
    for (int j : idx) (j == 0 ? n0 : n1) += 1;
    ASSERT_GT(n0, 0);
    ASSERT_GT(n1, 0);
    // every draw from one CoT scores the same, so mu_j is that score and the correction is 0
    const double expected = (n0 / 8) * 0.8 + (n1 / 8) * 0.4;
    EXPECT_NEAR(effect.tau, expected, 1e-12);
    for (std::size_t l = 0; l < idx.size(); ++l) EXPECT_EQ(effect.samples[l].cot_index, idx[l]);
    EXPECT_EQ(effect.representative_answer, "Paris");
}

TEST(Sampling, SelfRatingFallback) {
    MockBackend mock(MockScript::from_json({{"rules",
                                             {test::rule(mk::cot, cot_json("think")),
                                              test::rule("Assess how likely", R"({"probability": 0.3})"),
                                              test::rule(mk::answer, answer_json("Paris"))}}}));
    AbcaConfig cfg;
    std::mt19937_64 rng(1);
    const auto effect = estimate_aspect(kQ, kDim, kAspect, Session{mock, cfg, "m"}, rng);
    EXPECT_TRUE(effect.degraded);
    for (const auto& s : effect.samples) {
        EXPECT_TRUE(s.self_rated);
        EXPECT_EQ(s.text, "Paris");
    }
    EXPECT_NEAR(effect.tau, 0.3, 1e-12);
}

TEST(Sampling, CategoricalQuestionBindsOptions) {
    const Question q{"q2", "Which is larger?", AnswerMode::categorical, {"Sun", "Moon"}};
    EXPECT_EQ(question_binding(q), "Which is larger?\nOptions:\n- Sun\n- Moon");
    EXPECT_EQ(question_binding(kQ), kQ.text);
}

TEST(Seeds, AspectSeedsDiffer) {
    EXPECT_NE(aspect_seed(42, "q1", 0), aspect_seed(42, "q1", 1));
    EXPECT_NE(aspect_seed(42, "q1", 0), aspect_seed(42, "q2", 0));
    EXPECT_NE(aspect_seed(42, "q1", 0), aspect_seed(43, "q1", 0));
    EXPECT_EQ(aspect_seed(42, "q1", 0), aspect_seed(42, "q1", 0));
}
