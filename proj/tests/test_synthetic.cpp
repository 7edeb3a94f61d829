#include "fairfront/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace fairfront;

namespace {

DgmConfig large(std::uint64_t seed)
{
    DgmConfig cfg;
    cfg.n = 100000;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST(DgmConfig, RejectsInvalidValues)
{
    DgmConfig cfg;
    cfg.n = 0;
    EXPECT_THROW(gen_synthetic_credit(cfg), ConfigError);
    EXPECT_THROW(gen_synthetic_hiring(cfg), ConfigError);
    cfg.n = 10;
    cfg.bias = 1.0;
    EXPECT_THROW(gen_synthetic_credit(cfg), ConfigError);
    cfg.bias = 0.0;
    EXPECT_THROW(gen_synthetic_hiring(cfg), ConfigError);
}

TEST(SyntheticCredit, AgeIsCenteredNearZero)
{
    const auto records = generate_credit_records(large(11));
    double sum = 0;
    for (const auto& r : records) {
        sum += r.age;
    }
    EXPECT_NEAR(sum / static_cast<double>(records.size()), 0.0, 0.2);
}

TEST(SyntheticCredit, GroupFractionFollowsBias)
{
    const auto pop = gen_synthetic_credit(large(12));
    EXPECT_NEAR(static_cast<double>(pop.group_size(1)) / static_cast<double>(pop.size()), 0.5, 0.01);
    DgmConfig skewed = large(12);
    skewed.bias = 0.2;
    const auto pop2 = gen_synthetic_credit(skewed);
    EXPECT_NEAR(static_cast<double>(pop2.group_size(1)) / static_cast<double>(pop2.size()), 0.2, 0.01);
}

TEST(SyntheticCredit, InteractionSignFollowsIncomeAndSavings)
{
    for (const auto& r : generate_credit_records(large(13))) {
        EXPECT_EQ(r.interaction, (r.income > 0 && r.savings > 0) ? 1.0 : -1.0);
    }
}

TEST(SyntheticCredit, LogitAndScoreFollowTheStructuralEquations)
{
    DgmConfig cfg;
    cfg.n = 2000;
    cfg.seed = 5;
    const double scale = std::sqrt(1.0 + M_PI * 4.0 / 8.0);
    for (const auto& r : generate_credit_records(cfg)) {
        const double logit = cfg.delta * (-r.loan - r.duration) +
                             0.3 * (r.income + r.savings + r.interaction * r.income * r.savings);
        EXPECT_NEAR(r.logit, logit, 1e-12 * (1 + std::abs(logit)));
        EXPECT_NEAR(r.probability, 1.0 / (1.0 + std::exp(-logit / scale)), 1e-12);
        EXPECT_TRUE(r.gender == 0 || r.gender == 1);
    }
    cfg.marginalize_noise = false;
    for (const auto& r : generate_credit_records(cfg)) {
        EXPECT_NEAR(r.probability, 1.0 / (1.0 + std::exp(-r.logit)), 1e-12);
    }
}

TEST(SyntheticCredit, OutcomeRateMatchesMeanScore)
{
    const auto pop = gen_synthetic_credit(large(14));
    double score = 0, outcome = 0;
    for (const auto& ind : pop.individuals()) {
        score += ind.score;
        outcome += *ind.outcome;
    }
    EXPECT_NEAR(score / 1e5, outcome / 1e5, 0.01);
}

TEST(SyntheticCredit, GenerationIsAPureFunctionOfTheConfig)
{
    DgmConfig cfg;
    cfg.n = 500;
    cfg.seed = 77;
    EXPECT_EQ(gen_synthetic_credit(cfg), gen_synthetic_credit(cfg));
    DgmConfig other = cfg;
    other.seed = 78;
    EXPECT_FALSE(gen_synthetic_credit(cfg) == gen_synthetic_credit(other));
}

TEST(SyntheticHiring, ScoresAreProbabilities)
{
    const auto pop = gen_synthetic_hiring(large(21));
    for (const auto& ind : pop.individuals()) {
        EXPECT_GT(ind.score, 0.0);
        EXPECT_LT(ind.score, 1.0);
    }
}

TEST(SyntheticHiring, ExperienceClampAsWritten)
{
    // min(max(0, .), A + 15): the cap wins whenever A + 15 < 0
    for (const auto& r : generate_hiring_records(large(22))) {
        EXPECT_LE(r.experience_years, r.age + 15.0);
        if (r.age + 15.0 >= 0.0) {
            EXPECT_GE(r.experience_years, 0.0);
        } else {
            EXPECT_EQ(r.experience_years, r.age + 15.0);
        }
    }
}

TEST(SyntheticHiring, OutcomeRateMatchesMeanScore)
{
    const auto pop = gen_synthetic_hiring(large(23));
    double score = 0, outcome = 0;
    for (const auto& ind : pop.individuals()) {
        score += ind.score;
        outcome += *ind.outcome;
    }
    EXPECT_NEAR(score / 1e5, outcome / 1e5, 0.01);
}

TEST(SyntheticHiring, ScoreFollowsTheOutcomeEquation)
{
    DgmConfig cfg;
    cfg.n = 2000;
    for (const auto& r : generate_hiring_records(cfg)) {
        const double z = -4.0 + 0.5 * r.interview - 1.0 / (1.0 + std::exp(-0.1 * r.previous_companies)) +
                         0.1 * r.experience_years + 0.5 * r.education;
        EXPECT_NEAR(r.probability, 1.0 / (1.0 + std::exp(-z)), 1e-12);
        EXPECT_GT(r.interview, 0.0);
        EXPECT_LT(r.interview, 10.0);
        EXPECT_EQ(r.previous_companies, std::floor(r.previous_companies));
    }
}

TEST(SyntheticHiring, Deterministic)
{
    DgmConfig cfg;
    cfg.n = 1000;
    cfg.seed = 7;
    EXPECT_EQ(gen_synthetic_hiring(cfg), gen_synthetic_hiring(cfg));
}
