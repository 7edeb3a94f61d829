#include "fairfront/stakeholders.hpp"
#include "fairfront/synthetic.hpp"

#include <gtest/gtest.h>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>

using namespace fairfront;

namespace {

const UtilityMatrix credit_dm{0, 0, -0.4431, 28.5473};
const UtilityMatrix credit_ds{0, -1, -5, 10};

StakeholderSpec spec_for(std::size_t groups, UtilityMatrix dm, UtilityMatrix ds)
{
    StakeholderSpec s;
    s.dm = dm;
    s.ds.assign(groups, ds);
    return s;
}

Population random_population(std::uint64_t seed, std::size_t n, std::size_t groups)
{
    boost::random::mt19937_64 rng(seed);
    boost::random::uniform_real_distribution<double> u(0.0, 1.0);
    boost::random::uniform_int_distribution<std::size_t> g(0, groups - 1);
    std::vector<Individual> xs;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < groups; ++k) {
        labels.push_back(std::to_string(k));
        xs.push_back({u(rng), k, 1, std::nullopt});
    }
    while (xs.size() < n) {
        const double p = u(rng);
        xs.push_back({p, g(rng), u(rng) < p ? 1 : 0, std::nullopt});
    }
    return Population(xs, labels);
}

// Per-individual sum written straight from the definition.
UtilityVector brute_force(const Population& pop, const PolicyParams& pol, const StakeholderSpec& spec)
{
    std::vector<double> ds_sum(pop.group_count(), 0.0);
    std::vector<double> ds_n(pop.group_count(), 0.0);
    double dm = 0;
    for (const auto& ind : pop.individuals()) {
        const double a = acceptance_prob(pol, ind.score, ind.group);
        const double p = spec.eval_mode == EvalMode::probabilistic ? ind.score : *ind.outcome;
        const auto value = [&](const UtilityMatrix& m) {
            return a * (p * m.u11 + (1 - p) * m.u10) + (1 - a) * (p * m.u01 + (1 - p) * m.u00);
        };
        UtilityMatrix own = spec.dm;
        if (spec.per_instance_dm && ind.dm_entries) {
            own = UtilityMatrix::from_array(*ind.dm_entries);
        }
        dm += value(own);
        ds_sum[ind.group] += value(spec.ds[ind.group]);
        ds_n[ind.group] += 1;
    }
    UtilityVector out;
    out.u_dm = dm / static_cast<double>(pop.size());
    for (std::size_t g = 0; g < ds_sum.size(); ++g) {
        out.u_ds.push_back(ds_sum[g] / ds_n[g]);
    }
    double egal = 0;
    for (std::size_t a = 0; a < out.u_ds.size(); ++a) {
        for (std::size_t b = a + 1; b < out.u_ds.size(); ++b) {
            egal += std::abs(out.u_ds[a] - out.u_ds[b]);
        }
    }
    out.u_sp_egal = egal;
    out.u_sp_rawls = *std::min_element(out.u_ds.begin(), out.u_ds.end());
    return out;
}

void expect_close(const UtilityVector& a, const UtilityVector& b, double tol)
{
    EXPECT_NEAR(a.u_dm, b.u_dm, tol * (1 + std::abs(b.u_dm)));
    ASSERT_EQ(a.u_ds.size(), b.u_ds.size());
    for (std::size_t g = 0; g < a.u_ds.size(); ++g) {
        EXPECT_NEAR(a.u_ds[g], b.u_ds[g], tol * (1 + std::abs(b.u_ds[g])));
    }
    EXPECT_NEAR(a.u_sp_egal, b.u_sp_egal, tol * (1 + std::abs(b.u_sp_egal)));
    EXPECT_NEAR(a.u_sp_rawls, b.u_sp_rawls, tol * (1 + std::abs(b.u_sp_rawls)));
}

} // namespace

TEST(EvalUtilities, AllRejectWithZeroRejectRowsIsZero)
{
    const auto pop = random_population(1, 50, 2);
    const auto reject = make_policy(PolicyClass::deterministic, Scope::shared, {1.0});
    // a score of exactly 1 would be accepted; the generator never draws one
    const auto u = eval_utilities(pop, reject, spec_for(2, credit_dm, {0, 0, -5, 10}));
    EXPECT_EQ(u.u_dm, 0.0);
    EXPECT_EQ(u.u_ds, (std::vector<double>{0.0, 0.0}));
}

TEST(EvalUtilities, SingleCertainRepayerAccepted)
{
    const Population pop({{1.0, 0, 1, std::nullopt}}, {"0"});
    const auto accept = make_policy(PolicyClass::deterministic, Scope::shared, {0.5});
    EXPECT_DOUBLE_EQ(eval_utilities(pop, accept, spec_for(1, credit_dm, credit_ds)).u_dm, 28.5473);
}

TEST(EvalUtilities, TwoAcceptedInOneGroup)
{
    const Population pop({{1.0, 0, 1, std::nullopt}, {0.0, 0, 0, std::nullopt}}, {"0"});
    const auto accept = make_policy(PolicyClass::deterministic, Scope::shared, {0.0});
    const auto u = eval_utilities(pop, accept, spec_for(1, credit_dm, credit_ds));
    EXPECT_DOUBLE_EQ(u.u_ds[0], 2.5);
}

TEST(EvalUtilities, MatchesBruteForceAcrossModesAndClasses)
{
    const auto pop = random_population(2, 300, 3);
    StakeholderSpec spec;
    spec.dm = credit_dm;
    spec.ds = {credit_ds, {0, 0, -4, 8}, {1, -2, -3, 5}};
    const std::vector<PolicyParams> policies{
        make_policy(PolicyClass::deterministic, Scope::shared, {0.4}),
        make_policy(PolicyClass::stochastic, Scope::shared, {0.6}, {5.0}),
        make_policy(PolicyClass::deterministic, Scope::group_specific, {0.2, 0.5, 0.9}),
        make_policy(PolicyClass::stochastic, Scope::group_specific, {0.3, 0.5, 0.7}, {1.0, 30.0, 500.0}),
    };
    for (auto mode : {EvalMode::probabilistic, EvalMode::empirical}) {
        spec.eval_mode = mode;
        for (const auto& p : policies) {
            expect_close(eval_utilities(pop, p, spec), brute_force(pop, p, spec), 1e-12);
        }
    }
}

TEST(EvalUtilities, PerInstanceDmOverridesTheConstantMatrix)
{
    std::vector<Individual> xs{{0.8, 0, 1, DmEntries{0, 0, -100, 240}},
                               {0.3, 0, 0, std::nullopt},
                               {0.6, 1, 1, DmEntries{0, 0, -50, 30}}};
    const Population pop(xs, {"0", "1"});
    auto spec = spec_for(2, credit_dm, credit_ds);
    const auto p = make_policy(PolicyClass::stochastic, Scope::shared, {0.5}, {4.0});
    expect_close(eval_utilities(pop, p, spec), brute_force(pop, p, spec), 1e-12);
    spec.per_instance_dm = false;
    expect_close(eval_utilities(pop, p, spec), brute_force(pop, p, spec), 1e-12);
}

TEST(EvalUtilities, EmpiricalModeNeedsOutcomes)
{
    const Population pop({{0.5, 0, std::nullopt, std::nullopt}}, {"0"});
    auto spec = spec_for(1, credit_dm, credit_ds);
    spec.eval_mode = EvalMode::empirical;
    EXPECT_THROW(eval_utilities(pop, make_policy(PolicyClass::deterministic, Scope::shared, {0.5}), spec),
                 ModeError);
}

TEST(EvalUtilities, ScopeAndShapeErrors)
{
    const auto pop = random_population(3, 20, 2);
    const auto three = make_policy(PolicyClass::deterministic, Scope::group_specific, {0.1, 0.2, 0.3});
    EXPECT_THROW(eval_utilities(pop, three, spec_for(2, credit_dm, credit_ds)), ScopeError);
    EXPECT_THROW(eval_utilities(pop, make_policy(PolicyClass::deterministic, Scope::shared, {0.5}),
                                spec_for(3, credit_dm, credit_ds)),
                 ConfigError);
}

TEST(Functionals, Egalitarian)
{
    EXPECT_EQ(egalitarian({2, 2}), 0.0);
    EXPECT_EQ(egalitarian({1, 3}), 2.0);
    EXPECT_EQ(egalitarian({1, 2, 4}), 6.0);
}

TEST(Functionals, Rawlsian)
{
    EXPECT_EQ(rawlsian({2, 2}), 2.0);
    EXPECT_EQ(rawlsian({1, 3}), 1.0);
    EXPECT_EQ(rawlsian({-5, 10, 0}), -5.0);
    EXPECT_THROW(rawlsian({}), MetricError);
}

TEST(CostForm, SignsFlipOnCosts)
{
    EXPECT_EQ(from_cost_form(1, 0, 0, 1), (UtilityMatrix{1, 0, 0, 1}));
    EXPECT_EQ(from_cost_form(0, 0, 0, 0), (UtilityMatrix{0, 0, 0, 0}));
    EXPECT_EQ(from_cost_form(0, 0, 0.4431, 0).u10, -0.4431);
}

TEST(CostForm, AccuracyCostsMakeDmUtilityEqualAccuracy)
{
    const auto pop = random_population(4, 200, 2);
    const auto spec = spec_for(2, from_cost_form(1, 0, 0, 1), credit_ds);
    for (double t : {0.2, 0.5, 0.8}) {
        const auto p = make_policy(PolicyClass::deterministic, Scope::shared, {t});
        double acc = 0;
        for (const auto& ind : pop.individuals()) {
            const double a = acceptance_prob(p, ind.score, ind.group);
            acc += a * ind.score + (1 - a) * (1 - ind.score);
        }
        EXPECT_NEAR(eval_utilities(pop, p, spec).u_dm, acc / 200.0, 1e-12);
    }
}

TEST(Mixture, UtilitiesAreAffineAndFairnessIsCurved)
{
    const auto pop = gen_synthetic_credit(DgmConfig{2000, 9});
    const auto spec = spec_for(2, credit_dm, credit_ds);
    boost::random::mt19937_64 rng(17);
    boost::random::uniform_real_distribution<double> u(0.01, 0.99);
    boost::random::uniform_real_distribution<double> b(0.5, 50.0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto p1 = make_policy(PolicyClass::stochastic, Scope::group_specific, {u(rng), u(rng)}, {b(rng), b(rng)});
        const auto p2 = make_policy(PolicyClass::deterministic, Scope::group_specific, {u(rng), u(rng)});
        const auto u1 = eval_utilities(pop, p1, spec);
        const auto u2 = eval_utilities(pop, p2, spec);
        for (double lambda : {0.0, 0.25, 0.5, 0.9, 1.0}) {
            const auto um = eval_utilities(pop, MixturePolicy{p1, p2, lambda}, spec);
            EXPECT_NEAR(um.u_dm, lambda * u1.u_dm + (1 - lambda) * u2.u_dm, 1e-9);
            for (std::size_t g = 0; g < 2; ++g) {
                EXPECT_NEAR(um.u_ds[g], lambda * u1.u_ds[g] + (1 - lambda) * u2.u_ds[g], 1e-9);
            }
            EXPECT_LE(um.u_sp_egal, lambda * u1.u_sp_egal + (1 - lambda) * u2.u_sp_egal + 1e-9);
            EXPECT_GE(um.u_sp_rawls, lambda * u1.u_sp_rawls + (1 - lambda) * u2.u_sp_rawls - 1e-9);
        }
    }
}

TEST(Scaling, DsScaleMultipliesFairnessObjectives)
{
    const auto pop = random_population(5, 200, 2);
    const auto base = spec_for(2, credit_dm, credit_ds);
    auto scaled = base;
    for (auto& m : scaled.ds) {
        m = m.scaled(3.0);
    }
    const auto p = make_policy(PolicyClass::stochastic, Scope::group_specific, {0.3, 0.6}, {10.0, 10.0});
    const auto a = eval_utilities(pop, p, base);
    const auto c = eval_utilities(pop, p, scaled);
    EXPECT_NEAR(c.u_sp_egal, 3.0 * a.u_sp_egal, 1e-12);
    EXPECT_NEAR(c.u_sp_rawls, 3.0 * a.u_sp_rawls, 1e-12);
    EXPECT_EQ(c.u_dm, a.u_dm);
}

TEST(Invariants, RawlsIsMinAndEgalNonNegative)
{
    const auto pop = random_population(6, 150, 3);
    StakeholderSpec spec;
    spec.dm = credit_dm;
    spec.ds = {credit_ds, {0, 0, -4, 8}, {0, -3, 1, 2}};
    for (double t : {0.1, 0.45, 0.8}) {
        const auto u = eval_utilities(pop, make_policy(PolicyClass::stochastic, Scope::shared, {t}, {2.0}), spec);
        EXPECT_EQ(u.u_sp_rawls, *std::min_element(u.u_ds.begin(), u.u_ds.end()));
        EXPECT_GE(u.u_sp_egal, 0.0);
    }
}

TEST(Parsing, JusticeAndMode)
{
    EXPECT_EQ(parse_justice("rawls"), Justice::rawlsian);
    EXPECT_EQ(parse_justice("egalitarian"), Justice::egalitarian);
    EXPECT_EQ(parse_eval_mode("empirical"), EvalMode::empirical);
    EXPECT_THROW(parse_justice("utilitarian"), ConfigError);
    EXPECT_THROW(parse_eval_mode("sampled"), ConfigError);
}
