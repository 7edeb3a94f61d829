#include "fairfront/predictive.hpp"
#include "fairfront/sweep.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace fairfront;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig cfg;
    cfg.dgm.n = 1500;
    cfg.dgm.seed = 4;
    cfg.grid.threshold_count = 12;
    cfg.grid.betas = {1e6, 20, 2};
    return cfg;
}

} // namespace

TEST(Sweep, SharedDeterministicGridGivesOneRowPerThresholdAndSplit)
{
    auto cfg = small_config();
    cfg.grid.threshold_count = 100;
    cfg.classes = {PolicyClass::deterministic};
    cfg.scopes = {Scope::shared};
    cfg.split = SplitConfig{0.7, 1};
    const auto r = run_sweep(cfg);
    EXPECT_EQ(r.rows.size(), 200u);
    std::size_t train = 0;
    for (const auto& row : r.rows) {
        train += row.split == SplitTag::train;
    }
    EXPECT_EQ(train, 100u);
    EXPECT_TRUE(r.has_split(SplitTag::test));
}

TEST(Sweep, RowsAgreeWithDirectEvaluation)
{
    const auto cfg = small_config();
    const auto pop = load_population(cfg);
    const auto r = run_sweep(cfg, pop);
    EXPECT_EQ(r.rows.size(), grid_size(cfg.grid, cfg.classes, cfg.scopes, 2, cfg.pairing));
    for (std::size_t i = 0; i < r.rows.size(); i += 37) {
        const auto& row = r.rows[i];
        const auto u = eval_utilities(pop, row.policy, cfg.stakeholders);
        EXPECT_NEAR(row.utility.u_dm, u.u_dm, 1e-9);
        EXPECT_NEAR(row.utility.u_sp_egal, u.u_sp_egal, 1e-9);
        EXPECT_NEAR(row.utility.u_sp_rawls, u.u_sp_rawls, 1e-9);
        EXPECT_NEAR(row.accuracy, accuracy(pop, row.policy), 1e-12);
        EXPECT_NEAR(row.eo, eo_disparity(pop, row.policy), 1e-12);
    }
}

TEST(Sweep, WorkerCountDoesNotChangeResults)
{
    auto cfg = small_config();
    cfg.split = SplitConfig{0.6, 2};
    const auto one = run_sweep(cfg, 1);
    EXPECT_EQ(run_sweep(cfg, 3), one);
    EXPECT_EQ(run_sweep(cfg, 8), one);
}

TEST(Sweep, RowsRoundTripBitForBit)
{
    auto cfg = small_config();
    cfg.split = SplitConfig{0.7, 0};
    const auto r = run_sweep(cfg);
    std::stringstream buf;
    write_rows(buf, r);
    const auto back = read_rows(buf);
    EXPECT_EQ(back, r);
    ASSERT_NE(back.find(r.rows[5].policy.id, SplitTag::test), nullptr);

    std::stringstream again;
    write_rows(again, back);
    EXPECT_EQ(again.str(), buf.str());

    const auto path = std::filesystem::temp_directory_path() / rows_file_name(r.config_hash);
    save_rows(r, path.string());
    EXPECT_EQ(load_rows(path.string()), r);
    std::filesystem::remove(path);
}

TEST(Sweep, UndefinedEqualOpportunitySurvivesPersistence)
{
    std::vector<Individual> xs{{0.0, 0, 0, {}}, {0.2, 0, 0, {}}, {0.7, 1, 1, {}}, {0.3, 1, 0, {}}};
    const Population pop(xs, {"a", "b"});
    auto cfg = small_config();
    cfg.stakeholders.eval_mode = EvalMode::empirical;
    const auto r = run_sweep(cfg, pop);
    EXPECT_TRUE(std::isnan(r.rows[0].eo));
    std::stringstream buf;
    write_rows(buf, r);
    EXPECT_EQ(read_rows(buf), r);
}

TEST(Sweep, MalformedRowsAreRejected)
{
    std::stringstream empty;
    EXPECT_THROW(read_rows(empty), DataError);
    std::stringstream wrong("# fairfront sweep rows\n# schema_version\t9\n");
    EXPECT_THROW(read_rows(wrong), DataError);

    const auto r = run_sweep(small_config());
    std::stringstream buf;
    write_rows(buf, r);
    std::string text = buf.str();
    text.resize(text.size() - 20);
    std::stringstream cut(text + "\n");
    EXPECT_THROW(read_rows(cut), DataError);
    EXPECT_THROW(load_rows("/nonexistent/rows"), DataError);
}

TEST(Sweep, EmpiricalModeWithoutOutcomesFails)
{
    std::vector<Individual> xs{{0.1, 0, {}, {}}, {0.7, 1, {}, {}}};
    auto cfg = small_config();
    cfg.stakeholders.eval_mode = EvalMode::empirical;
    EXPECT_THROW(run_sweep(cfg, Population(xs, {"0", "1"})), ModeError);
}

TEST(Whatif, SameSpecIsANoOp)
{
    const auto r = run_sweep(small_config());
    EXPECT_EQ(whatif(r, r.stakeholders), r);
}

TEST(Whatif, MatchesAFreshSweepUnderTheNewSpec)
{
    auto cfg = small_config();
    const auto r = run_sweep(cfg);
    auto spec = cfg.stakeholders;
    spec.dm = {0, 0, -2, 5};
    spec.ds[1] = {0, 1, 5, -10};
    const auto w = whatif(r, spec);
    cfg.stakeholders = spec;
    const auto fresh = run_sweep(cfg);
    ASSERT_EQ(w.rows.size(), fresh.rows.size());
    for (std::size_t i = 0; i < w.rows.size(); ++i) {
        EXPECT_EQ(w.rows[i].utility, fresh.rows[i].utility);
    }
}

TEST(Whatif, ScalingDsKeepsTheFrontPoliciesAndScalesFairness)
{
    const auto r = run_sweep(small_config());
    auto spec = r.stakeholders;
    for (auto& m : spec.ds) {
        m = m.scaled(4.0);
    }
    const auto w = whatif(r, spec);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        EXPECT_NEAR(w.rows[i].utility.u_sp_egal, 4.0 * r.rows[i].utility.u_sp_egal,
                    1e-12 * (1 + std::abs(r.rows[i].utility.u_sp_egal)));
    }
    EXPECT_THROW(whatif(r, StakeholderSpec{}), ConfigError);
}

TEST(ParallelFor, CoversEveryIndexOnceAndPropagatesErrors)
{
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) {
        EXPECT_EQ(h, 1);
    }
    EXPECT_THROW(parallel_for(500, 4,
                              [](std::size_t i) {
                                  if (i == 321) {
                                      throw MetricError("boom");
                                  }
                              }),
                 MetricError);
}
