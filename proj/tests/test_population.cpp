#include "fairfront/population.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fairfront;

namespace {

Population parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_population_csv(in);
}

Population make_population(std::size_t per_group_a, std::size_t per_group_b)
{
    std::vector<Individual> xs;
    for (std::size_t i = 0; i < per_group_a; ++i) {
        xs.push_back({0.01 * static_cast<double>(i % 100), 0, static_cast<int>(i % 2), std::nullopt});
    }
    for (std::size_t i = 0; i < per_group_b; ++i) {
        xs.push_back({0.005 * static_cast<double>(i % 200), 1, static_cast<int>(i % 3 == 0), std::nullopt});
    }
    return Population(xs, {"0", "1"}, "test");
}

} // namespace

TEST(Population, RejectsInvalidConstruction)
{
    EXPECT_THROW(Population({}, {"0"}), DataError);
    EXPECT_THROW(Population({{1.2, 0, {}, {}}}, {"0"}), DataError);
    EXPECT_THROW(Population({{0.2, 1, {}, {}}}, {"0"}), DataError);
    EXPECT_THROW(Population({{0.2, 0, 2, {}}}, {"0"}), DataError);
    // group "1" declared but absent
    EXPECT_THROW(Population({{0.2, 0, {}, {}}}, {"0", "1"}), DataError);
}

TEST(Population, MembersPartitionIndividuals)
{
    const auto pop = make_population(30, 20);
    EXPECT_EQ(pop.group_count(), 2u);
    EXPECT_EQ(pop.group_size(0), 30u);
    EXPECT_EQ(pop.group_size(1), 20u);
    EXPECT_EQ(pop.members(0).size() + pop.members(1).size(), pop.size());
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t i : pop.members(g)) {
            EXPECT_EQ(pop.individuals()[i].group, g);
        }
    }
}

TEST(IngestCsv, ThreeRowFile)
{
    const auto pop = parse("score,group\n0.2,0\n0.5,1\n0.9,0\n");
    EXPECT_EQ(pop.size(), 3u);
    EXPECT_EQ(pop.group_count(), 2u);
    EXPECT_EQ(pop.individuals()[1].group, 1u);
    EXPECT_DOUBLE_EQ(pop.individuals()[2].score, 0.9);
    EXPECT_FALSE(pop.individuals()[0].outcome.has_value());
}

TEST(IngestCsv, OutOfRangeScoreNamesTheLine)
{
    try {
        parse("score,group\n0.2,0\n1.3,1\n");
        FAIL() << "expected a row error";
    } catch (const RowError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(IngestCsv, SchemaErrors)
{
    EXPECT_THROW(parse(""), SchemaError);
    EXPECT_THROW(parse("score,outcome\n0.2,1\n"), SchemaError);
    EXPECT_THROW(parse("score,group\n"), SchemaError);
    EXPECT_THROW(parse("score,group,dm_u00\n0.2,0,1\n"), SchemaError);
    EXPECT_THROW(parse("score,group\n0.2\n"), RowError);
    EXPECT_THROW(parse("score,group,outcome\n0.2,0,2\n"), RowError);
}

TEST(IngestCsv, PerInstanceDmColumns)
{
    // dm_u11 = L * D / 12 * rate computed outside
    const double l = 4000, d = 24, rate = 0.03;
    std::ostringstream text;
    text << "score,group,outcome,dm_u00,dm_u01,dm_u10,dm_u11\n";
    text << "0.7,a,1,0,0,-400," << format_double(l * d / 12 * rate) << "\n";
    text << "0.4,b,0,0,0,-100,60\n";
    const auto pop = parse(text.str());
    ASSERT_TRUE(pop.has_dm_entries());
    EXPECT_DOUBLE_EQ((*pop.individuals()[0].dm_entries)[3], 240.0);
    EXPECT_EQ(pop.group_labels(), (std::vector<std::string>{"a", "b"}));
}

TEST(IngestCsv, NumericLabelsSortNumerically)
{
    EXPECT_EQ(dense_group_order({"10", "2", "1", "2"}), (std::vector<std::string>{"1", "2", "10"}));
    EXPECT_EQ(dense_group_order({"b", "10", "a"}), (std::vector<std::string>{"10", "a", "b"}));
}

TEST(IngestCsv, ExportRoundTripsFieldForField)
{
    std::vector<Individual> xs{{0.125, 0, 1, DmEntries{0, 0, -0.4431, 28.5473}},
                               {0.1 + 0.2, 1, 0, DmEntries{0, 0, -1, 3}},
                               {1.0 / 3.0, 1, 1, DmEntries{0, 0, -2, 7.25}}};
    const Population pop(xs, {"0", "1"}, "rt");
    const auto path = std::filesystem::temp_directory_path() / "fairfront_pop_roundtrip.csv";
    export_csv(pop, path.string());
    const auto back = ingest_csv(path.string());
    EXPECT_EQ(back, pop);
    std::filesystem::remove(path);
}

TEST(IngestCsv, MissingFileIsADataError) { EXPECT_THROW(ingest_csv("/nonexistent/file.csv"), DataError); }

TEST(Split, ExactSizes)
{
    const auto pop = make_population(50, 50);
    const auto [train, test] = split(pop, 0.7, 1);
    EXPECT_EQ(train.size(), 70u);
    EXPECT_EQ(test.size(), 30u);
}

TEST(Split, DisjointExhaustiveAndStratified)
{
    std::vector<Individual> xs;
    for (int i = 0; i < 997; ++i) {
        // unique scores make individuals identifiable
        xs.push_back({static_cast<double>(i) / 997.0, static_cast<std::size_t>(i % 3 == 0 ? 1 : 0), i % 2, {}});
    }
    const Population pop(xs, {"0", "1"});
    for (double f : {0.1, 0.33, 0.5, 0.7, 0.9}) {
        const auto [train, test] = split(pop, f, 42);
        EXPECT_EQ(train.size() + test.size(), pop.size());
        std::vector<double> seen;
        for (const auto* part : {&train, &test}) {
            for (const auto& ind : part->individuals()) {
                seen.push_back(ind.score);
            }
        }
        std::sort(seen.begin(), seen.end());
        EXPECT_TRUE(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
        EXPECT_EQ(seen.size(), pop.size());
        EXPECT_EQ(train.size(), static_cast<std::size_t>(std::llround(997 * f)));
        for (std::size_t g = 0; g < 2; ++g) {
            const double expected = f * static_cast<double>(pop.group_size(g));
            EXPECT_LE(std::abs(static_cast<double>(train.group_size(g)) - expected), 1.0);
        }
    }
}

TEST(Split, SameSeedSameSplitDifferentSeedDifferentSplit)
{
    const auto pop = make_population(40, 60);
    const auto a = split(pop, 0.5, 9);
    const auto b = split(pop, 0.5, 9);
    const auto c = split(pop, 0.5, 10);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_FALSE(a.first == c.first);
}

TEST(Split, EmptyingAGroupIsRejected)
{
    const auto pop = make_population(1, 50);
    EXPECT_THROW(split(pop, 0.5, 0), SplitError);
    EXPECT_THROW(split(pop, 1.0, 0), ConfigError);
    EXPECT_THROW(split(pop, 0.0, 0), ConfigError);
}
