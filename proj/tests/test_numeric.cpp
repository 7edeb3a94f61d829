#include "fairfront/numeric.hpp"

#include <gtest/gtest.h>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>
#include <limits>

using namespace fairfront;

TEST(Sigmoid, MatchesClosedFormAndSaturatesWithoutOverflow)
{
    for (double z : {-30.0, -2.0, -0.5, 0.0, 0.5, 2.0, 30.0}) {
        EXPECT_NEAR(sigmoid(z), 1.0 / (1.0 + std::exp(-z)), 1e-15);
    }
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_EQ(sigmoid(1e6), 1.0);
    EXPECT_EQ(sigmoid(-1e6), 0.0);
    EXPECT_FALSE(std::isnan(sigmoid(-1e308)));
}

TEST(Linspace, IncludesEndpointsAndIsEvenlySpaced)
{
    const auto xs = linspace(0.01, 0.99, 100);
    ASSERT_EQ(xs.size(), 100u);
    EXPECT_EQ(xs.front(), 0.01);
    EXPECT_EQ(xs.back(), 0.99);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        EXPECT_NEAR(xs[i] - xs[i - 1], 0.98 / 99.0, 1e-15);
    }
    EXPECT_EQ(linspace(0.3, 0.7, 1), std::vector<double>{0.3});
    EXPECT_TRUE(linspace(0.0, 1.0, 0).empty());
}

TEST(Fnv1a, KnownVectors)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(FormatDouble, RoundTripsEveryBit)
{
    boost::random::mt19937_64 rng(3);
    boost::random::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, (i % 40) - 20);
        EXPECT_EQ(parse_double(format_double(v)), v);
    }
    const double tiny = std::numeric_limits<double>::denorm_min() * 7;
    EXPECT_EQ(parse_double(format_double(tiny)), tiny);
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
}

TEST(ParseDouble, RejectsPartialInput)
{
    EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
    EXPECT_THROW(parse_double(""), std::invalid_argument);
    EXPECT_THROW(parse_double(" 1"), std::invalid_argument);
    EXPECT_EQ(parse_double("-2.25"), -2.25);
}
