#pragma once

#include "fairfront/error.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/population.hpp"
#include "fairfront/stakeholders.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace fairfront {

/// Expected fraction of correct decisions.
inline double accuracy_from_tallies(const std::vector<GroupTally>& tallies)
{
    double correct = 0;
    std::size_t n = 0;
    for (const auto& t : tallies) {
        correct += t.mass[0] + t.mass[3];
        n += t.count;
    }
    return correct / static_cast<double>(n);
}

/// Largest pairwise gap in expected true positive rates. Throws MetricError
/// when some group has no positive mass.
inline double eo_from_tallies(const std::vector<GroupTally>& tallies)
{
    std::vector<double> tpr;
    tpr.reserve(tallies.size());
    for (std::size_t g = 0; g < tallies.size(); ++g) {
        const double positives = tallies[g].mass[1] + tallies[g].mass[3];
        if (!(positives > 0.0)) {
            throw MetricError("group " + std::to_string(g) + " has no positives; equality of opportunity undefined");
        }
        tpr.push_back(tallies[g].mass[3] / positives);
    }
    const auto [lo, hi] = std::minmax_element(tpr.begin(), tpr.end());
    return *hi - *lo;
}

inline double accuracy(const Population& pop, const PolicyParams& policy, EvalMode mode = EvalMode::probabilistic)
{
    return accuracy_from_tallies(tally_population(
        pop, mode, [&policy](double s, std::size_t g) { return acceptance_prob(policy, s, g); }));
}

inline double eo_disparity(const Population& pop, const PolicyParams& policy, EvalMode mode = EvalMode::probabilistic)
{
    return eo_from_tallies(tally_population(
        pop, mode, [&policy](double s, std::size_t g) { return acceptance_prob(policy, s, g); }));
}

} // namespace fairfront
