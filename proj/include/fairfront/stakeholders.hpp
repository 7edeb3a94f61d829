#pragma once

#include "fairfront/error.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/population.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace fairfront {

/// Signed utilities indexed by (decision d, outcome y).
struct UtilityMatrix {
    double u00 = 0, u01 = 0, u10 = 0, u11 = 0;

    bool operator==(const UtilityMatrix&) const = default;

    static UtilityMatrix from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
    std::array<double, 4> to_array() const { return {u00, u01, u10, u11}; }

    UtilityMatrix scaled(double k) const { return {k * u00, k * u01, k * u10, k * u11}; }

    bool finite() const
    {
        return std::isfinite(u00) && std::isfinite(u01) && std::isfinite(u10) && std::isfinite(u11);
    }
};

/// Maps cost-form constants (benefits C00, C11; costs C01, C10 entering with a
/// minus sign) to signed utilities.
inline UtilityMatrix from_cost_form(double c00, double c01, double c10, double c11)
{
    return {c00, -c01, -c10, c11};
}

enum class Justice { egalitarian, rawlsian };
enum class EvalMode { probabilistic, empirical };

inline std::string_view to_string(Justice j) { return j == Justice::egalitarian ? "egal" : "rawls"; }
inline std::string_view to_string(EvalMode m) { return m == EvalMode::probabilistic ? "probabilistic" : "empirical"; }

inline Justice parse_justice(std::string_view text)
{
    if (text == "egal" || text == "egalitarian") {
        return Justice::egalitarian;
    }
    if (text == "rawls" || text == "rawlsian") {
        return Justice::rawlsian;
    }
    throw ConfigError("unknown justice '" + std::string(text) + "'");
}

inline EvalMode parse_eval_mode(std::string_view text)
{
    if (text == "probabilistic") {
        return EvalMode::probabilistic;
    }
    if (text == "empirical") {
        return EvalMode::empirical;
    }
    throw ConfigError("unknown eval_mode '" + std::string(text) + "'");
}

struct StakeholderSpec {
    UtilityMatrix dm;
    // Records carrying their own DM entries use those instead of `dm`.
    bool per_instance_dm = true;
    std::vector<UtilityMatrix> ds; // one per group
    Justice justice = Justice::egalitarian;
    EvalMode eval_mode = EvalMode::probabilistic;

    bool operator==(const StakeholderSpec&) const = default;

    void validate(std::size_t group_count) const
    {
        if (ds.size() != group_count) {
            throw ConfigError("stakeholders.ds has " + std::to_string(ds.size()) + " matrices for " +
                              std::to_string(group_count) + " groups");
        }
        if (!dm.finite()) {
            throw ConfigError("stakeholders.dm must be finite");
        }
        for (const auto& m : ds) {
            if (!m.finite()) {
                throw ConfigError("stakeholders.ds entries must be finite");
            }
        }
    }
};

struct UtilityVector {
    double u_dm = 0;
    std::vector<double> u_ds;
    double u_sp_egal = 0;  // unfairness, minimized
    double u_sp_rawls = 0; // worst-group utility, maximized

    bool operator==(const UtilityVector&) const = default;
};

/// Sum of absolute differences over unordered group pairs.
inline double egalitarian(const std::vector<double>& u)
{
    double total = 0;
    for (std::size_t a = 0; a < u.size(); ++a) {
        for (std::size_t b = a + 1; b < u.size(); ++b) {
            total += std::abs(u[a] - u[b]);
        }
    }
    return total;
}

inline double rawlsian(const std::vector<double>& u)
{
    if (u.empty()) {
        throw MetricError("rawlsian functional needs at least one group");
    }
    return *std::min_element(u.begin(), u.end());
}

/// Expected joint (decision, outcome) mass of one group under one policy,
/// summed (not averaged) over the group's members. Index order (d,y):
/// 00, 01, 10, 11. Every utility and predictive metric is affine in these.
struct GroupTally {
    std::array<double, 4> mass{};       // all members
    std::array<double, 4> plain_mass{}; // members without per-instance DM entries
    double instance_dm = 0;             // summed DM utility of members with entries
    std::size_t count = 0;

    bool operator==(const GroupTally&) const = default;
};

inline double dot(const UtilityMatrix& m, const std::array<double, 4>& mass)
{
    return m.u00 * mass[0] + m.u01 * mass[1] + m.u10 * mass[2] + m.u11 * mass[3];
}

namespace detail {

inline double positive_weight(const Individual& ind, EvalMode mode)
{
    if (mode == EvalMode::probabilistic) {
        return ind.score;
    }
    if (!ind.outcome) {
        throw ModeError("empirical evaluation needs a realized outcome for every individual");
    }
    return static_cast<double>(*ind.outcome);
}

} // namespace detail

/// Tallies one group; `accept(score, group)` yields the acceptance probability.
template <typename Accept>
GroupTally tally_group(const Population& pop, std::size_t group, EvalMode mode, Accept&& accept)
{
    GroupTally t;
    t.count = pop.group_size(group);
    for (std::size_t i : pop.members(group)) {
        const Individual& ind = pop.individuals()[i];
        const double a = accept(ind.score, group);
        const double w1 = detail::positive_weight(ind, mode);
        const double w0 = 1.0 - w1;
        const std::array<double, 4> m{(1.0 - a) * w0, (1.0 - a) * w1, a * w0, a * w1};
        for (std::size_t k = 0; k < 4; ++k) {
            t.mass[k] += m[k];
        }
        if (ind.dm_entries) {
            const auto& e = *ind.dm_entries;
            t.instance_dm += e[0] * m[0] + e[1] * m[1] + e[2] * m[2] + e[3] * m[3];
        } else {
            for (std::size_t k = 0; k < 4; ++k) {
                t.plain_mass[k] += m[k];
            }
        }
    }
    return t;
}

template <typename Accept>
std::vector<GroupTally> tally_population(const Population& pop, EvalMode mode, Accept&& accept)
{
    std::vector<GroupTally> out;
    out.reserve(pop.group_count());
    for (std::size_t g = 0; g < pop.group_count(); ++g) {
        out.push_back(tally_group(pop, g, mode, accept));
    }
    return out;
}

inline UtilityVector utilities_from_tallies(const std::vector<GroupTally>& tallies, const StakeholderSpec& spec)
{
    spec.validate(tallies.size());
    UtilityVector u;
    double dm_total = 0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < tallies.size(); ++g) {
        const auto& t = tallies[g];
        dm_total += spec.per_instance_dm ? t.instance_dm + dot(spec.dm, t.plain_mass) : dot(spec.dm, t.mass);
        n += t.count;
        u.u_ds.push_back(dot(spec.ds[g], t.mass) / static_cast<double>(t.count));
    }
    u.u_dm = dm_total / static_cast<double>(n);
    u.u_sp_egal = egalitarian(u.u_ds);
    u.u_sp_rawls = rawlsian(u.u_ds);
    return u;
}

inline UtilityVector eval_utilities(const Population& pop, const PolicyParams& policy, const StakeholderSpec& spec)
{
    spec.validate(pop.group_count());
    if (policy.scope == Scope::group_specific && policy.gamma.size() != pop.group_count()) {
        throw ScopeError("group-specific policy has " + std::to_string(policy.gamma.size()) +
                         " groups, population has " + std::to_string(pop.group_count()));
    }
    return utilities_from_tallies(
        tally_population(pop, spec.eval_mode,
                         [&policy](double s, std::size_t g) { return acceptance_prob(policy, s, g); }),
        spec);
}

inline UtilityVector eval_utilities(const Population& pop, const MixturePolicy& m, const StakeholderSpec& spec)
{
    spec.validate(pop.group_count());
    return utilities_from_tallies(
        tally_population(pop, spec.eval_mode, [&m](double s, std::size_t g) { return mix(m, s, g); }), spec);
}

} // namespace fairfront
