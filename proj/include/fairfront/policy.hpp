#pragma once

#include "fairfront/error.hpp"
#include "fairfront/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fairfront {

enum class PolicyClass { deterministic, stochastic };
enum class Scope { shared, group_specific };

inline std::string_view to_string(PolicyClass c) { return c == PolicyClass::deterministic ? "det" : "stoch"; }
inline std::string_view to_string(Scope s) { return s == Scope::shared ? "shared" : "group"; }

inline PolicyClass parse_policy_class(std::string_view text)
{
    if (text == "det" || text == "deterministic") {
        return PolicyClass::deterministic;
    }
    if (text == "stoch" || text == "stochastic") {
        return PolicyClass::stochastic;
    }
    throw ConfigError("unknown policy class '" + std::string(text) + "'");
}

inline Scope parse_scope(std::string_view text)
{
    if (text == "shared") {
        return Scope::shared;
    }
    if (text == "group" || text == "group_specific") {
        return Scope::group_specific;
    }
    throw ConfigError("unknown policy scope '" + std::string(text) + "'");
}

// Sharpness standing in for beta = infinity.
inline constexpr double deterministic_beta = 1e6;

/// Decision rule applied to one group: a threshold, plus a sharpness for the
/// sigmoid rule.
struct GroupRule {
    PolicyClass cls = PolicyClass::deterministic;
    double gamma = 0.5;
    double beta = 0.0; // unused for deterministic rules

    double accept(double score) const noexcept
    {
        if (cls == PolicyClass::deterministic) {
            return score >= gamma ? 1.0 : 0.0; // ties accept
        }
        return sigmoid(beta * (score - gamma));
    }

    auto operator<=>(const GroupRule&) const = default;
};

struct PolicyParams {
    PolicyClass cls = PolicyClass::deterministic;
    Scope scope = Scope::shared;
    std::vector<double> gamma; // one entry (shared) or one per group
    std::vector<double> beta;  // empty for deterministic policies
    std::string id;

    bool operator==(const PolicyParams&) const = default;

    GroupRule rule_for(std::size_t group) const
    {
        std::size_t slot = 0;
        if (scope == Scope::group_specific) {
            if (group >= gamma.size()) {
                throw ScopeError("group " + std::to_string(group) + " out of range for a policy with " +
                                 std::to_string(gamma.size()) + " groups");
            }
            slot = group;
        }
        GroupRule r;
        r.cls = cls;
        r.gamma = gamma[slot];
        r.beta = cls == PolicyClass::stochastic ? beta[slot] : 0.0;
        return r;
    }
};

inline std::string canonical_text(const PolicyParams& p)
{
    std::string out = "class=";
    out += to_string(p.cls);
    out += ";scope=";
    out += to_string(p.scope);
    const auto list = [&out](const char* name, const std::vector<double>& xs) {
        out += ';';
        out += name;
        out += '=';
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i != 0) {
                out += ',';
            }
            out += format_double(xs[i]);
        }
    };
    list("gamma", p.gamma);
    list("beta", p.beta);
    return out;
}

inline std::string policy_id(const PolicyParams& p) { return hex64(fnv1a64(canonical_text(p))); }

/// Validates the record and stamps its id.
inline PolicyParams make_policy(PolicyClass cls, Scope scope, std::vector<double> gamma,
                                std::vector<double> beta = {})
{
    if (gamma.empty()) {
        throw ConfigError("policy needs at least one threshold");
    }
    if (scope == Scope::shared && gamma.size() != 1) {
        throw ConfigError("shared policy carries exactly one threshold");
    }
    for (double g : gamma) {
        if (!(g >= 0.0 && g <= 1.0)) {
            throw ConfigError("threshold outside [0,1]: " + format_double(g));
        }
    }
    if (cls == PolicyClass::deterministic && !beta.empty()) {
        throw ConfigError("deterministic policy has no sharpness");
    }
    if (cls == PolicyClass::stochastic) {
        if (beta.size() != gamma.size()) {
            throw ConfigError("stochastic policy needs one sharpness per threshold");
        }
        for (double b : beta) {
            if (!(b > 0.0) || !std::isfinite(b)) {
                throw ConfigError("sharpness must be finite and > 0");
            }
        }
    }
    PolicyParams p{cls, scope, std::move(gamma), std::move(beta), {}};
    p.id = policy_id(p);
    return p;
}

inline double acceptance_prob(const PolicyParams& p, double score, std::size_t group)
{
    return p.rule_for(group).accept(score);
}

struct MixturePolicy {
    PolicyParams left;
    PolicyParams right;
    double lambda = 0.5;
};

/// Policy-level randomization: follow `left` with probability lambda.
inline double mix(const MixturePolicy& m, double score, std::size_t group)
{
    if (!(m.lambda >= 0.0 && m.lambda <= 1.0)) {
        throw ConfigError("mixture weight must lie in [0,1]");
    }
    return m.lambda * acceptance_prob(m.left, score, group) +
           (1.0 - m.lambda) * acceptance_prob(m.right, score, group);
}

struct GridSpec {
    std::size_t threshold_count = 100;
    double threshold_lo = 0.01;
    double threshold_hi = 0.99;
    std::vector<double> betas{1e6, 500, 100, 50, 30, 10, 5, 2, 1, 0.5};

    bool operator==(const GridSpec&) const = default;

    void validate() const
    {
        if (threshold_count < 1) {
            throw ConfigError("grid.threshold_count must be >= 1");
        }
        if (!(threshold_lo > 0.0 && threshold_hi < 1.0 && threshold_lo <= threshold_hi)) {
            throw ConfigError("grid.threshold_range must lie inside (0,1)");
        }
        if (betas.empty()) {
            throw ConfigError("grid.betas must be non-empty");
        }
        for (double b : betas) {
            if (!(b > 0.0) || !std::isfinite(b)) {
                throw ConfigError("grid.betas must be finite and > 0");
            }
        }
    }

    std::vector<double> thresholds() const { return linspace(threshold_lo, threshold_hi, threshold_count); }
};

/// How group-specific stochastic parameters are combined across groups.
/// same_beta: every group shares the sharpness and sweeps its own threshold.
/// full_cross: every group sweeps (threshold, sharpness) independently.
enum class GroupPairing { same_beta, full_cross };

/// Every per-group rule a grid can use, deterministic rules first.
inline std::vector<GroupRule> grid_rules(const GridSpec& spec, const std::vector<PolicyClass>& classes)
{
    std::vector<GroupRule> out;
    const auto taus = spec.thresholds();
    if (std::find(classes.begin(), classes.end(), PolicyClass::deterministic) != classes.end()) {
        for (double t : taus) {
            out.push_back({PolicyClass::deterministic, t, 0.0});
        }
    }
    if (std::find(classes.begin(), classes.end(), PolicyClass::stochastic) != classes.end()) {
        for (double b : spec.betas) {
            for (double t : taus) {
                out.push_back({PolicyClass::stochastic, t, b});
            }
        }
    }
    return out;
}

namespace detail {

inline std::size_t checked_pow(std::size_t base, std::size_t exp)
{
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && out > static_cast<std::size_t>(-1) / base) {
            return static_cast<std::size_t>(-1);
        }
        out *= base;
    }
    return out;
}

// Odometer over `groups` digits of radix `radix`; digit 0 is most significant.
inline std::vector<std::size_t> digits(std::size_t index, std::size_t radix, std::size_t groups)
{
    std::vector<std::size_t> d(groups);
    for (std::size_t g = groups; g-- > 0;) {
        d[g] = index % radix;
        index /= radix;
    }
    return d;
}

inline bool contains(const std::vector<PolicyClass>& xs, PolicyClass c)
{
    return std::find(xs.begin(), xs.end(), c) != xs.end();
}

inline bool contains(const std::vector<Scope>& xs, Scope s) { return std::find(xs.begin(), xs.end(), s) != xs.end(); }

} // namespace detail

/// Number of policies build_grid would return (saturates on overflow).
inline std::size_t grid_size(const GridSpec& spec, const std::vector<PolicyClass>& classes,
                             const std::vector<Scope>& scopes, std::size_t group_count,
                             GroupPairing pairing = GroupPairing::same_beta)
{
    const std::size_t t = spec.threshold_count;
    const std::size_t b = spec.betas.size();
    std::size_t total = 0;
    const auto add = [&total](std::size_t v) {
        total = (v > static_cast<std::size_t>(-1) - total) ? static_cast<std::size_t>(-1) : total + v;
    };
    for (PolicyClass c : {PolicyClass::deterministic, PolicyClass::stochastic}) {
        if (!detail::contains(classes, c)) {
            continue;
        }
        const bool det = c == PolicyClass::deterministic;
        if (detail::contains(scopes, Scope::shared)) {
            add(det ? t : t * b);
        }
        if (detail::contains(scopes, Scope::group_specific)) {
            if (det) {
                add(detail::checked_pow(t, group_count));
            } else if (pairing == GroupPairing::same_beta) {
                const auto per_beta = detail::checked_pow(t, group_count);
                add(per_beta > static_cast<std::size_t>(-1) / b ? static_cast<std::size_t>(-1) : per_beta * b);
            } else {
                add(detail::checked_pow(t * b, group_count));
            }
        }
    }
    return total;
}

/// Full sweep grid. Order: deterministic before stochastic, shared before
/// group-specific, sharpness outermost, group 0 the slowest-varying threshold.
inline std::vector<PolicyParams> build_grid(const GridSpec& spec, const std::vector<PolicyClass>& classes,
                                            const std::vector<Scope>& scopes, std::size_t group_count,
                                            GroupPairing pairing = GroupPairing::same_beta)
{
    spec.validate();
    if (classes.empty() || scopes.empty()) {
        throw ConfigError("grid needs at least one class and one scope");
    }
    if (group_count < 1) {
        throw ConfigError("group_count must be >= 1");
    }
    const auto taus = spec.thresholds();
    std::vector<PolicyParams> out;
    out.reserve(grid_size(spec, classes, scopes, group_count, pairing));

    for (PolicyClass c : {PolicyClass::deterministic, PolicyClass::stochastic}) {
        if (!detail::contains(classes, c)) {
            continue;
        }
        const bool det = c == PolicyClass::deterministic;
        if (detail::contains(scopes, Scope::shared)) {
            if (det) {
                for (double t : taus) {
                    out.push_back(make_policy(c, Scope::shared, {t}));
                }
            } else {
                for (double b : spec.betas) {
                    for (double t : taus) {
                        out.push_back(make_policy(c, Scope::shared, {t}, {b}));
                    }
                }
            }
        }
        if (!detail::contains(scopes, Scope::group_specific)) {
            continue;
        }
        const std::size_t per_threshold = detail::checked_pow(taus.size(), group_count);
        if (det) {
            for (std::size_t k = 0; k < per_threshold; ++k) {
                std::vector<double> gamma;
                for (std::size_t d : detail::digits(k, taus.size(), group_count)) {
                    gamma.push_back(taus[d]);
                }
                out.push_back(make_policy(c, Scope::group_specific, std::move(gamma)));
            }
        } else if (pairing == GroupPairing::same_beta) {
            for (double b : spec.betas) {
                for (std::size_t k = 0; k < per_threshold; ++k) {
                    std::vector<double> gamma;
                    for (std::size_t d : detail::digits(k, taus.size(), group_count)) {
                        gamma.push_back(taus[d]);
                    }
                    out.push_back(make_policy(c, Scope::group_specific, std::move(gamma),
                                              std::vector<double>(group_count, b)));
                }
            }
        } else {
            const std::size_t radix = taus.size() * spec.betas.size();
            const std::size_t total = detail::checked_pow(radix, group_count);
            for (std::size_t k = 0; k < total; ++k) {
                std::vector<double> gamma;
                std::vector<double> beta;
                for (std::size_t d : detail::digits(k, radix, group_count)) {
                    beta.push_back(spec.betas[d / taus.size()]);
                    gamma.push_back(taus[d % taus.size()]);
                }
                out.push_back(make_policy(c, Scope::group_specific, std::move(gamma), std::move(beta)));
            }
        }
    }
    return out;
}

} // namespace fairfront
