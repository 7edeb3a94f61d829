#pragma once

#include "fairfront/error.hpp"
#include "fairfront/moo.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/population.hpp"
#include "fairfront/stakeholders.hpp"

#include <concepts>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairfront {

/// Canonical utility-space point: x = U_DM, y = Egalitarian unfairness or the
/// negated worst-group utility.
inline ObjectivePoint utility_point(const UtilityVector& u, Justice justice, std::string policy_id = {})
{
    return {u.u_dm, justice == Justice::egalitarian ? u.u_sp_egal : -u.u_sp_rawls, std::move(policy_id)};
}

/// Places each policy of a predictive front in utility space and keeps the
/// non-dominated images. `evaluate(id)` returns the policy's UtilityVector or
/// nullopt when the id is unknown.
template <typename Evaluate>
Front project_with(const Front& predictive_front, Evaluate&& evaluate, Justice justice)
{
    std::vector<ObjectivePoint> pts;
    pts.reserve(predictive_front.size());
    for (const auto& p : predictive_front.points) {
        const std::optional<UtilityVector> u = evaluate(p.policy_id);
        if (!u) {
            throw LookupError("policy '" + p.policy_id + "' not found");
        }
        pts.push_back(utility_point(*u, justice, p.policy_id));
    }
    Front out = pareto_front(pts);
    out.space = Space::utility;
    out.justice = std::string(to_string(justice));
    out.class_scope = predictive_front.class_scope;
    return out;
}

/// Re-evaluates the policies of a predictive front under the utility
/// objectives with their parameters fixed. `resolve(id)` returns a pointer to
/// the policy or nullptr.
template <typename Resolve>
    requires std::invocable<Resolve&, const std::string&>
Front project(const Front& predictive_front, Resolve&& resolve, const Population& pop, const StakeholderSpec& spec,
              Justice justice)
{
    return project_with(
        predictive_front,
        [&](const std::string& id) -> std::optional<UtilityVector> {
            const PolicyParams* policy = resolve(id);
            if (policy == nullptr) {
                return std::nullopt;
            }
            return eval_utilities(pop, *policy, spec);
        },
        justice);
}

inline Front project(const Front& predictive_front, const std::map<std::string, PolicyParams>& policies,
                     const Population& pop, const StakeholderSpec& spec, Justice justice)
{
    return project(
        predictive_front,
        [&policies](const std::string& id) -> const PolicyParams* {
            const auto it = policies.find(id);
            return it == policies.end() ? nullptr : &it->second;
        },
        pop, spec, justice);
}

} // namespace fairfront
