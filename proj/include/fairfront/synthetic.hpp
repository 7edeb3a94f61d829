#pragma once

#include "fairfront/error.hpp"
#include "fairfront/numeric.hpp"
#include "fairfront/population.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fairfront {

struct DgmConfig {
    std::size_t n = 10000;
    std::uint64_t seed = 0;
    double bias = 0.5;       // P(G = 1)
    double beta_l = 0.0;     // savings -> loan coefficient, 0 or 0.03 (credit only)
    double delta = 0.01;     // loan/duration coefficient in the repayment logit (credit only)
    double rate = 0.03;      // interest rate (credit only, informational)
    // Credit only: score = noise-marginalized repayment probability. When false
    // the noiseless sigmoid of the logit is used instead.
    bool marginalize_noise = true;

    bool operator==(const DgmConfig&) const = default;

    void validate() const
    {
        if (n < 1) {
            throw ConfigError("n must be >= 1");
        }
        if (!(bias > 0.0 && bias < 1.0)) {
            throw ConfigError("bias must lie in (0,1)");
        }
        if (!std::isfinite(beta_l) || !std::isfinite(delta) || !std::isfinite(rate)) {
            throw ConfigError("dgm coefficients must be finite");
        }
    }
};

/// Every structural variable of one synthetic credit applicant.
struct CreditRecord {
    int gender = 0;
    double age = 0, education = 0, income = 0, savings = 0, loan = 0, duration = 0;
    double interaction = 0; // +1 iff income > 0 and savings > 0, else -1
    double logit = 0;       // noiseless repayment logit
    double probability = 0;
    int repaid = 0;
};

struct HiringRecord {
    int gender = 0;
    double age = 0, education = 0;
    double previous_companies = 0;
    double experience_years = 0;
    double interview = 0;
    double probability = 0;
    int hired_well = 0;
};

namespace detail {

// N(0, s) with s the standard deviation.
inline double draw_normal(boost::random::mt19937_64& rng, double sd)
{
    boost::random::normal_distribution<double> dist(0.0, sd);
    return dist(rng);
}

inline double draw_age_noise(boost::random::mt19937_64& rng)
{
    // shape 10, scale 3.5: mean 35, so the centered age -35 + U_A has mean 0
    boost::random::gamma_distribution<double> dist(10.0, 3.5);
    return dist(rng);
}

inline int draw_bernoulli(boost::random::mt19937_64& rng, double p)
{
    boost::random::bernoulli_distribution<double> dist(p);
    return dist(rng) ? 1 : 0;
}

} // namespace detail

// Standard deviation of the noise term in the credit repayment equation.
inline constexpr double credit_outcome_noise_sd = 2.0;

inline std::vector<CreditRecord> generate_credit_records(const DgmConfig& cfg)
{
    cfg.validate();
    boost::random::mt19937_64 rng(cfg.seed);
    const double pi = boost::math::constants::pi<double>();
    const double probit_scale = std::sqrt(1.0 + pi * credit_outcome_noise_sd * credit_outcome_noise_sd / 8.0);

    std::vector<CreditRecord> out;
    out.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        CreditRecord r;
        r.gender = detail::draw_bernoulli(rng, cfg.bias);
        const double g = r.gender;
        r.age = -35.0 + detail::draw_age_noise(rng);
        r.education = -0.5 + sigmoid(-1.0 + 0.5 * g + sigmoid(0.1 * r.age) + detail::draw_normal(rng, 0.25));
        r.income = -4.0 + 0.1 * (r.age + 35.0) + 2.0 * g + g * r.education + detail::draw_normal(rng, 4.0);
        r.savings = -4.0 + 1.5 * (r.income > 0.0 ? r.income : 0.0) + detail::draw_normal(rng, 5.0);
        r.loan = 1.0 + 0.01 * (r.age - 5.0) * (5.0 - r.age) + 2.0 * (1.0 - g) + cfg.beta_l * r.savings +
                 detail::draw_normal(rng, 10.0);
        r.duration = -1.0 + 0.1 * r.age + 3.0 * (1.0 - g) + r.loan + detail::draw_normal(rng, 9.0);
        r.interaction = (r.income > 0.0 && r.savings > 0.0) ? 1.0 : -1.0;
        r.logit = cfg.delta * (-r.loan - r.duration) +
                  0.3 * (r.income + r.savings + r.interaction * r.income * r.savings);
        r.probability = cfg.marginalize_noise ? sigmoid(r.logit / probit_scale) : sigmoid(r.logit);
        r.repaid = detail::draw_bernoulli(rng, r.probability);
        out.push_back(r);
    }
    return out;
}

inline std::vector<HiringRecord> generate_hiring_records(const DgmConfig& cfg)
{
    cfg.validate();
    boost::random::mt19937_64 rng(cfg.seed);
    std::vector<HiringRecord> out;
    out.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        HiringRecord r;
        r.age = -35.0 + detail::draw_age_noise(rng);
        r.gender = detail::draw_bernoulli(rng, cfg.bias);
        const double g = r.gender;
        r.education = -0.5 + sigmoid(-1.0 + 0.5 * g + sigmoid(0.1 * r.age) + detail::draw_normal(rng, 0.25));
        boost::random::poisson_distribution<int, double> companies(2.0);
        r.previous_companies =
            std::floor(3.5 + 0.2 * r.age - 0.25 * (1.0 - g) + r.education + companies(rng));
        const double raw_experience =
            0.7 * r.age + 15.0 - 5.0 * r.education - 2.0 * (1.0 - g) + detail::draw_normal(rng, 3.0);
        // clamp order as in the structural equation: floor at 0, then cap at A + 15
        r.experience_years = std::min(std::max(0.0, raw_experience), r.age + 15.0);
        r.interview = 10.0 * sigmoid(-2.5 - 0.3 * (1.0 - g) + 2.0 * r.education +
                                     0.2 * r.experience_years + detail::draw_normal(rng, 1.0));
        r.probability = sigmoid(-4.0 + 0.5 * r.interview - sigmoid(0.1 * r.previous_companies) +
                                0.1 * r.experience_years + 0.5 * r.education);
        r.hired_well = detail::draw_bernoulli(rng, r.probability);
        out.push_back(r);
    }
    return out;
}

namespace detail {

template <typename Record, typename ScoreOf, typename OutcomeOf>
Population population_from(const std::vector<Record>& records, const DgmConfig& cfg, std::string label,
                           ScoreOf score_of, OutcomeOf outcome_of)
{
    std::vector<Individual> individuals;
    individuals.reserve(records.size());
    for (const auto& r : records) {
        Individual ind;
        ind.score = score_of(r);
        ind.group = static_cast<std::size_t>(r.gender);
        ind.outcome = outcome_of(r);
        individuals.push_back(ind);
    }
    // both groups must be present; tiny n with an extreme bias can miss one
    return Population(std::move(individuals), {"0", "1"}, std::move(label), cfg.seed);
}

} // namespace detail

inline Population gen_synthetic_credit(const DgmConfig& cfg)
{
    const auto records = generate_credit_records(cfg);
    return detail::population_from(
        records, cfg, "synthetic_credit", [](const CreditRecord& r) { return r.probability; },
        [](const CreditRecord& r) { return r.repaid; });
}

inline Population gen_synthetic_hiring(const DgmConfig& cfg)
{
    const auto records = generate_hiring_records(cfg);
    return detail::population_from(
        records, cfg, "synthetic_hiring", [](const HiringRecord& r) { return r.probability; },
        [](const HiringRecord& r) { return r.hired_well; });
}

} // namespace fairfront
