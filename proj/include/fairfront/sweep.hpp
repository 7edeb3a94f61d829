#pragma once

#include "fairfront/config.hpp"
#include "fairfront/error.hpp"
#include "fairfront/numeric.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/population.hpp"
#include "fairfront/predictive.hpp"
#include "fairfront/stakeholders.hpp"
#include "fairfront/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fairfront {

enum class SplitTag { train, test };

inline std::string_view to_string(SplitTag s) { return s == SplitTag::train ? "train" : "test"; }

inline SplitTag parse_split_tag(std::string_view text)
{
    if (text == "train") {
        return SplitTag::train;
    }
    if (text == "test") {
        return SplitTag::test;
    }
    throw ConfigError("unknown split '" + std::string(text) + "'");
}

/// One evaluated policy on one split. `eo` is NaN when some group has no
/// positive mass.
struct SweepRow {
    PolicyParams policy;
    SplitTag split = SplitTag::train;
    std::vector<GroupTally> tallies;
    UtilityVector utility;
    double accuracy = 0;
    double eo = 0;

    bool operator==(const SweepRow& o) const
    {
        const bool eo_equal = (std::isnan(eo) && std::isnan(o.eo)) || eo == o.eo;
        return policy == o.policy && split == o.split && tallies == o.tallies && utility == o.utility &&
               accuracy == o.accuracy && eo_equal;
    }
};

class SweepResult {
public:
    std::string config_hash;
    std::vector<std::string> group_labels;
    StakeholderSpec stakeholders;
    std::vector<SweepRow> rows;

    bool operator==(const SweepResult& o) const
    {
        return config_hash == o.config_hash && group_labels == o.group_labels && stakeholders == o.stakeholders &&
               rows == o.rows;
    }

    /// Rebuilds the (policy id, split) index; throws on duplicate keys.
    void reindex()
    {
        for (auto& m : index_) {
            m.clear();
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto& m = index_[static_cast<std::size_t>(rows[i].split)];
            if (!m.emplace(rows[i].policy.id, i).second) {
                throw DataError("duplicate sweep row for policy " + rows[i].policy.id + " on " +
                                std::string(to_string(rows[i].split)));
            }
        }
    }

    const SweepRow* find(const std::string& id, SplitTag split) const
    {
        const auto& m = index_[static_cast<std::size_t>(split)];
        const auto it = m.find(id);
        return it == m.end() ? nullptr : &rows[it->second];
    }

    bool has_split(SplitTag split) const { return !index_[static_cast<std::size_t>(split)].empty(); }

private:
    std::unordered_map<std::string, std::size_t> index_[2];
};

/// Runs f(i) for i in [0, n) on `workers` threads. Each index is handled by
/// exactly one call, so results written by index do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& f)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }
    constexpr std::size_t chunk = 64;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= n) {
                    return;
                }
                try {
                    for (std::size_t i = begin; i < std::min(n, begin + chunk); ++i) {
                        f(i);
                    }
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

inline Population load_population(const ExperimentConfig& cfg)
{
    switch (cfg.dataset) {
    case DatasetKind::synthetic_credit:
        return gen_synthetic_credit(cfg.dgm);
    case DatasetKind::synthetic_hiring:
        return gen_synthetic_hiring(cfg.dgm);
    case DatasetKind::csv:
        return ingest_csv(cfg.csv_path);
    }
    throw ConfigError("unknown dataset");
}

/// Recomputes every row's utilities under `spec` from the stored tallies.
inline void apply_stakeholders(SweepResult& result, const StakeholderSpec& spec)
{
    spec.validate(result.group_labels.size());
    result.stakeholders = spec;
    for (auto& row : result.rows) {
        row.utility = utilities_from_tallies(row.tallies, spec);
    }
}

/// The stored sweep re-evaluated under a different stakeholder spec; the
/// policy grid and tallies are reused as they are.
inline SweepResult whatif(const SweepResult& base, const StakeholderSpec& spec)
{
    SweepResult out = base;
    apply_stakeholders(out, spec);
    out.reindex();
    return out;
}

namespace detail {

inline void evaluate_split(const Population& pop, SplitTag tag, const std::vector<PolicyParams>& policies,
                           const std::vector<GroupRule>& rules, const std::map<GroupRule, std::size_t>& rule_index,
                           const StakeholderSpec& spec, std::size_t workers, std::vector<SweepRow>& out)
{
    const std::size_t groups = pop.group_count();
    // tallies[g * rules + r]: group g under rule r
    std::vector<GroupTally> tallies(groups * rules.size());
    parallel_for(tallies.size(), workers, [&](std::size_t k) {
        const std::size_t g = k / rules.size();
        const GroupRule& rule = rules[k % rules.size()];
        tallies[k] = tally_group(pop, g, spec.eval_mode, [&rule](double s, std::size_t) { return rule.accept(s); });
    });

    const std::size_t base = out.size();
    out.resize(base + policies.size());
    parallel_for(policies.size(), workers, [&](std::size_t i) {
        SweepRow& row = out[base + i];
        row.policy = policies[i];
        row.split = tag;
        row.tallies.resize(groups);
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t r = rule_index.at(policies[i].rule_for(g));
            row.tallies[g] = tallies[g * rules.size() + r];
        }
        row.utility = utilities_from_tallies(row.tallies, spec);
        row.accuracy = accuracy_from_tallies(row.tallies);
        try {
            row.eo = eo_from_tallies(row.tallies);
        } catch (const MetricError&) {
            row.eo = std::numeric_limits<double>::quiet_NaN();
        }
    });
}

} // namespace detail

/// Evaluates every grid policy on the train split, and on the test split when
/// one is configured. Without a split the whole population is the train split.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const Population& pop, std::size_t workers = 1)
{
    if (cfg.classes.empty() || cfg.scopes.empty() || cfg.justices.empty() || cfg.spaces.empty()) {
        throw ConfigError("classes, scopes, spaces and justices must be non-empty");
    }
    cfg.stakeholders.validate(pop.group_count());
    if (cfg.stakeholders.eval_mode == EvalMode::empirical && !pop.has_all_outcomes()) {
        throw ModeError("empirical evaluation needs a realized outcome for every individual");
    }
    const auto policies = build_grid(cfg.grid, cfg.classes, cfg.scopes, pop.group_count(), cfg.pairing);
    const auto rules = grid_rules(cfg.grid, cfg.classes);
    std::map<GroupRule, std::size_t> rule_index;
    for (std::size_t r = 0; r < rules.size(); ++r) {
        rule_index.emplace(rules[r], r);
    }

    SweepResult result;
    result.config_hash = config_hash(cfg);
    result.group_labels = pop.group_labels();
    result.stakeholders = cfg.stakeholders;
    if (cfg.split) {
        const auto [train, test] = split(pop, cfg.split->train_fraction, cfg.split->seed);
        result.rows.reserve(2 * policies.size());
        detail::evaluate_split(train, SplitTag::train, policies, rules, rule_index, cfg.stakeholders, workers,
                               result.rows);
        detail::evaluate_split(test, SplitTag::test, policies, rules, rule_index, cfg.stakeholders, workers,
                               result.rows);
    } else {
        detail::evaluate_split(pop, SplitTag::train, policies, rules, rule_index, cfg.stakeholders, workers,
                               result.rows);
    }
    result.reindex();
    return result;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg, std::size_t workers = 1)
{
    return run_sweep(cfg, load_population(cfg), workers);
}

inline constexpr int rows_schema_version = 1;

inline std::string rows_file_name(const std::string& hash) { return "sweep." + hash + ".rows"; }

namespace detail {

inline void append_list(std::string& out, const double* xs, std::size_t n)
{
    if (n == 0) {
        out += '-';
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i != 0) {
            out += ',';
        }
        out += format_double(xs[i]);
    }
}

inline std::vector<double> parse_list(const std::string& field)
{
    std::vector<double> out;
    if (field == "-") {
        return out;
    }
    std::size_t start = 0;
    for (;;) {
        const auto comma = field.find(',', start);
        out.push_back(parse_double(field.substr(start, comma - start)));
        if (comma == std::string::npos) {
            return out;
        }
        start = comma + 1;
    }
}

inline std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) {
            return out;
        }
        start = tab + 1;
    }
}

} // namespace detail

/// Tab-separated rows with a commented header; doubles at 17 significant
/// digits so a reload reproduces every bit.
inline void write_rows(std::ostream& out, const SweepResult& r)
{
    const std::size_t groups = r.group_labels.size();
    out << "# fairfront sweep rows\n";
    out << "# schema_version\t" << rows_schema_version << "\n";
    out << "# config_hash\t" << r.config_hash << "\n";
    out << "# groups";
    for (const auto& g : r.group_labels) {
        out << '\t' << g;
    }
    out << "\n# stakeholders\t" << to_json(r.stakeholders).dump() << "\n";
    out << "id\tsplit\tclass\tscope\tgamma\tbeta\tu_dm\tu_ds\tu_sp_egal\tu_sp_rawls\taccuracy\teo";
    for (std::size_t g = 0; g < groups; ++g) {
        out << "\ttally_" << g;
    }
    out << '\n';
    std::string line;
    for (const auto& row : r.rows) {
        line.clear();
        line += row.policy.id;
        line += '\t';
        line += to_string(row.split);
        line += '\t';
        line += to_string(row.policy.cls);
        line += '\t';
        line += to_string(row.policy.scope);
        line += '\t';
        detail::append_list(line, row.policy.gamma.data(), row.policy.gamma.size());
        line += '\t';
        detail::append_list(line, row.policy.beta.data(), row.policy.beta.size());
        line += '\t';
        line += format_double(row.utility.u_dm);
        line += '\t';
        detail::append_list(line, row.utility.u_ds.data(), row.utility.u_ds.size());
        for (double v : {row.utility.u_sp_egal, row.utility.u_sp_rawls, row.accuracy, row.eo}) {
            line += '\t';
            line += format_double(v);
        }
        for (const auto& t : row.tallies) {
            line += '\t';
            line += std::to_string(t.count);
            line += ';';
            detail::append_list(line, t.mass.data(), 4);
            line += ';';
            detail::append_list(line, t.plain_mass.data(), 4);
            line += ';';
            line += format_double(t.instance_dm);
        }
        line += '\n';
        out << line;
    }
}

inline SweepResult read_rows(std::istream& in)
{
    SweepResult r;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    bool stakeholders_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = detail::split_tabs(line);
        if (line[0] == '#') {
            if (f[0] == "# schema_version") {
                if (f.size() != 2 || f[1] != std::to_string(rows_schema_version)) {
                    throw SchemaError("unsupported sweep rows schema version");
                }
            } else if (f[0] == "# config_hash" && f.size() == 2) {
                r.config_hash = f[1];
            } else if (f[0] == "# groups") {
                r.group_labels.assign(f.begin() + 1, f.end());
            } else if (f[0] == "# stakeholders" && f.size() == 2) {
                try {
                    r.stakeholders = stakeholders_from_json(nlohmann::json::parse(f[1]), StakeholderSpec{});
                } catch (const std::exception& e) {
                    throw SchemaError(std::string("bad stakeholders header: ") + e.what());
                }
                stakeholders_seen = true;
            }
            continue;
        }
        if (!header_seen) {
            if (f.size() < 12 || f[0] != "id") {
                throw SchemaError("sweep rows: missing column header");
            }
            header_seen = true;
            continue;
        }
        const std::size_t groups = r.group_labels.size();
        if (f.size() != 12 + groups) {
            throw RowError(lineno, "expected " + std::to_string(12 + groups) + " fields");
        }
        try {
            SweepRow row;
            row.split = parse_split_tag(f[1]);
            row.policy = make_policy(parse_policy_class(f[2]), parse_scope(f[3]), detail::parse_list(f[4]),
                                     detail::parse_list(f[5]));
            if (row.policy.id != f[0]) {
                throw RowError(lineno, "policy id does not match its parameters");
            }
            row.utility.u_dm = parse_double(f[6]);
            row.utility.u_ds = detail::parse_list(f[7]);
            row.utility.u_sp_egal = parse_double(f[8]);
            row.utility.u_sp_rawls = parse_double(f[9]);
            row.accuracy = parse_double(f[10]);
            row.eo = parse_double(f[11]);
            for (std::size_t g = 0; g < groups; ++g) {
                const auto& cell = f[12 + g];
                const auto a = cell.find(';');
                const auto b = cell.find(';', a + 1);
                const auto c = cell.find(';', b + 1);
                if (a == std::string::npos || b == std::string::npos || c == std::string::npos) {
                    throw RowError(lineno, "malformed tally");
                }
                GroupTally t;
                t.count = static_cast<std::size_t>(std::stoull(cell.substr(0, a)));
                const auto mass = detail::parse_list(cell.substr(a + 1, b - a - 1));
                const auto plain = detail::parse_list(cell.substr(b + 1, c - b - 1));
                if (mass.size() != 4 || plain.size() != 4) {
                    throw RowError(lineno, "malformed tally");
                }
                std::copy(mass.begin(), mass.end(), t.mass.begin());
                std::copy(plain.begin(), plain.end(), t.plain_mass.begin());
                t.instance_dm = parse_double(cell.substr(c + 1));
                row.tallies.push_back(t);
            }
            r.rows.push_back(std::move(row));
        } catch (const RowError&) {
            throw;
        } catch (const std::exception& e) {
            throw RowError(lineno, e.what());
        }
    }
    if (!header_seen || !stakeholders_seen || r.group_labels.empty()) {
        throw SchemaError("sweep rows: incomplete header");
    }
    r.reindex();
    return r;
}

inline void save_rows(const SweepResult& r, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    write_rows(out, r);
    if (!out) {
        throw Error("write failed for '" + path + "'");
    }
}

inline SweepResult load_rows(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open sweep rows '" + path + "'");
    }
    return read_rows(in);
}

} // namespace fairfront
