#pragma once

#include "fairfront/error.hpp"
#include "fairfront/numeric.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fairfront {

/// Per-instance decision-maker utilities in (d,y) order: u00, u01, u10, u11.
using DmEntries = std::array<double, 4>;

struct Individual {
    double score = 0.0;              // calibrated P(Y=1 | X, S) or classifier output
    std::size_t group = 0;           // dense group index
    std::optional<int> outcome;      // realized label, 0 or 1
    std::optional<DmEntries> dm_entries;

    bool operator==(const Individual&) const = default;
};

/// Immutable scored population. Every group index in [0, group_count) occurs
/// at least once; construction validates this.
class Population {
public:
    Population(std::vector<Individual> individuals, std::vector<std::string> group_labels,
               std::string label = {}, std::optional<std::uint64_t> seed = std::nullopt)
        : individuals_(std::move(individuals)), group_labels_(std::move(group_labels)),
          label_(std::move(label)), seed_(seed)
    {
        if (individuals_.empty()) {
            throw DataError("population must be non-empty");
        }
        if (group_labels_.empty()) {
            throw DataError("population needs at least one group");
        }
        group_sizes_.assign(group_labels_.size(), 0);
        for (const auto& ind : individuals_) {
            if (!(ind.score >= 0.0 && ind.score <= 1.0)) {
                throw DataError("score outside [0,1]: " + format_double(ind.score));
            }
            if (ind.group >= group_labels_.size()) {
                throw DataError("group index " + std::to_string(ind.group) + " out of range");
            }
            if (ind.outcome && *ind.outcome != 0 && *ind.outcome != 1) {
                throw DataError("outcome must be 0 or 1");
            }
            ++group_sizes_[ind.group];
        }
        for (std::size_t g = 0; g < group_sizes_.size(); ++g) {
            if (group_sizes_[g] == 0) {
                throw DataError("group '" + group_labels_[g] + "' has no members");
            }
        }
        members_.resize(group_labels_.size());
        for (std::size_t i = 0; i < individuals_.size(); ++i) {
            members_[individuals_[i].group].push_back(i);
        }
    }

    const std::vector<Individual>& individuals() const noexcept { return individuals_; }
    std::size_t size() const noexcept { return individuals_.size(); }
    std::size_t group_count() const noexcept { return group_labels_.size(); }
    const std::vector<std::string>& group_labels() const noexcept { return group_labels_; }
    std::size_t group_size(std::size_t g) const { return group_sizes_.at(g); }
    const std::vector<std::size_t>& members(std::size_t g) const { return members_.at(g); }
    const std::string& label() const noexcept { return label_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

    bool has_all_outcomes() const
    {
        return std::all_of(individuals_.begin(), individuals_.end(),
                           [](const Individual& i) { return i.outcome.has_value(); });
    }

    bool has_dm_entries() const
    {
        return std::any_of(individuals_.begin(), individuals_.end(),
                           [](const Individual& i) { return i.dm_entries.has_value(); });
    }

    bool operator==(const Population& other) const
    {
        return individuals_ == other.individuals_ && group_labels_ == other.group_labels_;
    }

private:
    std::vector<Individual> individuals_;
    std::vector<std::string> group_labels_;
    std::string label_;
    std::optional<std::uint64_t> seed_;
    std::vector<std::size_t> group_sizes_;
    std::vector<std::vector<std::size_t>> members_;
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

inline bool is_integer_label(const std::string& s)
{
    if (s.empty()) {
        return false;
    }
    std::size_t start = (s[0] == '-') ? 1 : 0;
    return start < s.size() &&
           std::all_of(s.begin() + static_cast<std::ptrdiff_t>(start), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

} // namespace detail

/// Dense re-indexing of external group labels: numeric order when every label
/// is an integer, lexicographic otherwise.
inline std::vector<std::string> dense_group_order(std::vector<std::string> labels)
{
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool numeric = std::all_of(labels.begin(), labels.end(), detail::is_integer_label);
    if (numeric) {
        std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
            return std::stoll(a) < std::stoll(b);
        });
    }
    return labels;
}

inline Population parse_population_csv(std::istream& in, const std::string& label = "csv")
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) {
        throw SchemaError("population file is empty");
    }

    const auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto score_col = column("score");
    const auto group_col = column("group");
    if (!score_col) {
        throw SchemaError("missing required column 'score'");
    }
    if (!group_col) {
        throw SchemaError("missing required column 'group'");
    }
    const auto outcome_col = column("outcome");
    const std::array<std::optional<std::size_t>, 4> dm_cols{
        column("dm_u00"), column("dm_u01"), column("dm_u10"), column("dm_u11")};
    const auto dm_present = std::count_if(dm_cols.begin(), dm_cols.end(),
                                          [](const auto& c) { return c.has_value(); });
    if (dm_present != 0 && dm_present != 4) {
        throw SchemaError("dm_u00..dm_u11 must be given together");
    }

    struct RawRow {
        Individual ind;
        std::string group;
    };
    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw RowError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
        }
        RawRow row;
        try {
            row.ind.score = parse_double(cells[*score_col]);
        } catch (const std::exception&) {
            throw RowError(line_no, "score is not a number: '" + cells[*score_col] + "'");
        }
        if (!(row.ind.score >= 0.0 && row.ind.score <= 1.0)) {
            throw RowError(line_no, "score " + cells[*score_col] + " outside [0,1]");
        }
        row.group = cells[*group_col];
        if (row.group.empty()) {
            throw RowError(line_no, "empty group");
        }
        if (outcome_col && !cells[*outcome_col].empty()) {
            const auto& o = cells[*outcome_col];
            if (o != "0" && o != "1") {
                throw RowError(line_no, "outcome must be 0 or 1, got '" + o + "'");
            }
            row.ind.outcome = (o == "1") ? 1 : 0;
        }
        if (dm_present == 4) {
            DmEntries dm{};
            for (std::size_t k = 0; k < 4; ++k) {
                try {
                    dm[k] = parse_double(cells[*dm_cols[k]]);
                } catch (const std::exception&) {
                    throw RowError(line_no, "dm utility is not a number: '" + cells[*dm_cols[k]] + "'");
                }
                if (!std::isfinite(dm[k])) {
                    throw RowError(line_no, "dm utility must be finite");
                }
            }
            row.ind.dm_entries = dm;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw SchemaError("population file has a header but no rows");
    }

    std::vector<std::string> raw_labels;
    raw_labels.reserve(rows.size());
    for (const auto& r : rows) {
        raw_labels.push_back(r.group);
    }
    auto labels = dense_group_order(std::move(raw_labels));
    std::map<std::string, std::size_t> index;
    for (std::size_t g = 0; g < labels.size(); ++g) {
        index[labels[g]] = g;
    }
    std::vector<Individual> individuals;
    individuals.reserve(rows.size());
    for (auto& r : rows) {
        r.ind.group = index.at(r.group);
        individuals.push_back(r.ind);
    }
    return Population(std::move(individuals), std::move(labels), label);
}

inline Population ingest_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open population file '" + path + "'");
    }
    return parse_population_csv(in, path);
}

/// Writes the import format back out; optional columns appear only when some
/// individual carries them.
inline void write_population_csv(std::ostream& out, const Population& pop)
{
    const bool with_outcome = std::any_of(pop.individuals().begin(), pop.individuals().end(),
                                          [](const Individual& i) { return i.outcome.has_value(); });
    const bool with_dm = pop.has_dm_entries();
    out << "score,group";
    if (with_outcome) {
        out << ",outcome";
    }
    if (with_dm) {
        out << ",dm_u00,dm_u01,dm_u10,dm_u11";
    }
    out << '\n';
    for (const auto& ind : pop.individuals()) {
        out << format_double(ind.score) << ',' << pop.group_labels()[ind.group];
        if (with_outcome) {
            out << ',';
            if (ind.outcome) {
                out << *ind.outcome;
            }
        }
        if (with_dm) {
            const DmEntries dm = ind.dm_entries.value_or(DmEntries{0, 0, 0, 0});
            for (double v : dm) {
                out << ',' << format_double(v);
            }
        }
        out << '\n';
    }
}

inline void export_csv(const Population& pop, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write population file '" + path + "'");
    }
    write_population_csv(out, pop);
}

/// Stratified train/test partition. The global train size is round(n * fraction);
/// it is apportioned to groups by largest remainder so every group lands within
/// one record of the global fraction.
inline std::pair<Population, Population> split(const Population& pop, double train_fraction,
                                               std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0,1)");
    }
    const std::size_t groups = pop.group_count();
    const auto total_train =
        static_cast<std::size_t>(std::llround(static_cast<double>(pop.size()) * train_fraction));

    std::vector<std::size_t> take(groups);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const double exact = static_cast<double>(pop.group_size(g)) * train_fraction;
        take[g] = static_cast<std::size_t>(std::floor(exact));
        assigned += take[g];
        remainders.emplace_back(exact - std::floor(exact), g);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total_train && k < remainders.size(); ++k, ++assigned) {
        ++take[remainders[k].second];
    }
    for (std::size_t g = 0; g < groups; ++g) {
        if (take[g] == 0 || take[g] == pop.group_size(g)) {
            throw SplitError("split would leave group '" + pop.group_labels()[g] +
                             "' empty in one half");
        }
    }

    boost::random::mt19937_64 rng(seed);
    std::vector<char> in_train(pop.size(), 0);
    for (std::size_t g = 0; g < groups; ++g) {
        std::vector<std::size_t> idx = pop.members(g);
        // Fisher-Yates driven by boost's portable generator
        for (std::size_t i = idx.size(); i > 1; --i) {
            boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(idx[i - 1], idx[pick(rng)]);
        }
        for (std::size_t k = 0; k < take[g]; ++k) {
            in_train[idx[k]] = 1;
        }
    }
    std::vector<Individual> train;
    std::vector<Individual> test;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        (in_train[i] ? train : test).push_back(pop.individuals()[i]);
    }
    return {Population(std::move(train), pop.group_labels(), pop.label() + "#train", pop.seed()),
            Population(std::move(test), pop.group_labels(), pop.label() + "#test", pop.seed())};
}

} // namespace fairfront
