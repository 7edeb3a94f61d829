#pragma once

#include "fairfront/config.hpp"
#include "fairfront/error.hpp"
#include "fairfront/moo.hpp"
#include "fairfront/numeric.hpp"
#include "fairfront/policy.hpp"
#include "fairfront/projection.hpp"
#include "fairfront/stakeholders.hpp"
#include "fairfront/sweep.hpp"
#include "fairfront/theory.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fairfront {

struct CellKey {
    Space space = Space::utility;
    Justice justice = Justice::egalitarian;
    PolicyClass cls = PolicyClass::deterministic;
    Scope scope = Scope::shared;
    SplitTag split = SplitTag::train;

    auto operator<=>(const CellKey&) const = default;
};

/// "<space>.<justice>.<class>.<scope>.<split>"
inline std::string cell_name(const CellKey& k)
{
    std::string out(to_string(k.space));
    for (std::string_view part : {to_string(k.justice), to_string(k.cls), to_string(k.scope), to_string(k.split)}) {
        out += '.';
        out += part;
    }
    return out;
}

inline CellKey parse_cell(const std::string& space, const std::string& justice, const std::string& cls,
                          const std::string& scope, const std::string& split)
{
    return {parse_space(space), parse_justice(justice), parse_policy_class(cls), parse_scope(scope),
            parse_split_tag(split)};
}

/// Objective point of one row: (U_DM, unfairness) in utility space,
/// (accuracy, EO disparity) in predictive space.
inline std::optional<ObjectivePoint> row_point(const SweepRow& row, Space space, Justice justice)
{
    if (space == Space::utility) {
        return utility_point(row.utility, justice, row.policy.id);
    }
    if (std::isnan(row.eo)) {
        return std::nullopt;
    }
    return ObjectivePoint{row.accuracy, row.eo, row.policy.id};
}

inline Front tag_front(Front f, const CellKey& k)
{
    f.space = k.space;
    f.justice = std::string(to_string(k.justice));
    f.class_scope = std::string(to_string(k.cls)) + "." + std::string(to_string(k.scope));
    return f;
}

/// Front of every row of one class and scope on one split.
inline Front cell_front(const SweepResult& sweep, const CellKey& k)
{
    std::vector<ObjectivePoint> pts;
    for (const auto& row : sweep.rows) {
        if (row.split == k.split && row.policy.cls == k.cls && row.policy.scope == k.scope) {
            if (auto p = row_point(row, k.space, k.justice)) {
                pts.push_back(std::move(*p));
            }
        }
    }
    return tag_front(pareto_front(pts), k);
}

/// Policies of `train_front` re-evaluated on `split` rows, non-dominated
/// filter re-applied.
inline Front reevaluated_front(const SweepResult& sweep, const Front& train_front, const CellKey& k)
{
    std::vector<ObjectivePoint> pts;
    for (const auto& p : train_front.points) {
        const SweepRow* row = sweep.find(p.policy_id, k.split);
        if (row == nullptr) {
            throw LookupError("policy '" + p.policy_id + "' has no " + std::string(to_string(k.split)) + " row");
        }
        if (auto q = row_point(*row, k.space, k.justice)) {
            pts.push_back(std::move(*q));
        }
    }
    return tag_front(pareto_front(pts), k);
}

/// Predictive front's policies placed in utility space, filtered again.
inline Front projected_front(const SweepResult& sweep, const Front& predictive, Justice justice, SplitTag split)
{
    return project_with(
        predictive,
        [&](const std::string& id) -> std::optional<UtilityVector> {
            const SweepRow* row = sweep.find(id, split);
            if (row == nullptr) {
                return std::nullopt;
            }
            return row->utility;
        },
        justice);
}

struct CellMetrics {
    CellKey key;
    std::string comparison;
    double hv = 0;
    double nhv = 0;
};

struct Comparison {
    std::string name;
    Anchors anchors;
    std::optional<double> auc; // det -> stoch fairness gain, when both present and overlapping
    bool gain_defined = false;
};

struct ProjectionCell {
    Justice justice = Justice::egalitarian;
    PolicyClass cls = PolicyClass::deterministic;
    Scope scope = Scope::shared;
    SplitTag split = SplitTag::train;
    Front predictive;
    Front projected;
    Front utility;
    std::string comparison;
    double nhv_projected = 0;
    double nhv_utility = 0;
};

struct FrontSet {
    std::map<CellKey, Front> fronts;
    std::vector<CellMetrics> metrics;
    std::vector<Comparison> comparisons;
    std::vector<ProjectionCell> projections;
    RegimeReport regime;
    std::vector<std::string> regime_fronts; // cell names, aligned with regime.curvature_violations
    std::vector<std::string> notices;

    const Front* front(const CellKey& k) const
    {
        const auto it = fronts.find(k);
        return it == fronts.end() ? nullptr : &it->second;
    }

    const CellMetrics* cell_metrics(const CellKey& k) const
    {
        for (const auto& m : metrics) {
            if (m.key == k) {
                return &m;
            }
        }
        return nullptr;
    }

    const Comparison* comparison(const std::string& name) const
    {
        for (const auto& c : comparisons) {
            if (c.name == name) {
                return &c;
            }
        }
        return nullptr;
    }
};

inline std::string comparison_name(Space space, Justice justice, Scope scope, SplitTag split)
{
    return std::string(to_string(space)) + "." + std::string(to_string(justice)) + "." +
           std::string(to_string(scope)) + "." + std::string(to_string(split));
}

/// Fronts per (space, justice, class, scope, split), anchors shared within each
/// class comparison, hv/nhv, det->stoch fairness gain, projections and the
/// regime report.
inline FrontSet extract_fronts(const SweepResult& sweep, const ExperimentConfig& cfg)
{
    if (sweep.rows.empty()) {
        throw DataError("sweep has no rows");
    }
    FrontSet out;
    std::vector<SplitTag> splits{SplitTag::train};
    if (sweep.has_split(SplitTag::test)) {
        splits.push_back(SplitTag::test);
    }
    const auto classes_in_order = [&] {
        std::vector<PolicyClass> v;
        for (PolicyClass c : {PolicyClass::deterministic, PolicyClass::stochastic}) {
            if (std::find(cfg.classes.begin(), cfg.classes.end(), c) != cfg.classes.end()) {
                v.push_back(c);
            }
        }
        return v;
    }();

    for (Space space : cfg.spaces) {
        for (Justice justice : cfg.justices) {
            for (Scope scope : cfg.scopes) {
                for (SplitTag split : splits) {
                    std::vector<Front> compared;
                    std::vector<CellKey> keys;
                    for (PolicyClass cls : classes_in_order) {
                        const CellKey k{space, justice, cls, scope, split};
                        Front f = split == SplitTag::train
                                      ? cell_front(sweep, k)
                                      : reevaluated_front(sweep, out.fronts.at({space, justice, cls, scope,
                                                                                 SplitTag::train}),
                                                          k);
                        if (f.empty()) {
                            out.notices.push_back("cell " + cell_name(k) + " is empty; skipped");
                            continue;
                        }
                        out.fronts.emplace(k, f);
                        compared.push_back(std::move(f));
                        keys.push_back(k);
                    }
                    if (compared.empty()) {
                        continue;
                    }
                    Comparison cmp;
                    cmp.name = comparison_name(space, justice, scope, split);
                    cmp.anchors = anchors(compared);
                    for (std::size_t i = 0; i < compared.size(); ++i) {
                        out.metrics.push_back(
                            {keys[i], cmp.name, hypervolume(compared[i], cmp.anchors.reference),
                             nhv(compared[i], cmp.anchors)});
                    }
                    if (compared.size() == 2) {
                        cmp.gain_defined = true;
                        if (auto g = fairness_gain(compared[0], compared[1])) {
                            cmp.auc = g->auc;
                        }
                    }
                    out.comparisons.push_back(std::move(cmp));
                }
            }
        }
    }

    const bool both_spaces = std::find(cfg.spaces.begin(), cfg.spaces.end(), Space::utility) != cfg.spaces.end() &&
                             std::find(cfg.spaces.begin(), cfg.spaces.end(), Space::predictive) != cfg.spaces.end();
    if (both_spaces) {
        for (Justice justice : cfg.justices) {
            for (Scope scope : cfg.scopes) {
                for (SplitTag split : splits) {
                    std::vector<ProjectionCell> cells;
                    std::vector<Front> compared;
                    for (PolicyClass cls : classes_in_order) {
                        const Front* pred = out.front({Space::predictive, justice, cls, scope, split});
                        const Front* util = out.front({Space::utility, justice, cls, scope, split});
                        if (pred == nullptr || util == nullptr) {
                            continue;
                        }
                        ProjectionCell pc;
                        pc.justice = justice;
                        pc.cls = cls;
                        pc.scope = scope;
                        pc.split = split;
                        pc.predictive = *pred;
                        pc.projected = projected_front(sweep, *pred, justice, split);
                        pc.projected.class_scope = util->class_scope;
                        pc.utility = *util;
                        compared.push_back(pc.projected);
                        compared.push_back(pc.utility);
                        cells.push_back(std::move(pc));
                    }
                    if (cells.empty()) {
                        continue;
                    }
                    Comparison cmp;
                    cmp.name = "projection." + std::string(to_string(justice)) + "." +
                               std::string(to_string(scope)) + "." + std::string(to_string(split));
                    cmp.anchors = anchors(compared);
                    for (auto& pc : cells) {
                        pc.comparison = cmp.name;
                        pc.nhv_projected = nhv(pc.projected, cmp.anchors);
                        pc.nhv_utility = nhv(pc.utility, cmp.anchors);
                        out.projections.push_back(std::move(pc));
                    }
                    out.comparisons.push_back(std::move(cmp));
                }
            }
        }
    }

    std::vector<Front> det_fronts;
    for (Justice justice : cfg.justices) {
        for (Scope scope : cfg.scopes) {
            const CellKey k{Space::utility, justice, PolicyClass::deterministic, scope, SplitTag::train};
            if (const Front* f = out.front(k)) {
                det_fronts.push_back(*f);
                out.regime_fronts.push_back(cell_name(k));
            }
        }
    }
    out.regime = classify_regime(sweep.stakeholders, det_fronts);
    return out;
}

inline nlohmann::json policy_json(const PolicyParams& p)
{
    return {{"id", p.id},
            {"class", std::string(to_string(p.cls))},
            {"scope", std::string(to_string(p.scope))},
            {"gamma", p.gamma},
            {"beta", p.beta}};
}

inline nlohmann::json anchors_json(const Anchors& a)
{
    return {{"utopia", {a.utopia.x, a.utopia.y}},
            {"nadir", {a.nadir.x, a.nadir.y}},
            {"reference", {a.reference.x, a.reference.y}}};
}

/// One JSON object per point, one point per line.
inline void write_front(std::ostream& out, const Front& f, const SweepResult& sweep, SplitTag split)
{
    for (const auto& p : f.points) {
        const SweepRow* row = sweep.find(p.policy_id, split);
        nlohmann::json j = {{"x", p.x},
                            {"y", p.y},
                            {"space", std::string(to_string(f.space))},
                            {"justice", f.justice},
                            {"policy", row != nullptr ? policy_json(row->policy) : nlohmann::json{{"id", p.policy_id}}}};
        out << j.dump() << '\n';
    }
}

inline void write_metrics(std::ostream& out, const FrontSet& fs)
{
    out << "# fairfront metrics\n";
    out << "anchors\tcomparison\tutopia_x\tutopia_y\tnadir_x\tnadir_y\treference_x\treference_y\n";
    for (const auto& c : fs.comparisons) {
        const auto& a = c.anchors;
        out << "anchors\t" << c.name;
        for (double v : {a.utopia.x, a.utopia.y, a.nadir.x, a.nadir.y, a.reference.x, a.reference.y}) {
            out << '\t' << format_double(v);
        }
        out << '\n';
    }
    out << "front\tcell\tcomparison\tpoints\thv\tnhv\n";
    for (const auto& m : fs.metrics) {
        out << "front\t" << cell_name(m.key) << '\t' << m.comparison << '\t' << fs.fronts.at(m.key).size() << '\t'
            << format_double(m.hv) << '\t' << format_double(m.nhv) << '\n';
    }
    out << "gain\tcomparison\tauc\n";
    for (const auto& c : fs.comparisons) {
        if (c.gain_defined) {
            out << "gain\t" << c.name << '\t' << (c.auc ? format_double(*c.auc) : std::string("undefined")) << '\n';
        }
    }
    out << "projection\tcell\tcomparison\tnhv_projected\tnhv_utility\n";
    for (const auto& p : fs.projections) {
        out << "projection\t" << to_string(p.justice) << '.' << to_string(p.cls) << '.' << to_string(p.scope) << '.'
            << to_string(p.split) << '\t' << p.comparison << '\t' << format_double(p.nhv_projected) << '\t'
            << format_double(p.nhv_utility) << '\n';
    }
}

inline void write_regime(std::ostream& out, const FrontSet& fs, const std::vector<std::string>& group_labels)
{
    const auto& r = fs.regime;
    out << "asymmetry_ratio\t" << format_double(r.asymmetry_ratio) << '\n';
    for (std::size_t g = 0; g < r.alignments.size(); ++g) {
        out << "alignment\t" << (g < group_labels.size() ? group_labels[g] : std::to_string(g)) << '\t'
            << format_double(r.alignments[g]) << '\n';
    }
    out << "egal_prediction\t" << to_string(r.egal_prediction) << '\n';
    out << "rawls_prediction\t" << to_string(r.rawls_prediction) << '\n';
    for (std::size_t i = 0; i < r.curvature_violations.size(); ++i) {
        out << "curvature_violations\t" << fs.regime_fronts[i] << '\t';
        const auto& v = r.curvature_violations[i];
        if (v.empty()) {
            out << '-';
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            out << (k ? "," : "") << v[k];
        }
        out << '\n';
    }
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
}

} // namespace detail

/// Writes the result directory. Files are staged next to `dir` and moved into
/// place only once everything has been written.
inline void save_results(const std::string& dir, const ExperimentConfig& cfg, const SweepResult& sweep,
                         const FrontSet& fs)
{
    namespace fs_ = std::filesystem;
    const fs_::path target(dir);
    const fs_::path staging = target.string() + ".partial";
    fs_::remove_all(staging);
    fs_::create_directories(staging / "fronts");

    auto doc = to_json(cfg);
    doc.erase("out_dir");
    detail::write_text(staging / "config.json", doc.dump(2) + "\n");
    save_rows(sweep, (staging / rows_file_name(sweep.config_hash)).string());
    for (const auto& [key, front] : fs.fronts) {
        std::ostringstream s;
        write_front(s, front, sweep, key.split);
        detail::write_text(staging / "fronts" / cell_name(key), s.str());
    }
    {
        std::ostringstream s;
        write_metrics(s, fs);
        detail::write_text(staging / "metrics.summary", s.str());
    }
    {
        std::ostringstream s;
        write_regime(s, fs, sweep.group_labels);
        detail::write_text(staging / "regime.report", s.str());
    }
    if (target.has_parent_path()) {
        fs_::create_directories(target.parent_path());
    }
    fs_::remove_all(target);
    fs_::rename(staging, target);
}

/// Loads the sweep rows stored in a result directory.
inline SweepResult load_results(const std::string& dir)
{
    namespace fs_ = std::filesystem;
    if (!fs_::is_directory(dir)) {
        throw DataError("no result directory at '" + dir + "'");
    }
    for (const auto& entry : fs_::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("sweep.", 0) == 0 && name.size() > 11 && name.substr(name.size() - 5) == ".rows") {
            return load_rows(entry.path().string());
        }
    }
    throw DataError("no sweep rows in '" + dir + "'");
}

inline ExperimentConfig load_result_config(const std::string& dir)
{
    auto cfg = load_config((std::filesystem::path(dir) / "config.json").string());
    cfg.out_dir = dir;
    return cfg;
}

struct ExperimentRun {
    SweepResult sweep;
    FrontSet fronts;
};

/// Sweep, extraction and, when cfg.out_dir is set, persistence.
inline ExperimentRun run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1)
{
    ExperimentRun run;
    run.sweep = run_sweep(cfg, workers);
    run.fronts = extract_fronts(run.sweep, cfg);
    if (!cfg.out_dir.empty()) {
        save_results(cfg.out_dir, cfg, run.sweep, run.fronts);
    }
    return run;
}

enum class Alignment { aligned, misaligned };

inline std::string_view to_string(Alignment a) { return a == Alignment::aligned ? "aligned" : "misaligned"; }

inline Alignment parse_alignment(std::string_view text)
{
    if (text == "aligned") {
        return Alignment::aligned;
    }
    if (text == "misaligned") {
        return Alignment::misaligned;
    }
    throw ConfigError("unknown alignment '" + std::string(text) + "'");
}

/// DM with |u11| / |u10| = ratio (u10 and the sign of u11 kept) and DS
/// matrices oriented so every group is aligned; the misaligned variant then
/// negates group 1.
inline StakeholderSpec ablation_spec(const StakeholderSpec& base, double ratio, Alignment variant)
{
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        throw ConfigError("ablation ratios must be finite and > 0");
    }
    if (base.dm.u10 == 0.0) {
        throw ConfigError("ablation needs a non-zero DM u10");
    }
    StakeholderSpec s = base;
    s.per_instance_dm = false;
    s.dm.u11 = (base.dm.u11 < 0.0 ? -1.0 : 1.0) * std::abs(base.dm.u10) * ratio;
    for (auto& m : s.ds) {
        if (alignment(s.dm, m) < 0.0) {
            m = m.scaled(-1.0);
        }
    }
    if (variant == Alignment::misaligned) {
        if (s.ds.size() < 2) {
            throw ConfigError("misaligned ablation needs at least two groups");
        }
        s.ds[1] = s.ds[1].scaled(-1.0);
    }
    return s;
}

struct AblationRow {
    double ratio = 0;
    Alignment alignment = Alignment::aligned;
    Justice justice = Justice::egalitarian;
    double hv_det = 0;   // normalized, anchors shared with the stochastic front
    double hv_stoch = 0;
    double gain = 0;
};

/// Stochastic-minus-deterministic nHV per ratio, alignment and justice on the
/// first configured scope. One sweep is run; each setting re-evaluates its
/// utilities from the stored tallies.
inline std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const std::vector<double>& ratios,
                                             const std::vector<Alignment>& alignments, std::size_t workers = 1)
{
    if (ratios.empty() || alignments.empty()) {
        throw ConfigError("ablation needs at least one ratio and one alignment");
    }
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw ConfigError("ablation ratios must be finite and > 0");
        }
    }
    ExperimentConfig cfg = base;
    cfg.classes = {PolicyClass::deterministic, PolicyClass::stochastic};
    cfg.scopes = {base.scopes.empty() ? Scope::shared : base.scopes.front()};
    cfg.spaces = {Space::utility};
    cfg.split.reset();
    const SweepResult sweep = run_sweep(cfg, workers);
    const Scope scope = cfg.scopes.front();

    std::vector<AblationRow> out;
    for (double ratio : ratios) {
        for (Alignment al : alignments) {
            const SweepResult s = whatif(sweep, ablation_spec(cfg.stakeholders, ratio, al));
            for (Justice justice : cfg.justices) {
                const Front det =
                    cell_front(s, {Space::utility, justice, PolicyClass::deterministic, scope, SplitTag::train});
                const Front stoch =
                    cell_front(s, {Space::utility, justice, PolicyClass::stochastic, scope, SplitTag::train});
                const std::vector<Front> both{det, stoch};
                const Anchors a = anchors(both);
                AblationRow row;
                row.ratio = ratio;
                row.alignment = al;
                row.justice = justice;
                row.hv_det = nhv(det, a);
                row.hv_stoch = nhv(stoch, a);
                row.gain = row.hv_stoch - row.hv_det;
                out.push_back(row);
            }
        }
    }
    return out;
}

inline void write_ablation(std::ostream& out, const std::vector<AblationRow>& rows)
{
    out << "ratio\talignment\tjustice\thv_det\thv_stoch\tgain\n";
    for (const auto& r : rows) {
        out << format_double(r.ratio) << '\t' << to_string(r.alignment) << '\t' << to_string(r.justice) << '\t'
            << format_double(r.hv_det) << '\t' << format_double(r.hv_stoch) << '\t' << format_double(r.gain) << '\n';
    }
}

inline constexpr std::size_t decision_curve_points = 257;

struct DecisionCurve {
    std::vector<double> scores;
    std::vector<std::vector<double>> accept; // one curve per group
};

/// Acceptance probability of `policy` over `scores`, per group.
inline DecisionCurve decision_curve(const PolicyParams& policy, const std::vector<double>& scores,
                                    std::size_t groups)
{
    DecisionCurve c;
    c.scores = scores;
    c.accept.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        for (double s : scores) {
            c.accept[g].push_back(acceptance_prob(policy, s, g));
        }
    }
    return c;
}

inline DecisionCurve decision_curve(const PolicyParams& policy, std::size_t groups)
{
    return decision_curve(policy, linspace(0.0, 1.0, decision_curve_points), groups);
}

} // namespace fairfront
