#pragma once

#include "fairfront/moo.hpp"
#include "fairfront/stakeholders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace fairfront {

/// Inner product of two utility matrices. Negative means the two
/// stakeholders profit from opposite decision-outcome events.
inline double alignment(const UtilityMatrix& dm, const UtilityMatrix& ds)
{
    return dm.u00 * ds.u00 + dm.u01 * ds.u01 + dm.u10 * ds.u10 + dm.u11 * ds.u11;
}

/// |u11| / |u10| of the DM matrix; +inf when u10 == 0.
inline double asymmetry_ratio(const UtilityMatrix& dm)
{
    if (dm.u10 == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::abs(dm.u11) / std::abs(dm.u10);
}

enum class Curvature { convex, concave };
enum class HullKind { lower_convex, upper_concave };

inline constexpr double curvature_tolerance = 1e-9;

namespace detail {

struct HullPoint {
    double x;
    double y;           // oriented so the lower convex envelope is wanted
    std::size_t source; // index into the input front
};

// x ascending, duplicate x collapsed to the lowest y.
inline std::vector<HullPoint> oriented_points(const Front& front, bool negate_y)
{
    std::vector<HullPoint> pts;
    pts.reserve(front.points.size());
    for (std::size_t i = 0; i < front.points.size(); ++i) {
        const auto& p = front.points[i];
        pts.push_back({p.x, negate_y ? -p.y : p.y, i});
    }
    std::stable_sort(pts.begin(), pts.end(), [](const HullPoint& a, const HullPoint& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    std::vector<HullPoint> out;
    for (const auto& p : pts) {
        if (out.empty() || out.back().x != p.x) {
            out.push_back(p);
        }
    }
    return out;
}

inline double slope_scale(const std::vector<HullPoint>& pts)
{
    if (pts.size() < 2) {
        return 1.0;
    }
    double lo = pts.front().y;
    double hi = pts.front().y;
    for (const auto& p : pts) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
    }
    const double dx = pts.back().x - pts.front().x;
    const double s = dx > 0 ? std::max(hi - lo, std::max(std::abs(lo), std::abs(hi))) / dx : 0.0;
    return s > 0 ? s : 1.0;
}

// true when b bends above the chord a->c beyond tolerance
inline bool breaks_convexity(const HullPoint& a, const HullPoint& b, const HullPoint& c, double tol)
{
    const double left = (b.y - a.y) / (b.x - a.x);
    const double right = (c.y - b.y) / (c.x - b.x);
    return right < left - tol;
}

} // namespace detail

/// Middle indices (into front.points) of consecutive triples whose slope
/// sequence breaks the requested curvature. `convex` checks lower convexity
/// of a minimized y, `concave` upper concavity of a maximized y; in both
/// cases a violation marks a dent that a mixture of the neighbours beats.
inline std::vector<std::size_t> curvature_violations(const Front& front, Curvature kind = Curvature::convex)
{
    const auto pts = detail::oriented_points(front, kind == Curvature::concave);
    std::vector<std::size_t> out;
    if (pts.size() < 3) {
        return out;
    }
    const double tol = curvature_tolerance * detail::slope_scale(pts);
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        if (detail::breaks_convexity(pts[i - 1], pts[i], pts[i + 1], tol)) {
            out.push_back(pts[i].source);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Monotone-chain envelope: the front attainable by randomizing between the
/// input points.
inline Front hull(const Front& front, HullKind kind = HullKind::lower_convex)
{
    const bool negate = kind == HullKind::upper_concave;
    const auto pts = detail::oriented_points(front, negate);
    const double tol = curvature_tolerance * detail::slope_scale(pts);
    std::vector<detail::HullPoint> chain;
    for (const auto& p : pts) {
        while (chain.size() >= 2 && detail::breaks_convexity(chain[chain.size() - 2], chain.back(), p, tol)) {
            chain.pop_back();
        }
        chain.push_back(p);
    }
    Front out;
    out.space = front.space;
    out.justice = front.justice;
    out.class_scope = front.class_scope;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        out.points.push_back(front.points[it->source]);
    }
    return out;
}

enum class Prediction { gain, no_gain };

inline std::string_view to_string(Prediction p) { return p == Prediction::gain ? "gain" : "no_gain"; }

struct RegimeReport {
    double asymmetry_ratio = 0;
    std::vector<double> alignments;
    Prediction egal_prediction = Prediction::no_gain;
    Prediction rawls_prediction = Prediction::no_gain;
    // one list per supplied deterministic front
    std::vector<std::vector<std::size_t>> curvature_violations;

    bool operator==(const RegimeReport&) const = default;
};

/// Egalitarian gains need an asymmetric DM (ratio > 1); Rawlsian gains also
/// need some group whose DS matrix is misaligned with the DM.
inline RegimeReport classify_regime(const StakeholderSpec& spec, std::span<const Front> det_fronts = {})
{
    RegimeReport r;
    r.asymmetry_ratio = asymmetry_ratio(spec.dm);
    for (const auto& ds : spec.ds) {
        r.alignments.push_back(alignment(spec.dm, ds));
    }
    const bool asymmetric = r.asymmetry_ratio > 1.0;
    const bool misaligned = std::any_of(r.alignments.begin(), r.alignments.end(), [](double a) { return a < 0.0; });
    r.egal_prediction = asymmetric ? Prediction::gain : Prediction::no_gain;
    r.rawls_prediction = asymmetric && misaligned ? Prediction::gain : Prediction::no_gain;
    for (const auto& f : det_fronts) {
        r.curvature_violations.push_back(curvature_violations(f, Curvature::convex));
    }
    return r;
}

} // namespace fairfront
