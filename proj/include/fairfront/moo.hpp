#pragma once

#include "fairfront/error.hpp"
#include "fairfront/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairfront {

// All fronts live in one orientation: x is performance (maximized), y is
// unfairness (minimized). Rawlsian fronts store y = -min group utility.

struct Point2 {
    double x = 0;
    double y = 0;

    bool operator==(const Point2&) const = default;
};

struct ObjectivePoint {
    double x = 0;
    double y = 0;
    std::string policy_id;

    bool operator==(const ObjectivePoint&) const = default;
};

enum class Space { utility, predictive };

inline std::string_view to_string(Space s) { return s == Space::utility ? "utility" : "predictive"; }

inline Space parse_space(std::string_view text)
{
    if (text == "utility") {
        return Space::utility;
    }
    if (text == "predictive") {
        return Space::predictive;
    }
    throw ConfigError("unknown space '" + std::string(text) + "'");
}

/// Mutually non-dominated points sorted by x descending; y strictly decreases
/// along the order.
struct Front {
    std::vector<ObjectivePoint> points;
    Space space = Space::utility;
    std::string justice;
    std::string class_scope;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }

    bool operator==(const Front&) const = default;
};

/// true when a is at least as good as b in both coordinates and strictly
/// better in one.
inline bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) noexcept
{
    return a.x >= b.x && a.y <= b.y && (a.x > b.x || a.y < b.y);
}

/// Sort by (x desc, y asc), keep each point whose y beats every kept one.
/// Equal-x points keep only the fairest, exact duplicates keep the first.
inline Front pareto_front(std::span<const ObjectivePoint> points)
{
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&points](std::size_t a, std::size_t b) {
        if (points[a].x != points[b].x) {
            return points[a].x > points[b].x;
        }
        return points[a].y < points[b].y;
    });
    Front front;
    double best_y = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
        if (points[i].y < best_y) {
            front.points.push_back(points[i]);
            best_y = points[i].y;
        }
    }
    return front;
}

inline Front pareto_front(const std::vector<ObjectivePoint>& points)
{
    return pareto_front(std::span<const ObjectivePoint>(points));
}

/// Area dominated by the front and bounded by `reference`, summed as one
/// rectangle per point (step-stair decomposition).
inline double hypervolume(const Front& front, Point2 reference)
{
    double hv = 0.0;
    for (std::size_t i = 0; i < front.points.size(); ++i) {
        const auto& p = front.points[i];
        if (reference.x > p.x || reference.y < p.y) {
            throw AnchorError("reference point (" + format_double(reference.x) + ", " + format_double(reference.y) +
                              ") is better than front point (" + format_double(p.x) + ", " + format_double(p.y) +
                              ")");
        }
        const double y_next = i > 0 ? front.points[i - 1].y : reference.y;
        hv += (p.x - reference.x) * (y_next - p.y);
    }
    return hv;
}

struct Anchors {
    Point2 utopia;
    Point2 nadir;
    Point2 reference;

    bool operator==(const Anchors&) const = default;
};

inline constexpr double reference_push_fraction = 0.01;
inline constexpr double reference_push_minimum = 1e-6;

/// Utopia/nadir over the union of the fronts; the reference is the nadir
/// pushed away from the utopia by 1% of each range (at least 1e-6).
inline Anchors anchors(std::span<const Front> fronts)
{
    double max_x = -std::numeric_limits<double>::infinity();
    double min_x = std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& f : fronts) {
        for (const auto& p : f.points) {
            any = true;
            max_x = std::max(max_x, p.x);
            min_x = std::min(min_x, p.x);
            max_y = std::max(max_y, p.y);
            min_y = std::min(min_y, p.y);
        }
    }
    if (!any) {
        throw AnchorError("anchors need at least one non-empty front");
    }
    Anchors a;
    a.utopia = {max_x, min_y};
    a.nadir = {min_x, max_y};
    const double push_x = std::max(reference_push_fraction * (max_x - min_x), reference_push_minimum);
    const double push_y = std::max(reference_push_fraction * (max_y - min_y), reference_push_minimum);
    a.reference = {min_x - push_x, max_y + push_y};
    return a;
}

inline Anchors anchors(const std::vector<Front>& fronts) { return anchors(std::span<const Front>(fronts)); }

inline double hv_max(const Anchors& a) { return (a.utopia.x - a.reference.x) * (a.reference.y - a.utopia.y); }

inline double nhv(const Front& front, const Anchors& a)
{
    const double denom = hv_max(a);
    if (!(denom > 0.0)) {
        throw AnchorError("degenerate anchors: utopia-reference rectangle has zero area");
    }
    double v = hypervolume(front, a.reference) / denom;
    if (v > 1.0 && v < 1.0 + 1e-12) {
        v = 1.0;
    }
    if (v < 0.0 && v > -1e-12) {
        v = 0.0;
    }
    return v;
}

struct FairnessGain {
    std::vector<double> x;
    std::vector<double> delta; // envelope_b(x) - envelope_a(x), fairness maximized
    double auc = 0;
};

namespace detail {

// Fairness (= -y) envelope of a front, linear between its points.
class Envelope {
public:
    explicit Envelope(const Front& f)
    {
        for (auto it = f.points.rbegin(); it != f.points.rend(); ++it) {
            xs_.push_back(it->x);
            fs_.push_back(-it->y);
        }
    }

    double lo() const { return xs_.front(); }
    double hi() const { return xs_.back(); }
    const std::vector<double>& breakpoints() const { return xs_; }

    double operator()(double x) const
    {
        if (xs_.size() == 1 || x <= xs_.front()) {
            return fs_.front();
        }
        if (x >= xs_.back()) {
            return fs_.back();
        }
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const auto k = static_cast<std::size_t>(it - xs_.begin());
        const double t = (x - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
        return fs_[k - 1] + t * (fs_[k] - fs_[k - 1]);
    }

private:
    std::vector<double> xs_; // ascending
    std::vector<double> fs_;
};

} // namespace detail

inline constexpr std::size_t default_gain_samples = 512;

/// Pointwise fairness gain of front_b over front_a at equal performance, on
/// the intersection of their x-ranges, integrated with the trapezoid rule.
/// Returns nullopt when the ranges do not overlap.
inline std::optional<FairnessGain> fairness_gain(const Front& front_a, const Front& front_b,
                                                 std::size_t samples = default_gain_samples)
{
    if (front_a.empty() || front_b.empty()) {
        throw MetricError("fairness gain needs two non-empty fronts");
    }
    const detail::Envelope a(front_a);
    const detail::Envelope b(front_b);
    const double lo = std::max(a.lo(), b.lo());
    const double hi = std::min(a.hi(), b.hi());
    if (lo > hi) {
        return std::nullopt;
    }
    std::vector<double> xs = samples > 0 ? linspace(lo, hi, samples) : std::vector<double>{lo, hi};
    for (const auto* env : {&a, &b}) {
        for (double x : env->breakpoints()) {
            if (x >= lo && x <= hi) {
                xs.push_back(x);
            }
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    FairnessGain g;
    g.x = xs;
    g.delta.reserve(xs.size());
    for (double x : xs) {
        g.delta.push_back(b(x) - a(x));
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        g.auc += 0.5 * (g.delta[i] + g.delta[i - 1]) * (xs[i] - xs[i - 1]);
    }
    return g;
}

} // namespace fairfront
