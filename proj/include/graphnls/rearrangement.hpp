#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "graphnls/errors.hpp"
#include "graphnls/field.hpp"

namespace graphnls {

/// Decreasing rearrangement u* on [0, meas(G)] as a piecewise-linear
/// breakpoint list (x nondecreasing, v nonincreasing). Plateaus of |u|
/// appear as flat pieces.
struct Rearranged {
    std::vector<double> x;
    std::vector<double> v;

    double total_measure() const { return x.empty() ? 0.0 : x.back(); }

    double lp_pow(double p) const {
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i)
            total += detail::cell_abs_pow(v[i], v[i + 1], x[i + 1] - x[i], p);
        return total;
    }

    double kinetic() const {
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            double w = x[i + 1] - x[i];
            if (w <= 0) continue;
            double d = v[i + 1] - v[i];
            total += d * d / w;
        }
        return total;
    }

    bool nonincreasing() const {
        for (std::size_t i = 0; i + 1 < v.size(); ++i)
            if (v[i + 1] > v[i] + 1e-14) return false;
        return true;
    }

    double eval(double pos) const {
        if (x.empty()) return 0.0;
        if (pos <= x.front()) return v.front();
        if (pos >= x.back()) return v.back();
        auto it = std::upper_bound(x.begin(), x.end(), pos);
        std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
        double w = x[i + 1] - x[i];
        if (w <= 0) return v[i + 1];
        double t = (pos - x[i]) / w;
        return v[i] + t * (v[i + 1] - v[i]);
    }

    std::vector<double> sample(int n) const {
        std::vector<double> out(static_cast<std::size_t>(n) + 1);
        double total = total_measure();
        for (int j = 0; j <= n; ++j)
            out[static_cast<std::size_t>(j)] = eval(total * j / n);
        return out;
    }
};

namespace detail {

// One linear piece of |u| on a cell: endpoint levels lo <= hi, width w. Its
// contribution to rho(t) = meas{|u| >= t} is w for t <= lo, linear in
// between, 0 above hi.
struct LevelCell {
    double lo;
    double hi;
    double width;
};

inline std::vector<LevelCell> collect_level_cells(const GraphField& f) {
    if (f.halfline_mode() == HalflineMode::ExactTail)
        throw Error(ErrorCode::BadParams,
                    "rearrangement expects a compactly gridded field (Truncated half-lines)");
    std::vector<LevelCell> cells;
    const MetricGraph& g = f.graph();
    for (const auto& e : g.edges()) {
        const auto& u = f.edge_values(e.id);
        if (u.size() < 2) continue;
        double h = f.grid().edge_step(g, e.id);
        for (std::size_t j = 0; j + 1 < u.size(); ++j) {
            double a = u[j], b = u[j + 1];
            if ((a < 0 && b > 0) || (a > 0 && b < 0)) {
                // split sign-crossing cells at the interior zero so |u| stays linear
                double cross = h * std::abs(a) / (std::abs(a) + std::abs(b));
                cells.push_back({0.0, std::abs(a), cross});
                cells.push_back({0.0, std::abs(b), h - cross});
            } else {
                double la = std::abs(a), lb = std::abs(b);
                cells.push_back({std::min(la, lb), std::max(la, lb), h});
            }
        }
    }
    return cells;
}

} // namespace detail

/// Exact decreasing rearrangement of |u| by a single descending sweep over
/// the level breakpoints of the piecewise-linear layer measure rho(t).
/// Equimeasurable with |u| up to rounding; Polya-Szego holds exactly for the
/// interpolant. O(N log N).
inline Rearranged decreasing_rearrangement(const GraphField& f) {
    auto cells = detail::collect_level_cells(f);
    Rearranged out;
    if (cells.empty()) return out;

    // events, descending by level: slope on/off at cell hi/lo, jumps for flat cells
    struct Event {
        double level;
        double slope_delta;  // change of -d rho/dt when passing below this level
        double jump;         // plateau width (flat cells)
    };
    std::vector<Event> events;
    events.reserve(2 * cells.size());
    for (const auto& c : cells) {
        if (c.hi > c.lo) {
            double s = c.width / (c.hi - c.lo);
            events.push_back({c.hi, +s, 0.0});
            events.push_back({c.lo, -s, 0.0});
        } else {
            events.push_back({c.hi, 0.0, c.width});
        }
    }
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.level > b.level; });

    auto push = [&out](double px, double pv) {
        if (!out.x.empty() && out.x.back() == px && out.v.back() == pv) return;
        out.x.push_back(px);
        out.v.push_back(pv);
    };

    // Descend through the levels: rho grows linearly at rate `slope` between
    // events; at the minimum level every cell has saturated, so the sweep
    // ends at x = meas(G) with slope back at zero.
    double x = 0.0;
    double slope = 0.0;
    double prev_level = events.front().level;
    std::size_t i = 0;
    while (i < events.size()) {
        double level = events[i].level;
        x += slope * (prev_level - level);
        double jump = 0.0;
        while (i < events.size() && events[i].level == level) {
            slope += events[i].slope_delta;
            jump += events[i].jump;
            ++i;
        }
        push(x, level);
        if (jump > 0.0) {
            x += jump;
            push(x, level);
        }
        prev_level = level;
    }
    return out;
}

} // namespace graphnls
