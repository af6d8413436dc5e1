#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphnls/errors.hpp"
#include "graphnls/field.hpp"
#include "graphnls/graph.hpp"
#include "graphnls/solver.hpp"
#include "graphnls/waves.hpp"

namespace graphnls {

// Construction results report converged=true when the construction itself
// succeeded (wave bisection, exact vertex placement, Kirchhoff cancellation
// below 1e-8); the stationary residual of the sampled wave is O(h^2) and is
// reported as measured.

namespace detail {

inline BoundStateResult construction_result(GraphField field, double p, double lambda,
                                            const std::string& what) {
    BoundStateResult r = finalize_result(std::move(field), p, lambda, std::nullopt, 1e-8);
    r.converged = r.kirchhoff_residual_max < 1e-8;
    r.message = what + (r.converged ? "" : " [Kirchhoff residual above 1e-8]");
    return r;
}

} // namespace detail

/// Compactly supported state on a commensurable cycle: the odd L-periodic
/// wave laid along the cycle (vertices land on the zeros at multiples of L),
/// zero elsewhere. Works for any lambda the period map can reach.
inline BoundStateResult cycle_compact_state(const GraphPtr& g, double p, double lambda,
                                            double h = 5e-3) {
    auto cyc = commensurable_cycle(*g);
    if (!cyc)
        throw Error(ErrorCode::NoCommensurableCycle,
                    "graph has no cycle with pairwise commensurable lengths");
    double L = cyc->unit.value();
    PeriodicWave wave = periodic_odd_solution(L, p, lambda);

    GridSpec grid = GridSpec::make(*g, h, HalflineMode::Truncated, 20.0);
    GraphField f(g, grid, NonlinearitySupport::Localized);

    // walk the cycle, tracking offsets (exact multiples of L) and orientation
    VertexId at = g->edge(cyc->edges.front()).from;
    Rational offset(0);
    for (int eid : cyc->edges) {
        const Edge& e = g->edge(eid);
        bool aligned;
        if (e.is_selfloop()) {
            aligned = true;
        } else if (e.from == at) {
            aligned = true;
        } else if (e.to == at) {
            aligned = false;
        } else {
            throw Error(ErrorCode::BadParams, "cycle edges are not consecutive");
        }
        auto& u = f.edge_values(eid);
        double he = grid.edge_step(*g, eid);
        double len = e.length.value();
        double off = offset.value();
        std::vector<double> xs(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) {
            double x_e = he * static_cast<double>(j);
            xs[j] = aligned ? off + x_e : off + (len - x_e);
        }
        auto vals = wave.eval_many(xs);
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = vals[j].first;
        // vertices sit on exact zeros of the wave
        u.front() = 0.0;
        u.back() = 0.0;
        offset = offset + *e.length.exact;
        at = e.is_selfloop() ? at : (aligned ? e.to : e.from);
    }
    return detail::construction_result(std::move(f), p, lambda,
                                       "cycle state, L=" + cyc->unit.str() + ", k=" +
                                           std::to_string(cyc->k));
}

/// The pendant length and period unit a compact pendant state needs:
/// xbar = L/(4k) (first maximum of the smallest-k odd L-periodic wave),
/// interior edges must be exact multiples of 2*xbar.
struct PendantGeometry {
    Rational xbar;
    Rational unit;  // 2*xbar, the zero spacing
    int k = 1;
};

inline PendantGeometry required_pendant_geometry(double p, double lambda, const Rational& L) {
    if (!L.is_positive()) throw Error(ErrorCode::BadParams, "period must be positive");
    (void)p;
    int k = minimal_repetitions(L.value(), lambda);
    Rational xbar = L / Rational(4 * static_cast<std::int64_t>(k));
    return {xbar, xbar * Rational(2), k};
}

/// Compact state supported on the pendant-to-pendant path of a two-pendant
/// or three-pendant gallery graph: the wave runs from one pendant tip
/// (where phi' vanishes) to the other, zero elsewhere.
inline BoundStateResult pendant_compact_state(const GraphPtr& g, double p, double lambda,
                                              double h = 5e-3) {
    // the two path pendants: equal-length bounded edges with a degree-1 tip
    std::vector<int> pendants;
    for (const auto& e : g->edges()) {
        if (!e.is_bounded()) continue;
        if (g->degree(e.from) == 1 || g->degree(e.to) == 1) pendants.push_back(e.id);
    }
    if (pendants.size() < 2)
        throw Error(ErrorCode::GeometryMismatch, "need at least two pendant edges");

    auto tip_of = [&](int eid) {
        const Edge& e = g->edge(eid);
        return g->degree(e.from) == 1 ? e.from : e.to;
    };
    auto root_of = [&](int eid) {
        const Edge& e = g->edge(eid);
        return g->degree(e.from) == 1 ? e.to : e.from;
    };

    // choose the two equal-length pendants realizing the wave (first pair)
    int pa = -1, pb = -1;
    for (std::size_t i = 0; i < pendants.size() && pa < 0; ++i)
        for (std::size_t j = i + 1; j < pendants.size(); ++j) {
            const auto& li = g->edge(pendants[i]).length;
            const auto& lj = g->edge(pendants[j]).length;
            if (li.is_exact() && lj.is_exact() && *li.exact == *lj.exact) {
                pa = pendants[i];
                pb = pendants[j];
                break;
            }
        }
    if (pa < 0)
        throw Error(ErrorCode::GeometryMismatch, "no two pendants of equal exact length");
    Rational xbar = *g->edge(pa).length.exact;
    Rational unit = xbar * Rational(2);

    // interior path between the pendant roots through bounded edges (BFS)
    VertexId ra = root_of(pa), rb = root_of(pb);
    std::vector<int> path;
    if (ra != rb) {
        std::map<VertexId, std::pair<VertexId, int>> from;
        std::deque<VertexId> queue{ra};
        from[ra] = {ra, -1};
        while (!queue.empty()) {
            VertexId v = queue.front();
            queue.pop_front();
            if (v == rb) break;
            for (const auto& [eid, sign] : g->incident(v)) {
                const Edge& e = g->edge(eid);
                if (!e.is_bounded() || eid == pa || eid == pb) continue;
                VertexId w = e.from == v ? e.to : e.from;
                if (from.count(w)) continue;
                from[w] = {v, eid};
                queue.push_back(w);
            }
        }
        if (!from.count(rb))
            throw Error(ErrorCode::GeometryMismatch, "pendant roots are not joined by bounded edges");
        for (VertexId v = rb; v != ra; v = from[v].first) path.push_back(from[v].second);
        std::reverse(path.begin(), path.end());
    }
    for (int eid : path) {
        const auto& len = g->edge(eid).length;
        if (!len.is_exact() || len.exact->integer_quotient(unit) <= 0)
            throw Error(ErrorCode::GeometryMismatch,
                        "interior edge length " + (len.is_exact() ? len.exact->str() : "irrational") +
                            " is not a positive multiple of 2*xbar = " + unit.str());
    }

    // wave with first maximum exactly at xbar: minimal period 4*xbar
    PeriodicWave wave = periodic_odd_solution(4.0 * xbar.value(), p, lambda);
    if (wave.repetitions() != 1)
        throw Error(ErrorCode::GeometryMismatch,
                    "pendant length " + xbar.str() + " is too long for lambda=" +
                        std::to_string(lambda) + ": the first wave maximum sits at " +
                        std::to_string(wave.minimal_period() / 4.0) +
                        "; shorten the pendant or use required_pendant_geometry");

    GridSpec grid = GridSpec::make(*g, h, HalflineMode::Truncated, 20.0);
    GraphField f(g, grid, NonlinearitySupport::Localized);

    // lay phi along tip(pa) -> ra -> path -> rb -> tip(pb); phase 0 at ra
    auto lay = [&](int eid, const Rational& start_phase, const VertexId& enter_at) {
        const Edge& e = g->edge(eid);
        bool aligned = (e.from == enter_at);
        auto& u = f.edge_values(eid);
        double he = grid.edge_step(*g, eid);
        double len = e.length.value();
        double ph0 = start_phase.value();
        std::vector<double> xs(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) {
            double x_e = he * static_cast<double>(j);
            xs[j] = aligned ? ph0 + x_e : ph0 + (len - x_e);
        }
        auto vals = wave.eval_many(xs);
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = vals[j].first;
    };

    // pendant pa covers phases [-xbar, 0]: enter at the tip
    lay(pa, -xbar, tip_of(pa));
    Rational phase(0);
    {
        auto& u = f.edge_values(pa);
        // the root end of pa carries phase 0, an exact zero of phi
        if (g->edge(pa).from == tip_of(pa)) u.back() = 0.0;
        else u.front() = 0.0;
    }
    VertexId at = ra;
    for (int eid : path) {
        lay(eid, phase, at);
        auto& u = f.edge_values(eid);
        u.front() = 0.0;
        u.back() = 0.0;  // interior vertices sit on zeros (multiples of 2*xbar)
        const Edge& e = g->edge(eid);
        phase = phase + *e.length.exact;
        at = e.from == at ? e.to : e.from;
    }
    lay(pb, phase, at);
    {
        auto& u = f.edge_values(pb);
        if (g->edge(pb).from == at) u.front() = 0.0;
        else u.back() = 0.0;
    }
    return detail::construction_result(std::move(f), p, lambda,
                                       "pendant path state, xbar=" + xbar.str());
}

/// Symmetric everywhere-positive bound state of the everywhere-nonlinear
/// problem on a double bridge: the mass mu/2 ground state of the half graph
/// (natural Neumann conditions at the cut vertices) reflected across the
/// symmetry axis.
inline BoundStateResult double_bridge_state(const Rational& b1, const Rational& b2, double p,
                                            double mu, const SolverOptions& opts) {
    GraphPtr half = share(named_graph("half_double_bridge", {{"b1", b1}, {"b2", b2}}));

    SolverOptions hopts = opts;
    // rough solve to estimate the multiplier, then resolve with a matched box
    SolverOptions rough = opts;
    rough.h = std::max(opts.h, 2e-2);
    rough.R = opts.R > 0 ? opts.R : 60.0;
    rough.tolerance = std::max(opts.tolerance, 1e-7);
    BoundStateResult half_state = ground_state(half, p, mu / 2.0,
                                               NonlinearitySupport::Everywhere, rough);
    if (half_state.converged) {
        hopts.R = opts.R > 0 ? opts.R : GridSpec::default_truncation(half_state.lambda);
        half_state = ground_state(half, p, mu / 2.0, NonlinearitySupport::Everywhere, hopts);
    }
    if (!half_state.converged)
        throw Error(ErrorCode::HalfGraphNonConvergence,
                    "half-graph ground state failed: " + half_state.message);

    GraphPtr bridge = share(named_graph("double_bridge", {{"b1", b1}, {"b2", b2}}));
    // bridge edge i doubles half edge i; half-lines mirror the single one
    const GridSpec& hgrid = half_state.field.grid();
    GridSpec grid;
    grid.h = hgrid.h;
    grid.halfline_mode = HalflineMode::Truncated;
    grid.R = hgrid.R;
    grid.intervals = {2 * hgrid.intervals[0], 2 * hgrid.intervals[1],
                      hgrid.intervals[2], hgrid.intervals[2]};
    GraphField f(bridge, grid, NonlinearitySupport::Everywhere);
    for (int b = 0; b < 2; ++b) {
        const auto& src = half_state.field.edge_values(b);
        auto& dst = f.edge_values(b);
        std::size_t n = src.size() - 1;
        for (std::size_t j = 0; j <= n; ++j) {
            dst[j] = src[j];
            dst[2 * n - j] = src[j];  // mirror through the cut vertex
        }
    }
    const auto& hl = half_state.field.edge_values(2);
    f.edge_values(2) = hl;
    f.edge_values(3) = hl;

    double lambda = lagrange_multiplier(f, p);
    BoundStateResult r = finalize_result(std::move(f), p, lambda, mu, opts.tolerance);
    r.iterations = half_state.iterations;
    r.message = "reflection of the half-graph ground state; " + half_state.message;
    r.converged = half_state.converged &&
                  std::abs(r.mass - mu) <= 1e-9 * std::max(1.0, mu);
    return r;
}

} // namespace graphnls
