#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "graphnls/errors.hpp"
#include "graphnls/graph.hpp"

namespace graphnls {

enum class NonlinearitySupport { Localized, Everywhere };
enum class HalflineMode { Truncated, ExactTail };
enum class SupportClass { SupportedOnK, SupportedOnG, Zero };

inline const char* support_class_name(SupportClass s) {
    switch (s) {
        case SupportClass::SupportedOnK: return "SupportedOnK";
        case SupportClass::SupportedOnG: return "SupportedOnG";
        case SupportClass::Zero: return "Zero";
    }
    return "?";
}

/// Per-edge uniform grids. Bounded edges get n_e = max(ceil(l_e/h), 2)
/// intervals (both endpoints included); truncated half-lines use [0, R].
struct GridSpec {
    double h = 1e-2;                  // target step
    HalflineMode halfline_mode = HalflineMode::Truncated;
    double R = 40.0;                  // truncation length, Truncated mode only
    std::vector<int> intervals;       // per edge id; 0 for ExactTail half-lines

    static double default_truncation(double lambda_estimate) {
        return 40.0 / std::sqrt(std::max(lambda_estimate, 0.05));
    }

    static GridSpec make(const MetricGraph& g, double h,
                         HalflineMode mode = HalflineMode::Truncated, double R = 40.0) {
        if (!(h > 0)) throw Error(ErrorCode::BadParams, "grid step must be positive");
        if (mode == HalflineMode::Truncated && !(R > 0))
            throw Error(ErrorCode::BadParams, "truncation length must be positive");
        GridSpec spec;
        spec.h = h;
        spec.halfline_mode = mode;
        spec.R = R;
        spec.intervals.resize(g.edges().size(), 0);
        for (const auto& e : g.edges()) {
            double len = e.halfline ? (mode == HalflineMode::Truncated ? R : 0.0) : e.length.value();
            if (len == 0.0) continue;  // ExactTail half-line: no grid
            int n = static_cast<int>(std::ceil(len / h - 1e-12));
            spec.intervals[static_cast<std::size_t>(e.id)] = std::max(n, 2);
        }
        return spec;
    }

    double edge_step(const MetricGraph& g, int eid) const {
        const Edge& e = g.edge(eid);
        int n = intervals.at(static_cast<std::size_t>(eid));
        if (n == 0) return 0.0;
        double len = e.halfline ? R : e.length.value();
        return len / n;
    }
};

/// Scalar functionals of a field, all derived from the same quadrature sums
/// so that the multiplier identity lambda*mass = potential - kinetic is exact.
struct Functionals {
    double mass = 0.0;       // integral of u^2
    double kinetic = 0.0;    // integral of u'^2
    double potential = 0.0;  // integral of |u|^p over the nonlinearity support
    double energy = 0.0;     // kinetic/2 - potential/p

    double lagrange_multiplier() const {
        if (!(mass > 0)) throw Error(ErrorCode::ZeroMass, "multiplier undefined for zero-mass field");
        return (potential - kinetic) / mass;
    }
};

/// Discretized real-valued H^1 function on a metric graph: per-edge sample
/// vectors sharing vertex values. Half-lines are either truncated with a
/// Dirichlet zero at x = R or represented by the exact exponential tail
/// u(v) e^{-sqrt(lambda) x} (lambda > 0).
class GraphField {
public:
    GraphField(GraphPtr g, GridSpec grid,
               NonlinearitySupport support = NonlinearitySupport::Localized)
        : graph_(std::move(g)), grid_(std::move(grid)), support_(support) {
        if (support_ == NonlinearitySupport::Everywhere &&
            grid_.halfline_mode == HalflineMode::ExactTail)
            throw Error(ErrorCode::BadParams,
                        "ExactTail requires the linear half-line regime (Localized nonlinearity)");
        values_.resize(graph_->edges().size());
        for (const auto& e : graph_->edges())
            values_[static_cast<std::size_t>(e.id)].assign(
                static_cast<std::size_t>(grid_.intervals[static_cast<std::size_t>(e.id)]) + 1, 0.0);
        for (const auto& e : graph_->edges())
            if (grid_.intervals[static_cast<std::size_t>(e.id)] == 0)
                values_[static_cast<std::size_t>(e.id)].clear();  // ExactTail half-line
    }

    const MetricGraph& graph() const { return *graph_; }
    const GraphPtr& graph_ptr() const { return graph_; }
    const GridSpec& grid() const { return grid_; }
    NonlinearitySupport support() const { return support_; }
    HalflineMode halfline_mode() const { return grid_.halfline_mode; }

    std::vector<double>& edge_values(int eid) { return values_[static_cast<std::size_t>(eid)]; }
    const std::vector<double>& edge_values(int eid) const { return values_[static_cast<std::size_t>(eid)]; }

    /// Decay rate parameter for ExactTail half-lines; must be > 0 in that mode.
    void set_tail_lambda(double lam) {
        if (grid_.halfline_mode == HalflineMode::ExactTail && !(lam > 0))
            throw Error(ErrorCode::NegativeLambdaRequested,
                        "exact tails e^{-sqrt(lambda) x} are L^2 only for lambda > 0");
        tail_lambda_ = lam;
    }
    double tail_lambda() const { return tail_lambda_; }

    double vertex_value(const VertexId& v) const {
        for (const auto& e : graph_->edges()) {
            const auto& u = values_[static_cast<std::size_t>(e.id)];
            if (e.from == v) {
                if (!u.empty()) return u.front();
                continue;  // ExactTail half-line carries the value implicitly
            }
            if (!e.halfline && e.to == v && !u.empty()) return u.back();
        }
        throw Error(ErrorCode::BadParams, "vertex '" + v + "' not found");
    }

    void set_vertex_value(const VertexId& v, double val) {
        for (const auto& e : graph_->edges()) {
            auto& u = values_[static_cast<std::size_t>(e.id)];
            if (u.empty()) continue;
            if (e.from == v) u.front() = val;
            if (!e.halfline && e.to == v) u.back() = val;
        }
    }

    /// Largest |u(v)| among ExactTail amplitudes (0 if none).
    double max_tail_amplitude() const {
        double m = 0.0;
        if (grid_.halfline_mode != HalflineMode::ExactTail) return 0.0;
        for (int eid : graph_->halfline_ids())
            m = std::max(m, std::abs(vertex_value(graph_->edge(eid).from)));
        return m;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& u : values_)
            for (double x : u) m = std::max(m, std::abs(x));
        m = std::max(m, max_tail_amplitude());
        return m;
    }

    /// Fills samples from per-edge functions of the edge coordinate.
    void fill(const std::function<double(const Edge&, double)>& f) {
        for (const auto& e : graph_->edges()) {
            auto& u = values_[static_cast<std::size_t>(e.id)];
            if (u.empty()) continue;
            double h = grid_.edge_step(*graph_, e.id);
            for (std::size_t j = 0; j < u.size(); ++j)
                u[j] = f(e, h * static_cast<double>(j));
        }
        enforce_truncation_dirichlet();
    }

    void scale(double c) {
        for (auto& u : values_)
            for (double& x : u) x *= c;
    }

    void enforce_truncation_dirichlet() {
        if (grid_.halfline_mode != HalflineMode::Truncated) return;
        for (int eid : graph_->halfline_ids()) {
            auto& u = values_[static_cast<std::size_t>(eid)];
            if (!u.empty()) u.back() = 0.0;
        }
    }

    /// Maximum vertex-value disagreement between incident edges.
    double continuity_defect() const {
        double d = 0.0;
        for (const auto& v : graph_->vertices()) {
            double ref = 0.0;
            bool have = false;
            for (const auto& [eid, sign] : graph_->incident(v)) {
                const auto& u = values_[static_cast<std::size_t>(eid)];
                if (u.empty()) continue;
                double val = sign > 0 ? u.front() : u.back();
                if (!have) { ref = val; have = true; }
                else d = std::max(d, std::abs(val - ref));
            }
        }
        return d;
    }

    bool kappa_on_edge(int eid) const {
        return support_ == NonlinearitySupport::Everywhere || graph_->edge(eid).is_bounded();
    }

private:
    GraphPtr graph_;
    GridSpec grid_;
    NonlinearitySupport support_;
    double tail_lambda_ = 1.0;
    std::vector<std::vector<double>> values_;
};

// ---------------------------------------------------------------------------
// Functionals: trapezoid mass/potential, staggered (piecewise-linear exact)
// kinetic energy, closed-form tail contributions.
// ---------------------------------------------------------------------------

inline Functionals functionals(const GraphField& f, double p) {
    const MetricGraph& g = f.graph();
    Functionals out;
    for (const auto& e : g.edges()) {
        const auto& u = f.edge_values(e.id);
        if (u.empty()) continue;
        double h = f.grid().edge_step(g, e.id);
        bool kap = f.kappa_on_edge(e.id);
        double m = 0.0, pot = 0.0, kin = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            double w = (j == 0 || j + 1 == u.size()) ? 0.5 * h : h;
            m += w * u[j] * u[j];
            if (kap) pot += w * std::pow(std::abs(u[j]), p);
        }
        for (std::size_t j = 0; j + 1 < u.size(); ++j) {
            double d = u[j + 1] - u[j];
            kin += d * d / h;
        }
        out.mass += m;
        out.potential += pot;
        out.kinetic += kin;
    }
    if (f.halfline_mode() == HalflineMode::ExactTail) {
        double lam = f.tail_lambda();
        double s = std::sqrt(lam);
        for (int eid : g.halfline_ids()) {
            double a = f.vertex_value(g.edge(eid).from);
            out.mass += a * a / (2.0 * s);
            out.kinetic += a * a * s / 2.0;
        }
    }
    out.energy = 0.5 * out.kinetic - out.potential / p;
    return out;
}

inline double mass(const GraphField& f) { return functionals(f, 4.0).mass; }

inline double energy(const GraphField& f, double p) { return functionals(f, p).energy; }

inline double lagrange_multiplier(const GraphField& f, double p) {
    return functionals(f, p).lagrange_multiplier();
}

// ---------------------------------------------------------------------------
// Residuals.
// ---------------------------------------------------------------------------

/// max over interior grid points of |u'' + kappa |u|^{p-2} u - lambda u|,
/// second-order central differences. ExactTail half-lines satisfy u'' =
/// lambda u identically and contribute nothing.
inline double stationary_residual(const GraphField& f, double lambda, double p) {
    const MetricGraph& g = f.graph();
    double worst = 0.0;
    for (const auto& e : g.edges()) {
        const auto& u = f.edge_values(e.id);
        if (u.size() < 3) continue;
        double h = f.grid().edge_step(g, e.id);
        double kap = f.kappa_on_edge(e.id) ? 1.0 : 0.0;
        for (std::size_t j = 1; j + 1 < u.size(); ++j) {
            double d2 = (u[j - 1] - 2.0 * u[j] + u[j + 1]) / (h * h);
            double r = d2 + kap * std::pow(std::abs(u[j]), p - 2.0) * u[j] - lambda * u[j];
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

/// Signed one-sided second-order derivative into the edge at the given end.
inline double one_sided_derivative(const std::vector<double>& u, double h, bool at_start) {
    std::size_t n = u.size();
    if (n < 3) throw Error(ErrorCode::BadParams, "edge grid too coarse for one-sided derivative");
    if (at_start) return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    return (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
}

struct KirchhoffReport {
    std::map<VertexId, double> per_vertex;
    double max_abs = 0.0;
};

/// Signed sum of outgoing derivatives at every vertex, one-sided 3-point
/// stencils; ExactTail half-lines contribute -sqrt(lambda) u(v).
inline KirchhoffReport kirchhoff_residual(const GraphField& f) {
    const MetricGraph& g = f.graph();
    KirchhoffReport rep;
    for (const auto& v : g.vertices()) {
        double sum = 0.0;
        for (const auto& [eid, sign] : g.incident(v)) {
            const auto& u = f.edge_values(eid);
            if (u.empty()) {
                // ExactTail: du/dx(v) of u(v) e^{-sqrt(lambda) x}
                sum += -std::sqrt(f.tail_lambda()) * f.vertex_value(v);
                continue;
            }
            double h = f.grid().edge_step(g, eid);
            if (sign > 0) sum += one_sided_derivative(u, h, true);
            else sum -= one_sided_derivative(u, h, false);
        }
        rep.per_vertex[v] = sum;
        rep.max_abs = std::max(rep.max_abs, std::abs(sum));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Support classification.
// ---------------------------------------------------------------------------

inline SupportClass support_classification(const GraphField& f, double tol) {
    const MetricGraph& g = f.graph();
    double overall = f.max_abs();
    if (overall < tol) return SupportClass::Zero;
    double on_halflines = f.max_tail_amplitude();
    for (int eid : g.halfline_ids()) {
        const auto& u = f.edge_values(eid);
        for (double x : u) on_halflines = std::max(on_halflines, std::abs(x));
    }
    if (on_halflines < tol) return SupportClass::SupportedOnK;
    return SupportClass::SupportedOnG;
}

// ---------------------------------------------------------------------------
// Cell-exact integrals of the piecewise-linear interpolant. These make the
// Gagliardo-Nirenberg checks rigorous for every discrete field and the
// rearrangement identities exact.
// ---------------------------------------------------------------------------

namespace detail {

/// integral over one cell of |linear through (0,a),(h,b)|^p.
inline double cell_abs_pow(double a, double b, double h, double p) {
    auto ramp = [p](double lo, double hi, double w) {
        // integral of (lo + (hi-lo) t/w)^p over [0,w], lo,hi >= 0
        if (w <= 0) return 0.0;
        double d = hi - lo;
        if (std::abs(d) < 1e-300) return w * std::pow(lo, p);
        return w * (std::pow(hi, p + 1.0) - std::pow(lo, p + 1.0)) / ((p + 1.0) * d);
    };
    if (a >= 0 && b >= 0) return ramp(a, b, h);
    if (a <= 0 && b <= 0) return ramp(-a, -b, h);
    double cross = h * std::abs(a) / (std::abs(a) + std::abs(b));
    return ramp(std::abs(a), 0.0, cross) + ramp(0.0, std::abs(b), h - cross);
}

} // namespace detail

/// integral of |u|^p with the P1 interpolant integrated exactly per cell
/// (plus closed-form ExactTail contributions).
inline double p1_lp_pow(const GraphField& f, double p, bool core_only = false) {
    const MetricGraph& g = f.graph();
    double total = 0.0;
    for (const auto& e : g.edges()) {
        if (core_only && !e.is_bounded()) continue;
        const auto& u = f.edge_values(e.id);
        if (u.size() < 2) continue;
        double h = f.grid().edge_step(g, e.id);
        for (std::size_t j = 0; j + 1 < u.size(); ++j)
            total += detail::cell_abs_pow(u[j], u[j + 1], h, p);
    }
    if (!core_only && f.halfline_mode() == HalflineMode::ExactTail) {
        double s = std::sqrt(f.tail_lambda());
        for (int eid : g.halfline_ids()) {
            double a = std::abs(f.vertex_value(g.edge(eid).from));
            total += std::pow(a, p) / (p * s);
        }
    }
    return total;
}

/// integral of u'^2, exact for the P1 interpolant (same staggered sum as the
/// kinetic functional), plus exact tails.
inline double p1_kinetic(const GraphField& f) {
    const MetricGraph& g = f.graph();
    double total = 0.0;
    for (const auto& e : g.edges()) {
        const auto& u = f.edge_values(e.id);
        if (u.size() < 2) continue;
        double h = f.grid().edge_step(g, e.id);
        for (std::size_t j = 0; j + 1 < u.size(); ++j) {
            double d = u[j + 1] - u[j];
            total += d * d / h;
        }
    }
    if (f.halfline_mode() == HalflineMode::ExactTail) {
        double s = std::sqrt(f.tail_lambda());
        for (int eid : g.halfline_ids()) {
            double a = f.vertex_value(g.edge(eid).from);
            total += a * a * s / 2.0;
        }
    }
    return total;
}

struct GnCheckResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    double relative_margin = 0.0;  // (rhs - lhs)/rhs
};

/// Gagliardo-Nirenberg check: ||u||_p^p <= C_p ||u||_2^{p/2+1} ||u'||_2^{p/2-1}
/// for finite p, ||u||_inf <= C_inf ||u||_2^{1/2} ||u'||_2^{1/2} for p = inf.
/// Both sides use cell-exact P1 integrals, so the inequality is rigorous for
/// the interpolant itself.
inline GnCheckResult gn_check(const GraphField& f, double p, double constant) {
    GnCheckResult r;
    double m = p1_lp_pow(f, 2.0);
    double kin = p1_kinetic(f);
    if (std::isinf(p)) {
        r.lhs = f.max_abs();
        r.rhs = constant * std::sqrt(std::sqrt(m)) * std::sqrt(std::sqrt(kin));
    } else {
        if (p < 2.0) throw Error(ErrorCode::POutOfRange, "gn_check needs p in [2, inf]");
        r.lhs = p1_lp_pow(f, p);
        r.rhs = constant * std::pow(m, 0.25 * (p + 2.0)) * std::pow(kin, 0.25 * (p - 2.0));
    }
    r.relative_margin = r.rhs > 0 ? (r.rhs - r.lhs) / r.rhs : (r.lhs == 0.0 ? 0.0 : -1.0);
    r.satisfied = r.lhs <= r.rhs * (1.0 + 1e-6) || (r.lhs == 0.0 && r.rhs == 0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Deterministic random fields for property tests: up to five Fourier modes
// per edge, conformed to shared vertex values by affine correction.
// ---------------------------------------------------------------------------

inline GraphField random_field(const GraphPtr& gp, const GridSpec& grid,
                               NonlinearitySupport support, std::uint64_t seed) {
    const MetricGraph& g = *gp;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::map<VertexId, double> vval;
    for (const auto& v : g.vertices()) vval[v] = unif(rng);

    GraphField f(gp, grid, support);
    for (const auto& e : g.edges()) {
        auto& u = f.edge_values(e.id);
        if (u.empty()) continue;
        double h = f.grid().edge_step(g, e.id);
        double len = h * static_cast<double>(u.size() - 1);
        int modes = 1 + static_cast<int>(rng() % 5);
        std::vector<double> amp_s(static_cast<std::size_t>(modes)), amp_c(static_cast<std::size_t>(modes));
        for (int k = 0; k < modes; ++k) {
            amp_s[static_cast<std::size_t>(k)] = unif(rng) / (1.0 + k);
            amp_c[static_cast<std::size_t>(k)] = unif(rng) / (1.0 + k);
        }
        double target0 = vval[e.from];
        double target1 = e.halfline ? 0.0 : vval[e.to];
        auto base = [&](double x) {
            double s = 0.0;
            for (int k = 0; k < modes; ++k) {
                double w = (k + 1) * M_PI / len;
                s += amp_s[static_cast<std::size_t>(k)] * std::sin(w * x) +
                     amp_c[static_cast<std::size_t>(k)] * std::cos(w * x);
            }
            return s;
        };
        double b0 = base(0.0), b1 = base(len);
        for (std::size_t j = 0; j < u.size(); ++j) {
            double x = h * static_cast<double>(j);
            double t = x / len;
            u[j] = base(x) + (target0 - b0) * (1.0 - t) + (target1 - b1) * t;
        }
    }
    f.enforce_truncation_dirichlet();
    return f;
}

/// Rescales to the requested mass (no-op direction preserved).
inline void project_to_mass(GraphField& f, double mu, double p) {
    double m = functionals(f, p).mass;
    if (!(m > 0)) throw Error(ErrorCode::ZeroMass, "cannot project a zero field to positive mass");
    f.scale(std::sqrt(mu / m));
}

} // namespace graphnls
