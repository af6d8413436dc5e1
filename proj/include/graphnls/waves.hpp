#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphnls/errors.hpp"
#include "graphnls/ode.hpp"

namespace graphnls {

/// phi'' = lambda*phi - |phi|^{p-2} phi, the stationary profile equation.
inline OdeRhs wave_rhs(double p, double lambda) {
    return [p, lambda](double, const OdeState& y) -> OdeState {
        double phi = y[0];
        return {y[1], lambda * phi - std::pow(std::abs(phi), p - 2.0) * phi};
    };
}

/// Time of the first return of phi to zero when shooting from (0, s).
/// For lambda > 0 with s near zero the trajectory hugs the homoclinic loop
/// and may not re-cross within the horizon; that is reported as NoReturn.
inline double half_period(double s, double p, double lambda,
                          double horizon = 0.0, double rtol = 1e-12) {
    if (!(s > 0)) throw Error(ErrorCode::BadParams, "half_period needs slope s > 0");
    if (!(p > 2)) throw Error(ErrorCode::POutOfRange, "half_period needs p > 2");
    if (horizon <= 0.0) {
        // lambda < 0: bounded by the linear period; lambda > 0: near-homoclinic
        // passage grows like log(1/s); lambda = 0: pure power scaling
        if (lambda < 0) {
            horizon = std::max(50.0, 20.0 * M_PI / std::sqrt(-lambda));
        } else if (lambda > 0) {
            horizon = 50.0 + 8.0 * (1.0 + std::abs(std::log(s))) / std::sqrt(lambda);
        } else {
            horizon = std::max(50.0, 20.0 * std::pow(s, -(p - 2.0) / p));
        }
    }
    Dopri5 ode(wave_rhs(p, lambda), rtol, rtol * 1e-2);
    auto ev = ode.integrate_until(0.0, {0.0, s}, horizon,
                                  [](const OdeState& y) { return y[0]; });
    if (!ev.found)
        throw Error(ErrorCode::NoReturn,
                    "phi failed to re-cross zero within horizon " + std::to_string(horizon) +
                    " (s=" + std::to_string(s) + ", lambda=" + std::to_string(lambda) + ")");
    return ev.x;
}

/// Odd periodic solution of the profile equation: one arch on [0, T] with
/// phi(0)=phi(T)=0, extended oddly. Minimal period L_min = 2T; when embedded
/// k times its total span is k*L_min.
class PeriodicWave {
public:
    PeriodicWave(double p, double lambda, double slope, double half_period, int repetitions = 1)
        : p_(p), lambda_(lambda), slope_(slope), T_(half_period), k_(repetitions),
          ode_(wave_rhs(p, lambda), 1e-12, 1e-14) {}

    double p() const { return p_; }
    double lambda() const { return lambda_; }
    double slope() const { return slope_; }
    double half_period_length() const { return T_; }
    double minimal_period() const { return 2.0 * T_; }
    int repetitions() const { return k_; }

    /// First critical point of phi after 0 (the arch maximum), located from
    /// the integrator; equals T/2 up to solver tolerance.
    double xbar() const {
        if (!xbar_) {
            auto ev = ode_.integrate_until(0.0, {0.0, slope_}, 2.0 * T_,
                                           [](const OdeState& y) { return y[1]; });
            if (!ev.found) throw Error(ErrorCode::NoReturn, "no critical point found");
            xbar_ = ev.x;
        }
        return *xbar_;
    }

    double amplitude() const { return eval(xbar()).first; }

    /// (phi, phi') at any x, using oddness about every zero and periodicity.
    std::pair<double, double> eval(double x) const {
        double Lmin = 2.0 * T_;
        double r = std::fmod(x, Lmin);
        if (r < 0) r += Lmin;
        if (r > T_) {
            // second half of the period is the mirrored negative arch
            auto [phi, dphi] = arch(Lmin - r);
            return {-phi, dphi};
        }
        return arch(r);
    }

    /// Batch evaluation; integrates once through the arch visiting all folds.
    std::vector<std::pair<double, double>> eval_many(const std::vector<double>& xs) const {
        struct Fold { double r; bool mirror; std::size_t idx; };
        std::vector<Fold> folds(xs.size());
        double Lmin = 2.0 * T_;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double r = std::fmod(xs[i], Lmin);
            if (r < 0) r += Lmin;
            bool mirror = r > T_;
            if (mirror) r = Lmin - r;
            folds[i] = {std::min(r, T_), mirror, i};
        }
        std::vector<std::size_t> order(folds.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&folds](std::size_t a, std::size_t b) { return folds[a].r < folds[b].r; });
        std::vector<std::pair<double, double>> out(xs.size());
        Dopri5::Trace t{0.0, {0.0, slope_}};
        for (std::size_t oi : order) {
            const Fold& fd = folds[oi];
            if (fd.r > t.x) t = ode_.integrate_to(t.x, t.y, fd.r);
            out[fd.idx] = fd.mirror ? std::make_pair(-t.y[0], t.y[1])
                                    : std::make_pair(t.y[0], t.y[1]);
        }
        return out;
    }

    /// Uniform samples of one minimal period (n intervals).
    std::vector<double> sample_period(int n) const {
        std::vector<double> xs(static_cast<std::size_t>(n) + 1);
        for (int j = 0; j <= n; ++j) xs[static_cast<std::size_t>(j)] = minimal_period() * j / n;
        auto ev = eval_many(xs);
        std::vector<double> out(ev.size());
        for (std::size_t i = 0; i < ev.size(); ++i) out[i] = ev[i].first;
        return out;
    }

    /// integral of phi^2 over one minimal period, composite Simpson on dense
    /// integrator samples.
    double period_mass(int n = 4096) const {
        auto phi = sample_period(n);
        double h = minimal_period() / n;
        double simpson = phi.front() * phi.front() + phi.back() * phi.back();
        for (int j = 1; j < n; ++j)
            simpson += phi[static_cast<std::size_t>(j)] * phi[static_cast<std::size_t>(j)] *
                       (j % 2 == 1 ? 4.0 : 2.0);
        return simpson * h / 3.0;
    }

private:
    std::pair<double, double> arch(double r) const {
        auto t = ode_.integrate_to(0.0, {0.0, slope_}, std::min(r, T_));
        return {t.y[0], t.y[1]};
    }

    double p_;
    double lambda_;
    double slope_;
    double T_;
    int k_;
    mutable std::optional<double> xbar_;
    Dopri5 ode_;
};

/// Smallest k such that a half-period of L/(2k) is attainable. For lambda < 0
/// the small-amplitude bound forces L/(2k) < pi/sqrt(-lambda) strictly.
inline int minimal_repetitions(double L, double lambda) {
    if (lambda >= 0) return 1;
    return static_cast<int>(std::floor(L * std::sqrt(-lambda) / (2.0 * M_PI))) + 1;
}

/// Finds the odd L-periodic solution: bisection for s with T(s) = L/(2k) on
/// the monotone-decreasing branch of the half-period map, k minimal feasible.
inline PeriodicWave periodic_odd_solution(double L, double p, double lambda,
                                          double rtol = 1e-12) {
    if (!(L > 0)) throw Error(ErrorCode::BadParams, "period L must be positive");
    int k = minimal_repetitions(L, lambda);
    double target = L / (2.0 * k);

    auto T_of = [&](double s) { return half_period(s, p, lambda, 0.0, rtol); };

    // bracket: expand until T(s_hi) < target <= T(s_lo); T decreases in s
    double s_lo = 1.0, s_hi = 1.0;
    double t_mid = T_of(1.0);
    int guard = 0;
    double last = t_mid;
    bool monotone_ok = true;
    if (t_mid > target) {
        while (T_of(s_hi) > target) {
            double t_here = T_of(s_hi);
            if (t_here > last + 1e-12 * (1.0 + last)) monotone_ok = false;
            last = t_here;
            s_hi *= 4.0;
            if (++guard > 60)
                throw Error(ErrorCode::BisectionFailure,
                            "no slope bracket: T stayed above " + std::to_string(target) +
                            " up to s=" + std::to_string(s_hi));
        }
    } else {
        while (true) {
            double t_here;
            try {
                t_here = T_of(s_lo);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::NoReturn && lambda > 0)
                    throw Error(ErrorCode::BisectionFailure,
                                std::string("near-homoclinic slope reached while bracketing: ") + e.what());
                throw;
            }
            if (t_here >= target) break;
            if (t_here < last - 1e-12 * (1.0 + last)) { /* still decreasing */ }
            last = t_here;
            s_lo /= 4.0;
            if (++guard > 60)
                throw Error(ErrorCode::BisectionFailure,
                            "no slope bracket: T stayed below " + std::to_string(target) +
                            " down to s=" + std::to_string(s_lo));
        }
    }
    if (!monotone_ok) {
        // fall back to a scan for a valid bracket
        double best_lo = s_lo, best_hi = s_hi;
        double s = s_lo;
        double t_prev = T_of(s);
        for (int i = 0; i < 200 && s < s_hi; ++i) {
            double s_next = s * 1.2;
            double t_next = T_of(s_next);
            if ((t_prev - target) * (t_next - target) <= 0) { best_lo = s; best_hi = s_next; break; }
            s = s_next;
            t_prev = t_next;
        }
        s_lo = best_lo;
        s_hi = best_hi;
    }

    double lo = s_lo, hi = s_hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double t_here = T_of(mid);
        if (std::abs(t_here - target) <= 1e-14 * (1.0 + target)) { lo = hi = mid; break; }
        if (t_here > target) lo = mid;
        else hi = mid;
        if ((hi - lo) <= 1e-15 * std::max(1.0, lo)) break;
    }
    double s = 0.5 * (lo + hi);
    double T = T_of(s);
    if (std::abs(T - target) > 1e-9 * (1.0 + target))
        throw Error(ErrorCode::BisectionFailure,
                    "bisection stalled: |T - target| = " + std::to_string(std::abs(T - target)) +
                    " at s = " + std::to_string(s) + " (bracket [" + std::to_string(s_lo) +
                    ", " + std::to_string(s_hi) + "])");
    return PeriodicWave(p, lambda, s, target, k);
}

} // namespace graphnls
