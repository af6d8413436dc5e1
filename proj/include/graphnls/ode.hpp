#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "graphnls/errors.hpp"

namespace graphnls {

using OdeState = std::array<double, 2>;
using OdeRhs = std::function<OdeState(double, const OdeState&)>;

/// Adaptive Dormand-Prince 5(4) integrator for planar systems, with exact
/// stepping to requested output points and bisection-refined event location.
class Dopri5 {
public:
    explicit Dopri5(OdeRhs rhs, double rtol = 1e-12, double atol = 1e-14)
        : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

    struct Trace {
        double x = 0.0;
        OdeState y{0.0, 0.0};
    };

    /// Integrates from (x, y) to x_end, never stepping past it.
    Trace integrate_to(double x, OdeState y, double x_end) const {
        Trace t{x, y};
        if (x_end == x) return t;
        double h = initial_step(x, y, x_end - x);
        long steps = 0;
        while (t.x < x_end) {
            if (++steps > max_steps_)
                throw Error(ErrorCode::BadParams, "ODE step budget exhausted");
            h = std::min(h, x_end - t.x);
            h = attempt(t, h);
        }
        return t;
    }

    /// Integrates forward until `stop(y)` changes sign from its value just
    /// after start (or x reaches horizon). Returns the located event; sets
    /// `found=false` when the horizon is hit first.
    struct EventResult {
        bool found = false;
        double x = 0.0;
        OdeState y{0.0, 0.0};
    };

    EventResult integrate_until(double x, OdeState y, double horizon,
                                const std::function<double(const OdeState&)>& stop,
                                double arm_after = 0.0) const {
        Trace t{x, y};
        double h = initial_step(x, y, horizon - x);
        double prev_g = stop(t.y);
        bool armed = arm_after <= 0.0 && prev_g != 0.0;
        long steps = 0;
        while (t.x < horizon) {
            if (++steps > max_steps_)
                throw Error(ErrorCode::BadParams, "ODE step budget exhausted");
            Trace prev = t;
            h = std::min(h, horizon - t.x);
            h = attempt(t, h);
            double g = stop(t.y);
            if (!armed) {
                if (t.x >= arm_after && g != 0.0) { armed = true; prev_g = g; }
                continue;
            }
            if (g == 0.0 || (g > 0) != (prev_g > 0)) {
                EventResult ev;
                ev.found = true;
                locate(prev, t, stop, prev_g, ev);
                return ev;
            }
            prev_g = g;
        }
        return {};
    }

private:
    double initial_step(double x, const OdeState& y, double span) const {
        OdeState f = rhs_(x, y);
        double scale = std::max({std::abs(y[0]), std::abs(y[1]), std::abs(f[0]), std::abs(f[1]), 1e-8});
        return std::min(std::max(1e-8, 1e-2 / scale), std::abs(span));
    }

    /// One accepted adaptive step; updates t in place and returns the next h.
    double attempt(Trace& t, double h) const {
        for (int tries = 0; tries < 64; ++tries) {
            auto [y5, err] = step(t.x, t.y, h);
            double tol = atol_ + rtol_ * std::max({std::abs(t.y[0]), std::abs(t.y[1]),
                                                   std::abs(y5[0]), std::abs(y5[1])});
            if (err <= tol || h <= 1e-14 * std::max(1.0, std::abs(t.x))) {
                t.x += h;
                t.y = y5;
                double grow = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
                return h * std::clamp(grow, 0.2, 5.0);
            }
            h *= std::max(0.2, 0.9 * std::pow(tol / err, 0.2));
        }
        throw Error(ErrorCode::BadParams, "ODE step size underflow");
    }

    std::pair<OdeState, double> step(double x, const OdeState& y, double h) const {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                                e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

        auto axpy = [&y, h](auto... terms) {
            OdeState out = y;
            ((out[0] += h * terms.first * terms.second[0],
              out[1] += h * terms.first * terms.second[1]), ...);
            return out;
        };
        using P = std::pair<double, const OdeState&>;
        OdeState k1 = rhs_(x, y);
        OdeState k2 = rhs_(x + h / 5, axpy(P{a21, k1}));
        OdeState k3 = rhs_(x + 3 * h / 10, axpy(P{a31, k1}, P{a32, k2}));
        OdeState k4 = rhs_(x + 4 * h / 5, axpy(P{a41, k1}, P{a42, k2}, P{a43, k3}));
        OdeState k5 = rhs_(x + 8 * h / 9, axpy(P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4}));
        OdeState k6 = rhs_(x + h, axpy(P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5}));
        OdeState y5 = axpy(P{b1, k1}, P{b3, k3}, P{b4, k4}, P{b5, k5}, P{b6, k6});
        OdeState k7 = rhs_(x + h, y5);
        OdeState y4 = axpy(P{e1, k1}, P{e3, k3}, P{e4, k4}, P{e5, k5}, P{e6, k6}, P{e7, k7});
        double err = std::max(std::abs(y5[0] - y4[0]), std::abs(y5[1] - y4[1]));
        return {y5, err};
    }

    /// Bisection on re-integrated evaluations inside the bracketing step;
    /// accurate to the trajectory the integrator actually follows.
    void locate(const Trace& lo, const Trace& hi,
                const std::function<double(const OdeState&)>& stop, double g_lo,
                EventResult& ev) const {
        double a = lo.x, b = hi.x;
        OdeState y_at_a = lo.y;
        double ga = g_lo;
        for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
            double mid = 0.5 * (a + b);
            Trace tm = integrate_to(a, y_at_a, mid);
            double gm = stop(tm.y);
            if (gm == 0.0) { a = mid; y_at_a = tm.y; break; }
            if ((gm > 0) == (ga > 0)) {
                a = mid;
                y_at_a = tm.y;
                ga = gm;
            } else {
                b = mid;
            }
        }
        ev.x = a;
        ev.y = y_at_a;
    }

    OdeRhs rhs_;
    double rtol_;
    double atol_;
    long max_steps_ = 80'000'000;
};

} // namespace graphnls
