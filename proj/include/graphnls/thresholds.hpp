#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "graphnls/errors.hpp"
#include "graphnls/field.hpp"
#include "graphnls/gn_constants.hpp"
#include "graphnls/graph.hpp"

namespace graphnls {

/// Scale-invariant mass m* = l * mu^{(p-2)/(6-p)}.
inline double scale_invariant_mass(double ell, double mu, double p) {
    if (!(p > 2.0 && p < 6.0)) throw Error(ErrorCode::POutOfRange, "m* needs p in (2,6)");
    if (!(ell > 0) || !(mu > 0)) throw Error(ErrorCode::InvalidProblem, "m* needs ell, mu > 0");
    return ell * std::pow(mu, (p - 2.0) / (6.0 - p));
}

/// C* = C_inf^{-p} C_p^{(4-p)/(6-p)}: below it there are no bound states
/// with lambda >= 0, hence none supported on the whole graph. Exactly 1/4 at
/// p = 4 since C_inf^{-4} = 2^{-2} and the C_p exponent vanishes.
inline double bound_state_threshold(double p) {
    if (!(p >= 4.0 && p < 6.0))
        throw Error(ErrorCode::POutOfRange, "bound-state threshold defined for p in [4,6)");
    double c_inf_pow = std::exp2(-p / 2.0);  // C_inf^{-p} with C_inf = sqrt(2)
    double c_p = sharp_gn_constants(p).c_p;
    return c_inf_pow * std::pow(c_p, (4.0 - p) / (6.0 - p));
}

/// C** = (p/2)^{2/(6-p)} C*: below it there is no ground state. Exactly 1/2
/// at p = 4.
inline double ground_state_threshold(double p) {
    if (!(p >= 4.0 && p < 6.0))
        throw Error(ErrorCode::POutOfRange, "ground-state threshold defined for p in [4,6)");
    return std::pow(p / 2.0, 2.0 / (6.0 - p)) * bound_state_threshold(p);
}

struct Lemma31Report {
    bool alt_ok = false;       // kinetic <= C_p^{4/(6-p)} mu^{(p+2)/(6-p)}
    bool bas_ok = false;       // kinetic^{(p-4)/4} >= C_inf^{-p} / (l mu^{p/4})
    double alt_lhs = 0.0, alt_rhs = 0.0;
    double bas_lhs = 0.0, bas_rhs = 0.0;
};

/// The two kinetic-energy estimates every bound state with lambda >= 0 must
/// satisfy (p in [4,6)).
inline Lemma31Report lemma31_check(double kinetic, double mu, double ell, double lambda, double p) {
    if (lambda < 0)
        throw Error(ErrorCode::InvalidProblem,
                    "LambdaNegative: the lemma applies to bound states with lambda >= 0");
    if (!(p >= 4.0 && p < 6.0))
        throw Error(ErrorCode::POutOfRange, "lemma check defined for p in [4,6)");
    Lemma31Report rep;
    double c_p = sharp_gn_constants(p).c_p;
    rep.alt_lhs = kinetic;
    rep.alt_rhs = std::pow(c_p, 4.0 / (6.0 - p)) * std::pow(mu, (p + 2.0) / (6.0 - p));
    rep.alt_ok = rep.alt_lhs <= rep.alt_rhs * (1.0 + 1e-9);
    rep.bas_lhs = std::pow(kinetic, (p - 4.0) / 4.0);
    rep.bas_rhs = std::exp2(-p / 2.0) / (ell * std::pow(mu, p / 4.0));
    rep.bas_ok = rep.bas_lhs >= rep.bas_rhs * (1.0 - 1e-9);
    return rep;
}

/// Existence/nonexistence verdicts the theorems yield for (graph, p, mu).
struct RegimeReport {
    double p = 0.0;
    double mu = 0.0;
    double ell = 0.0;
    double m_star = 0.0;
    double c_star = std::numeric_limits<double>::quiet_NaN();
    double c_double_star = std::numeric_limits<double>::quiet_NaN();
    bool tree = false;
    int pendants = 0;
    bool no_bound_lambda_nonneg = false;  // m* < C*, p in [4,6)
    bool no_lambda_nonpos = false;        // tree with at most one pendant
    bool no_bound_any = false;            // conjunction of the two
    bool no_ground = false;               // m* < C**, p in [4,6)
    std::vector<std::string> notes;
};

inline RegimeReport classify_regime(const MetricGraph& g, double p, double mu) {
    if (!(p > 2.0 && p < 6.0)) throw Error(ErrorCode::InvalidProblem, "classification needs p in (2,6)");
    if (!(mu > 0)) throw Error(ErrorCode::InvalidProblem, "classification needs mu > 0");
    if (!g.has_halfline()) throw Error(ErrorCode::InvalidProblem, "graph must be noncompact");
    if (core_is_empty(g)) throw Error(ErrorCode::InvalidProblem, "compact core must be nonempty");

    RegimeReport r;
    r.p = p;
    r.mu = mu;
    r.ell = core_length_value(g);
    r.m_star = scale_invariant_mass(r.ell, mu, p);
    r.tree = is_tree(g);
    r.pendants = pendant_count(g);
    r.no_lambda_nonpos = r.tree && r.pendants <= 1;
    if (r.no_lambda_nonpos)
        r.notes.push_back("tree with at most one pendant: no bound state with lambda <= 0, any p > 2, any mu");
    if (p >= 4.0) {
        r.c_star = bound_state_threshold(p);
        r.c_double_star = ground_state_threshold(p);
        r.no_bound_lambda_nonneg = r.m_star < r.c_star;
        r.no_ground = r.m_star < r.c_double_star;
        if (r.no_bound_lambda_nonneg)
            r.notes.push_back("m* < C*: no bound state with lambda >= 0, hence none supported on G");
        if (r.no_ground)
            r.notes.push_back("m* < C**: no ground state of this mass");
        r.notes.push_back("p in [4,6): a ground state exists for mu large (not decided by thresholds)");
    } else {
        r.notes.push_back("p in (2,4): a ground state exists for every mu");
    }
    r.notes.push_back("p in (2,6): many bound states exist for mu large (not decided by thresholds)");
    r.no_bound_any = r.no_bound_lambda_nonneg && r.no_lambda_nonpos;
    if (r.no_bound_any)
        r.notes.push_back("tree with <=1 pendant and m* < C*: no bound state of this mass at all");
    return r;
}

} // namespace graphnls
