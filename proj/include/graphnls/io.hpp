#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "graphnls/field.hpp"
#include "graphnls/graph.hpp"
#include "graphnls/solver.hpp"
#include "graphnls/thresholds.hpp"

namespace graphnls {

/// All floating output is printed with 12 significant digits so tolerances
/// can be audited from the files.
inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Field CSV: one row per sample, columns edge_id, x, u. Exact tails are
/// described in the sidecar, not sampled.
inline std::string field_to_csv(const GraphField& f) {
    std::ostringstream os;
    os << "edge_id,x,u\n";
    const MetricGraph& g = f.graph();
    for (const auto& e : g.edges()) {
        const auto& u = f.edge_values(e.id);
        double h = f.grid().edge_step(g, e.id);
        for (std::size_t j = 0; j < u.size(); ++j)
            os << e.id << "," << fmt12(h * static_cast<double>(j)) << "," << fmt12(u[j]) << "\n";
    }
    return os.str();
}

inline nlohmann::json field_sidecar(const GraphField& f) {
    nlohmann::json j;
    j["h"] = f.grid().h;
    j["halfline_mode"] =
        f.halfline_mode() == HalflineMode::Truncated ? "truncated" : "exact-tail";
    if (f.halfline_mode() == HalflineMode::Truncated) j["R"] = f.grid().R;
    else j["tail_lambda"] = f.tail_lambda();
    j["nonlinearity"] =
        f.support() == NonlinearitySupport::Localized ? "localized" : "everywhere";
    j["intervals"] = f.grid().intervals;
    return j;
}

inline nlohmann::json result_to_json(const BoundStateResult& r, double p) {
    nlohmann::json j;
    j["lambda"] = r.lambda;
    j["mass"] = r.mass;
    j["energy"] = r.energy;
    j["p"] = p;
    j["stationary_residual_max"] = r.stationary_residual_max;
    j["kirchhoff_residual_max"] = r.kirchhoff_residual_max;
    j["support"] = support_class_name(r.support);
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["message"] = r.message;
    return j;
}

inline nlohmann::json regime_to_json(const RegimeReport& r) {
    nlohmann::json j;
    j["p"] = r.p;
    j["mu"] = r.mu;
    j["ell"] = r.ell;
    j["m_star"] = r.m_star;
    if (!std::isnan(r.c_star)) j["C_star"] = r.c_star;
    if (!std::isnan(r.c_double_star)) j["C_double_star"] = r.c_double_star;
    j["tree"] = r.tree;
    j["pendants"] = r.pendants;
    j["no_bound_lambda_nonneg"] = r.no_bound_lambda_nonneg;
    j["no_lambda_nonpos"] = r.no_lambda_nonpos;
    j["no_bound_any"] = r.no_bound_any;
    j["no_ground"] = r.no_ground;
    j["notes"] = r.notes;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::BadParams, "cannot write " + path);
    out << content;
}

} // namespace graphnls
