#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphnls/errors.hpp"
#include "graphnls/rational.hpp"

namespace graphnls {

using VertexId = std::string;

/// Length of a bounded edge. Exact rationals are the default; a length may be
/// marked irrational (value kept as double) to model incommensurable cases,
/// in which case gcd-based queries treat it as incomparable.
struct EdgeLength {
    std::optional<Rational> exact;
    double approx = 0.0;

    static EdgeLength rational(const Rational& r) { return {r, r.value()}; }
    static EdgeLength irrational(double v) { return {std::nullopt, v}; }

    bool is_exact() const { return exact.has_value(); }
    double value() const { return approx; }
};

struct Edge {
    int id = -1;
    VertexId from;
    VertexId to;          // empty for half-lines; their free end is an implicit infinity marker
    bool halfline = false;
    EdgeLength length;    // ignored for half-lines

    bool is_bounded() const { return !halfline; }
    bool is_selfloop() const { return !halfline && from == to; }
};

struct CommensurableCycle {
    std::vector<int> edges;  // edge ids around the cycle, consecutive
    Rational unit;           // the largest L with every cycle length an integer multiple of L
    std::int64_t k = 0;      // sum of the multiplicities, so the cycle has total length k*L
};

/// Connected metric multigraph: bounded edges carry exact rational lengths,
/// half-lines have a single finite endpoint. Immutable after construction.
class MetricGraph {
public:
    MetricGraph(std::vector<VertexId> vertices, std::vector<Edge> edges)
        : vertices_(std::move(vertices)), edges_(std::move(edges)) {
        validate();
    }

    const std::vector<VertexId>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int id) const { return edges_.at(static_cast<std::size_t>(id)); }

    /// Degree counts edge endpoints at v; a self-loop contributes 2, a
    /// half-line 1 (its infinity marker is not a vertex).
    int degree(const VertexId& v) const {
        int d = 0;
        for (const auto& e : edges_) {
            if (e.from == v) ++d;
            if (!e.halfline && e.to == v) ++d;
        }
        return d;
    }

    bool has_halfline() const {
        return std::any_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.halfline; });
    }

    std::vector<int> bounded_edge_ids() const {
        std::vector<int> ids;
        for (const auto& e : edges_)
            if (e.is_bounded()) ids.push_back(e.id);
        return ids;
    }

    std::vector<int> halfline_ids() const {
        std::vector<int> ids;
        for (const auto& e : edges_)
            if (e.halfline) ids.push_back(e.id);
        return ids;
    }

    /// Edges incident at v, each with the sign of the Kirchhoff derivative
    /// convention: +1 when the edge coordinate starts at v, -1 when it ends
    /// there. A self-loop appears twice.
    std::vector<std::pair<int, int>> incident(const VertexId& v) const {
        std::vector<std::pair<int, int>> out;
        for (const auto& e : edges_) {
            if (e.from == v) out.emplace_back(e.id, +1);
            if (!e.halfline && e.to == v) out.emplace_back(e.id, -1);
        }
        return out;
    }

    bool all_lengths_exact() const {
        return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) {
            return e.halfline || e.length.is_exact();
        });
    }

    MetricGraph scaled(const Rational& theta) const {
        if (!theta.is_positive()) throw Error(ErrorCode::BadParams, "scale factor must be positive");
        std::vector<Edge> es = edges_;
        for (auto& e : es) {
            if (e.halfline) continue;
            if (!e.length.is_exact())
                throw Error(ErrorCode::BadParams, "cannot rationally scale an irrational length");
            e.length = EdgeLength::rational(*e.length.exact * theta);
        }
        return MetricGraph(vertices_, std::move(es));
    }

    MetricGraph scaled_real(double factor) const {
        if (!(factor > 0)) throw Error(ErrorCode::BadParams, "scale factor must be positive");
        std::vector<Edge> es = edges_;
        for (auto& e : es) {
            if (e.halfline) continue;
            e.length = EdgeLength::irrational(e.length.value() * factor);
        }
        return MetricGraph(vertices_, std::move(es));
    }

private:
    void validate() {
        std::set<VertexId> vs(vertices_.begin(), vertices_.end());
        if (vs.size() != vertices_.size())
            throw Error(ErrorCode::BadParams, "duplicate vertex identifiers");
        if (vertices_.empty()) throw Error(ErrorCode::BadParams, "graph needs at least one vertex");
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            Edge& e = edges_[i];
            e.id = static_cast<int>(i);
            if (!vs.count(e.from))
                throw Error(ErrorCode::BadParams, "edge endpoint '" + e.from + "' is not a vertex");
            if (e.halfline) {
                e.to.clear();
            } else {
                if (!vs.count(e.to))
                    throw Error(ErrorCode::BadParams, "edge endpoint '" + e.to + "' is not a vertex");
                if (!(e.length.value() > 0))
                    throw Error(ErrorCode::BadParams, "bounded edge must have positive length");
                if (e.length.is_exact() && !e.length.exact->is_positive())
                    throw Error(ErrorCode::BadParams, "bounded edge must have positive length");
            }
        }
        auto comps = components();
        if (comps.size() > 1) {
            std::string msg = "disconnected metric graph:";
            for (std::size_t c = 0; c < comps.size(); ++c) {
                msg += " component " + std::to_string(c + 1) + " = {";
                for (std::size_t j = 0; j < comps[c].size(); ++j)
                    msg += (j ? ", " : "") + comps[c][j];
                msg += "}";
                if (c + 1 < comps.size()) msg += ";";
            }
            throw Error(ErrorCode::BadParams, msg);
        }
    }

    /// Components over real vertices; half-lines never join two vertices.
    std::vector<std::vector<VertexId>> components() const {
        std::map<VertexId, VertexId> parent;
        for (const auto& v : vertices_) parent[v] = v;
        std::function<VertexId(const VertexId&)> find = [&](const VertexId& v) -> VertexId {
            VertexId r = v;
            while (parent[r] != r) r = parent[r];
            return r;
        };
        for (const auto& e : edges_) {
            if (e.halfline) continue;
            parent[find(e.from)] = find(e.to);
        }
        std::map<VertexId, std::vector<VertexId>> groups;
        for (const auto& v : vertices_) groups[find(v)].push_back(v);
        std::vector<std::vector<VertexId>> out;
        for (auto& [root, members] : groups) out.push_back(std::move(members));
        return out;
    }

    std::vector<VertexId> vertices_;
    std::vector<Edge> edges_;
};

using GraphPtr = std::shared_ptr<const MetricGraph>;

/// Moves a graph onto the heap so fields and results can share it safely.
inline GraphPtr share(MetricGraph g) { return std::make_shared<const MetricGraph>(std::move(g)); }

/// Subgraph of all bounded edges and their endpoints (Definition of the
/// compact core). Idempotent.
inline MetricGraph compact_core(const MetricGraph& g) {
    std::vector<Edge> core;
    std::set<VertexId> used;
    for (const auto& e : g.edges()) {
        if (!e.is_bounded()) continue;
        core.push_back(e);
        used.insert(e.from);
        used.insert(e.to);
    }
    if (core.empty()) throw Error(ErrorCode::EmptyCore, "graph has no bounded edges");
    std::vector<VertexId> vs;
    for (const auto& v : g.vertices())
        if (used.count(v)) vs.push_back(v);
    return MetricGraph(std::move(vs), std::move(core));
}

inline bool core_is_empty(const MetricGraph& g) { return g.bounded_edge_ids().empty(); }

/// Exact total length of the compact core.
inline Rational core_length(const MetricGraph& g) {
    Rational sum(0);
    bool any = false;
    for (const auto& e : g.edges()) {
        if (!e.is_bounded()) continue;
        if (!e.length.is_exact())
            throw Error(ErrorCode::BadParams, "core_length needs exact lengths; use core_length_value");
        sum = sum + *e.length.exact;
        any = true;
    }
    if (!any) throw Error(ErrorCode::EmptyCore, "graph has no bounded edges");
    return sum;
}

inline double core_length_value(const MetricGraph& g) {
    double sum = 0.0;
    bool any = false;
    for (const auto& e : g.edges())
        if (e.is_bounded()) { sum += e.length.value(); any = true; }
    if (!any) throw Error(ErrorCode::EmptyCore, "graph has no bounded edges");
    return sum;
}

/// Bounded edges incident at a degree-one vertex; half-lines never count.
inline int pendant_count(const MetricGraph& g) {
    int n = 0;
    for (const auto& e : g.edges()) {
        if (!e.is_bounded()) continue;
        if (g.degree(e.from) == 1 || g.degree(e.to) == 1) ++n;
    }
    return n;
}

/// True iff the multigraph has no cycle; self-loops and parallel pairs count
/// as cycles, half-lines never form one.
inline bool is_tree(const MetricGraph& g) {
    std::map<VertexId, VertexId> parent;
    for (const auto& v : g.vertices()) parent[v] = v;
    std::function<VertexId(const VertexId&)> find = [&](const VertexId& v) -> VertexId {
        VertexId r = v;
        while (parent[r] != r) r = parent[r];
        return r;
    };
    for (const auto& e : g.edges()) {
        if (!e.is_bounded()) continue;
        VertexId a = find(e.from), b = find(e.to);
        if (a == b) return false;
        parent[a] = b;
    }
    return true;
}

namespace detail {

/// Cycles of the spanning-tree basis, as ordered edge-id lists.
inline std::vector<std::vector<int>> cycle_basis(const MetricGraph& g) {
    std::map<VertexId, VertexId> parent_v;
    std::map<VertexId, int> parent_e;
    std::map<VertexId, int> depth;
    std::vector<std::vector<int>> cycles;

    std::map<VertexId, std::vector<std::pair<VertexId, int>>> adj;
    for (const auto& e : g.edges()) {
        if (!e.is_bounded()) continue;
        if (e.is_selfloop()) {
            cycles.push_back({e.id});
            continue;
        }
        adj[e.from].push_back({e.to, e.id});
        adj[e.to].push_back({e.from, e.id});
    }

    std::set<VertexId> visited;
    std::set<int> tree_edges;
    for (const auto& root : g.vertices()) {
        if (visited.count(root)) continue;
        visited.insert(root);
        depth[root] = 0;
        std::vector<VertexId> stack{root};
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (const auto& [w, eid] : adj[v]) {
                if (!visited.count(w)) {
                    visited.insert(w);
                    parent_v[w] = v;
                    parent_e[w] = eid;
                    depth[w] = depth[v] + 1;
                    tree_edges.insert(eid);
                    stack.push_back(w);
                }
            }
        }
    }
    // each non-tree edge closes one basis cycle through tree paths
    for (const auto& e : g.edges()) {
        if (!e.is_bounded() || e.is_selfloop() || tree_edges.count(e.id)) continue;
        std::vector<int> up_a, up_b;
        VertexId a = e.from, b = e.to;
        while (a != b) {
            if (depth[a] >= depth[b]) {
                up_a.push_back(parent_e[a]);
                a = parent_v[a];
            } else {
                up_b.push_back(parent_e[b]);
                b = parent_v[b];
            }
        }
        std::vector<int> cyc;
        cyc.push_back(e.id);
        cyc.insert(cyc.end(), up_b.rbegin(), up_b.rend());
        cyc.insert(cyc.end(), up_a.begin(), up_a.end());
        cycles.push_back(std::move(cyc));
    }
    return cycles;
}

namespace detail {

/// Orders an edge multiset into one closed walk (Hierholzer); empty when the
/// set is not a single Eulerian circuit.
inline std::vector<int> closed_walk_order(const MetricGraph& g, const std::vector<int>& edge_ids) {
    std::map<VertexId, std::vector<int>> adj;
    std::map<VertexId, int> deg;
    std::map<int, bool> used;
    for (int eid : edge_ids) {
        const Edge& e = g.edge(eid);
        adj[e.from].push_back(eid);
        deg[e.from] += e.is_selfloop() ? 2 : 1;
        if (!e.is_selfloop()) {
            adj[e.to].push_back(eid);
            deg[e.to] += 1;
        }
        used[eid] = false;
    }
    for (const auto& [v, d] : deg)
        if (d % 2 != 0) return {};
    VertexId start = g.edge(edge_ids.front()).from;
    std::vector<std::pair<VertexId, int>> stack{{start, -1}};
    std::vector<int> circuit;
    while (!stack.empty()) {
        VertexId v = stack.back().first;
        int pick = -1;
        for (int eid : adj[v])
            if (!used[eid]) { pick = eid; break; }
        if (pick < 0) {
            circuit.push_back(stack.back().second);
            stack.pop_back();
        } else {
            used[pick] = true;
            const Edge& e = g.edge(pick);
            VertexId next = e.is_selfloop() ? v : (e.from == v ? e.to : e.from);
            stack.push_back({next, pick});
        }
    }
    circuit.pop_back();  // sentinel -1 from the seed frame
    if (circuit.size() != edge_ids.size()) return {};
    std::reverse(circuit.begin(), circuit.end());
    return circuit;
}

} // namespace detail

/// Searches the cycle basis (and optionally pairwise symmetric differences)
/// for a cycle whose lengths are pairwise commensurable. Exact rational
/// lengths always qualify; irrational-tagged lengths never do. The returned
/// edges are in consecutive closed-walk order.
inline std::optional<CommensurableCycle> commensurable_cycle(const MetricGraph& g,
                                                             bool include_pair_combinations = false) {
    auto cycles = detail::cycle_basis(g);
    if (include_pair_combinations) {
        std::size_t n = cycles.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                std::set<int> sym(cycles[i].begin(), cycles[i].end());
                for (int eid : cycles[j]) {
                    if (sym.count(eid)) sym.erase(eid);
                    else sym.insert(eid);
                }
                if (sym.size() >= 2) cycles.push_back(std::vector<int>(sym.begin(), sym.end()));
            }
        }
    }
    for (const auto& cyc : cycles) {
        bool exact = true;
        for (int eid : cyc)
            if (!g.edge(eid).length.is_exact()) { exact = false; break; }
        if (!exact) continue;
        auto walk = detail::closed_walk_order(g, cyc);
        if (walk.empty()) continue;
        Rational unit(0);
        for (int eid : walk) unit = Rational::gcd(unit, *g.edge(eid).length.exact);
        std::int64_t k = 0;
        bool ok = true;
        for (int eid : walk) {
            std::int64_t ki = g.edge(eid).length.exact->integer_quotient(unit);
            if (ki <= 0) { ok = false; break; }
            k += ki;
        }
        if (!ok) continue;
        return CommensurableCycle{walk, unit, k};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Gallery of the named example graphs.
// ---------------------------------------------------------------------------

using GraphParams = std::map<std::string, Rational>;

namespace detail {

inline Rational param(const GraphParams& p, const std::string& key, const Rational& def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

inline void require_positive(const Rational& r, const std::string& what) {
    if (!r.is_positive()) throw Error(ErrorCode::BadParams, what + " must be positive");
}

} // namespace detail

/// Builds one of the gallery graphs: tadpole, segment_halfline, segment_star,
/// star_with_collars, two_pendant, three_pendant_path, double_bridge,
/// half_double_bridge.
inline MetricGraph named_graph(const std::string& name, const GraphParams& params = {}) {
    using detail::param;
    using detail::require_positive;
    auto rat = [](std::int64_t n, std::int64_t d = 1) { return Rational(n, d); };
    auto len = [](const Rational& r) { return EdgeLength::rational(r); };

    if (name == "tadpole") {
        Rational loop = param(params, "loop", rat(2));
        require_positive(loop, "loop");
        std::vector<Edge> es;
        es.push_back({0, "v", "v", false, len(loop)});
        es.push_back({1, "v", "", true, {}});
        return MetricGraph({"v"}, std::move(es));
    }
    if (name == "segment_halfline") {
        Rational l = param(params, "length", rat(1));
        require_positive(l, "length");
        std::vector<Edge> es;
        es.push_back({0, "v0", "v1", false, len(l)});
        es.push_back({1, "v1", "", true, {}});
        return MetricGraph({"v0", "v1"}, std::move(es));
    }
    if (name == "segment_star") {
        Rational l = param(params, "length", rat(1));
        Rational rays = param(params, "rays", rat(5));
        require_positive(l, "length");
        if (rays.den() != 1 || rays.num() < 1)
            throw Error(ErrorCode::BadParams, "rays must be a positive integer");
        std::vector<Edge> es;
        es.push_back({0, "v0", "v1", false, len(l)});
        for (std::int64_t i = 0; i < rays.num(); ++i) es.push_back({0, "v1", "", true, {}});
        return MetricGraph({"v0", "v1"}, std::move(es));
    }
    if (name == "star_with_collars") {
        Rational collar = param(params, "collar", rat(1));
        Rational rays = param(params, "rays", rat(3));
        require_positive(collar, "collar");
        if (rays.den() != 1 || rays.num() < 1)
            throw Error(ErrorCode::BadParams, "rays must be a positive integer");
        std::vector<VertexId> vs{"c"};
        std::vector<Edge> es;
        for (std::int64_t i = 0; i < rays.num(); ++i) {
            VertexId m = "m" + std::to_string(i);
            vs.push_back(m);
            es.push_back({0, "c", m, false, len(collar)});
            es.push_back({0, m, "", true, {}});
        }
        return MetricGraph(std::move(vs), std::move(es));
    }
    if (name == "two_pendant") {
        Rational pend = param(params, "pendant", rat(1, 2));
        require_positive(pend, "pendant");
        std::vector<Edge> es;
        es.push_back({0, "c", "t1", false, len(pend)});
        es.push_back({0, "c", "t2", false, len(pend)});
        es.push_back({0, "c", "", true, {}});
        return MetricGraph({"c", "t1", "t2"}, std::move(es));
    }
    if (name == "three_pendant_path") {
        Rational pend = param(params, "pendant", rat(1, 2));
        Rational interior = param(params, "interior", rat(2));
        Rational hang = param(params, "hang", interior);
        require_positive(pend, "pendant");
        require_positive(interior, "interior");
        require_positive(hang, "hang");
        std::vector<VertexId> vs{"a", "v0", "v1", "v2", "v3", "b", "h"};
        std::vector<Edge> es;
        es.push_back({0, "a", "v0", false, len(pend)});        // e1
        es.push_back({0, "v0", "v1", false, len(interior)});   // e2
        es.push_back({0, "v1", "v2", false, len(interior)});   // e3
        es.push_back({0, "v2", "v3", false, len(interior)});   // e4
        es.push_back({0, "v3", "b", false, len(pend)});        // e5
        es.push_back({0, "v2", "h", false, len(hang)});        // hanging pendant
        es.push_back({0, "v0", "", true, {}});
        es.push_back({0, "v0", "", true, {}});
        es.push_back({0, "v1", "", true, {}});
        es.push_back({0, "v3", "", true, {}});
        return MetricGraph(std::move(vs), std::move(es));
    }
    if (name == "double_bridge") {
        Rational b1 = param(params, "b1", rat(1));
        Rational b2 = param(params, "b2", rat(1));
        require_positive(b1, "b1");
        require_positive(b2, "b2");
        std::vector<Edge> es;
        es.push_back({0, "vl", "vr", false, len(b1)});
        es.push_back({0, "vl", "vr", false, len(b2)});
        es.push_back({0, "vl", "", true, {}});
        es.push_back({0, "vr", "", true, {}});
        return MetricGraph({"vl", "vr"}, std::move(es));
    }
    if (name == "half_double_bridge") {
        Rational b1 = param(params, "b1", rat(1));
        Rational b2 = param(params, "b2", rat(1));
        require_positive(b1, "b1");
        require_positive(b2, "b2");
        std::vector<Edge> es;
        es.push_back({0, "vl", "v1", false, len(b1 / Rational(2))});
        es.push_back({0, "vl", "v2", false, len(b2 / Rational(2))});
        es.push_back({0, "vl", "", true, {}});
        return MetricGraph({"vl", "v1", "v2"}, std::move(es));
    }
    throw Error(ErrorCode::UnknownName, "unknown gallery graph '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON serialization.
// Format: {"vertices": ["v1", ...],
//          "edges": [{"from": "a", "to": "b", "length": "3/2"} |
//                    {"from": "a", "halfline": true} |
//                    {"from": "a", "to": "b", "length": 1.41, "irrational": true}]}
// ---------------------------------------------------------------------------

inline nlohmann::json graph_to_json(const MetricGraph& g) {
    nlohmann::json j;
    j["vertices"] = g.vertices();
    j["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges()) {
        nlohmann::json je;
        je["from"] = e.from;
        if (e.halfline) {
            je["halfline"] = true;
        } else {
            je["to"] = e.to;
            if (e.length.is_exact()) {
                je["length"] = e.length.exact->str();
            } else {
                je["length"] = e.length.value();
                je["irrational"] = true;
            }
        }
        j["edges"].push_back(je);
    }
    return j;
}

inline MetricGraph graph_from_json(const nlohmann::json& j) {
    if (!j.contains("vertices") || !j.contains("edges"))
        throw Error(ErrorCode::ParseError, "graph JSON needs 'vertices' and 'edges'");
    std::vector<VertexId> vs = j.at("vertices").get<std::vector<VertexId>>();
    std::vector<Edge> es;
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.from = je.at("from").get<std::string>();
        if (je.value("halfline", false)) {
            e.halfline = true;
        } else {
            e.to = je.at("to").get<std::string>();
            const auto& jl = je.at("length");
            if (je.value("irrational", false)) {
                e.length = EdgeLength::irrational(jl.get<double>());
            } else if (jl.is_string()) {
                e.length = EdgeLength::rational(Rational::parse(jl.get<std::string>()));
            } else if (jl.is_number_integer()) {
                e.length = EdgeLength::rational(Rational(jl.get<std::int64_t>()));
            } else {
                throw Error(ErrorCode::ParseError,
                            "edge length must be a rational string or integer (or carry \"irrational\": true)");
            }
        }
        es.push_back(std::move(e));
    }
    return MetricGraph(std::move(vs), std::move(es));
}

} // namespace graphnls
