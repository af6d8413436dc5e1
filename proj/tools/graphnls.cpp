// graphnls: stationary NLS states on noncompact metric graphs with
// nonlinearity localized on the compact core. Subcommands cover solving,
// explicit constructions, regime classification, nonexistence scans and the
// built-in verification batteries; outputs are CSV/JSON files plus a
// manifest echoing the resolved configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "graphnls/graphnls.hpp"
#include "graphnls/verify.hpp"

namespace fs = std::filesystem;
using namespace graphnls;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConsistency = 2;
constexpr int kExitNonConvergence = 3;

/// "gallery:name?key=val&key=val" or a path to a graph JSON file.
GraphPtr load_graph(const std::string& source) {
    if (source.rfind("gallery:", 0) == 0) {
        std::string rest = source.substr(8);
        std::string name = rest;
        GraphParams params;
        auto qm = rest.find('?');
        if (qm != std::string::npos) {
            name = rest.substr(0, qm);
            std::stringstream qs(rest.substr(qm + 1));
            std::string kv;
            while (std::getline(qs, kv, '&')) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw Error(ErrorCode::BadParams, "bad gallery parameter '" + kv + "'");
                params[kv.substr(0, eq)] = Rational::parse(kv.substr(eq + 1));
            }
        }
        return share(named_graph(name, params));
    }
    std::ifstream in(source);
    if (!in) throw Error(ErrorCode::BadParams, "cannot read graph file " + source);
    nlohmann::json j;
    in >> j;
    return share(graph_from_json(j));
}

/// mu grid "start:stop:count" (inclusive); single value otherwise.
std::vector<double> parse_mu_grid(const std::string& text, bool geometric) {
    auto c1 = text.find(':');
    if (c1 == std::string::npos) return {std::stod(text)};
    auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw Error(ErrorCode::BadParams, "mu grid must be start:stop:count");
    double start = std::stod(text.substr(0, c1));
    double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    int count = std::stoi(text.substr(c2 + 1));
    if (count < 1 || !(start > 0) || !(stop > 0))
        throw Error(ErrorCode::BadParams, "mu grid needs positive endpoints and count >= 1");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(geometric ? start * std::pow(stop / start, t) : start + (stop - start) * t);
    }
    return out;
}

struct OutputDir {
    fs::path dir;

    explicit OutputDir(const std::string& path) : dir(path) { fs::create_directories(dir); }

    void write(const std::string& name, const std::string& content) const {
        write_text_file((dir / name).string(), content);
    }

    void write_json(const std::string& name, const nlohmann::json& j) const {
        write(name, j.dump(2) + "\n");
    }
};

nlohmann::json manifest_base(const std::string& verb, int argc, char** argv) {
    nlohmann::json m;
    m["tool"] = "graphnls";
    m["verb"] = verb;
    std::vector<std::string> args(argv, argv + argc);
    m["argv"] = args;
    return m;
}

void emit_state(const OutputDir& out, const std::string& stem, const BoundStateResult& r, double p) {
    out.write(stem + ".csv", field_to_csv(r.field));
    out.write_json(stem + ".meta.json", field_sidecar(r.field));
    out.write_json(stem + ".json", result_to_json(r, p));
}

int run_cli(int argc, char** argv) {
    CLI::App app{"stationary NLS states on metric graphs with localized nonlinearity"};
    app.require_subcommand(1);

    std::string graph_src, out_dir = "out", mu_text = "1", mode_text = "localized";
    std::string halfline_mode = "truncated";
    double p = 4.0, lambda = -1.0, tol = 1e-9, h = 5e-3, R = 0.0, L = 2.0;
    double b1v = 1.0, b2v = 1.0;
    std::string b1 = "1", b2 = "1";
    int starts = 20;
    std::uint64_t seed = 0;
    bool geometric = false;
    bool mu_given = false, lambda_given = false;

    auto add_common = [&](CLI::App* cmd, bool with_graph = true) {
        if (with_graph)
            cmd->add_option("--graph", graph_src, "graph JSON file or gallery:name?k=v")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--tol", tol, "residual tolerance");
        cmd->add_option("--h", h, "target grid step");
        cmd->add_option("--R", R, "half-line truncation length (0 = auto)");
        cmd->add_option("--seed", seed, "random seed");
    };

    auto* solve = app.add_subcommand("solve", "compute a single stationary state");
    auto* solve_ground = solve->add_subcommand("ground", "mass-constrained energy minimization");
    add_common(solve_ground);
    solve_ground->add_option("--p", p, "nonlinearity exponent")->required();
    solve_ground->add_option("--mu", mu_text, "mass")->required();
    solve_ground->add_option("--mode", mode_text, "localized|everywhere");

    auto* solve_bound = solve->add_subcommand("bound", "Newton iteration for a bound state");
    add_common(solve_bound);
    solve_bound->add_option("--p", p, "nonlinearity exponent")->required();
    auto* ob_mu = solve_bound->add_option_function<std::string>(
        "--mu", [&](const std::string& s) { mu_text = s; mu_given = true; }, "target mass");
    auto* ob_lam = solve_bound->add_option_function<double>(
        "--lambda", [&](double v) { lambda = v; lambda_given = true; }, "fixed multiplier");
    ob_mu->excludes(ob_lam);
    solve_bound->add_option("--halfline-mode", halfline_mode, "truncated|exact-tail");
    solve_bound->add_option("--mode", mode_text, "localized|everywhere");

    auto* search = app.add_subcommand("search", "seeded multi-start bound-state search");
    add_common(search);
    search->add_option("--p", p, "nonlinearity exponent")->required();
    search->add_option("--mu", mu_text, "mass")->required();
    search->add_option("--starts", starts, "number of random starts");

    auto* construct = app.add_subcommand("construct", "explicit solutions");
    auto* con_cycle = construct->add_subcommand("cycle", "compact state on a commensurable cycle");
    add_common(con_cycle);
    con_cycle->add_option("--p", p)->required();
    con_cycle->add_option("--lambda", lambda)->required();
    auto* con_pend = construct->add_subcommand("pendant", "compact state on a pendant path");
    add_common(con_pend);
    con_pend->add_option("--p", p)->required();
    con_pend->add_option("--lambda", lambda)->required();
    auto* con_db = construct->add_subcommand("double-bridge", "reflected everywhere-nonlinear state");
    add_common(con_db, false);
    con_db->add_option("--b1", b1, "first bridge length (rational)");
    con_db->add_option("--b2", b2, "second bridge length (rational)");
    con_db->add_option("--p", p)->required();
    con_db->add_option("--mu", mu_text, "mass")->required();

    auto* wave_cmd = app.add_subcommand("wave", "dump an odd periodic wave table");
    wave_cmd->add_option("--L", L, "period")->required();
    wave_cmd->add_option("--p", p)->required();
    wave_cmd->add_option("--lambda", lambda)->required();
    wave_cmd->add_option("--h", h, "sample step");
    wave_cmd->add_option("--out", out_dir, "output directory");

    auto* classify = app.add_subcommand("classify", "regime report for (graph, p, mu)");
    classify->add_option("--graph", graph_src)->required();
    classify->add_option("--p", p)->required();
    classify->add_option("--mu", mu_text)->required();
    classify->add_option("--out", out_dir, "optional output directory");

    auto* scan = app.add_subcommand("scan", "classify + multi-start search over a mu grid");
    add_common(scan);
    scan->add_option("--p", p)->required();
    scan->add_option("--mu", mu_text, "mu grid start:stop:count or a single value")->required();
    scan->add_option("--starts", starts);
    scan->add_flag("--geometric", geometric, "geometric mu spacing");
    scan->add_option("--mode", mode_text, "localized|everywhere");

    auto* verify = app.add_subcommand("verify", "run an acceptance battery");
    std::string suite;
    verify->add_option("suite", suite,
                       "gn|rearrangement|constructions|thresholds|scans|scaling|bridge|all")
        ->required();

    CLI11_PARSE(app, argc, argv);

    auto mode_of = [&]() {
        if (mode_text == "localized") return NonlinearitySupport::Localized;
        if (mode_text == "everywhere") return NonlinearitySupport::Everywhere;
        throw Error(ErrorCode::BadParams, "mode must be localized or everywhere");
    };

    SolverOptions opts;
    opts.tolerance = tol;
    opts.h = h;
    opts.R = R;
    opts.seed = seed;
    opts.starts = starts;

    if (solve_ground->parsed()) {
        auto g = load_graph(graph_src);
        double mu = std::stod(mu_text);
        OutputDir out(out_dir);
        auto r = ground_state(g, p, mu, mode_of(), opts);
        auto m = manifest_base("solve ground", argc, argv);
        m["p"] = p;
        m["mu"] = mu;
        m["mode"] = mode_text;
        m["tolerance"] = opts.tolerance;
        m["h"] = opts.h;
        m["outputs"] = {"state.csv", "state.json", "state.meta.json"};
        out.write_json("manifest.json", m);
        emit_state(out, "state", r, p);
        std::cout << result_to_json(r, p).dump(2) << "\n";
        return r.converged ? kExitOk : kExitNonConvergence;
    }
    if (solve_bound->parsed()) {
        auto g = load_graph(graph_src);
        OutputDir out(out_dir);
        HalflineMode hm = halfline_mode == "exact-tail" ? HalflineMode::ExactTail
                                                        : HalflineMode::Truncated;
        double Reff = R > 0 ? R : GridSpec::default_truncation(lambda_given ? lambda : 0.0);
        GridSpec grid = GridSpec::make(*g, h, hm, Reff);
        GraphField init(g, grid, mode_of());
        init.fill([](const Edge& e, double x) { return e.halfline ? std::exp(-x) : 1.0; });
        NewtonSpec spec;
        spec.p = p;
        double lam0 = 1.0;
        if (mu_given) {
            spec.mu = std::stod(mu_text);
            project_to_mass(init, *spec.mu, p);
            lam0 = std::max(lagrange_multiplier(init, p), hm == HalflineMode::ExactTail ? 0.5 : -1e30);
        } else if (lambda_given) {
            spec.lambda_fixed = lambda;
            lam0 = lambda;
        } else {
            throw Error(ErrorCode::BadParams, "solve bound needs --mu or --lambda");
        }
        if (hm == HalflineMode::ExactTail) init.set_tail_lambda(std::max(lam0, 1e-6));
        auto r = newton_bound_state(init, spec, lam0, opts);
        auto m = manifest_base("solve bound", argc, argv);
        m["p"] = p;
        if (spec.mu) m["mu"] = *spec.mu;
        if (spec.lambda_fixed) m["lambda"] = *spec.lambda_fixed;
        m["halfline_mode"] = halfline_mode;
        m["tolerance"] = opts.tolerance;
        m["h"] = opts.h;
        out.write_json("manifest.json", m);
        emit_state(out, "state", r, p);
        std::cout << result_to_json(r, p).dump(2) << "\n";
        return r.converged ? kExitOk : kExitNonConvergence;
    }
    if (search->parsed()) {
        auto g = load_graph(graph_src);
        double mu = std::stod(mu_text);
        OutputDir out(out_dir);
        auto states = multi_start_search(g, p, mu, starts, opts);
        auto m = manifest_base("search", argc, argv);
        m["p"] = p;
        m["mu"] = mu;
        m["starts"] = starts;
        m["seed"] = seed;
        m["n_found"] = states.size();
        out.write_json("manifest.json", m);
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t i = 0; i < states.size(); ++i) {
            emit_state(out, "state_" + std::to_string(i), states[i], p);
            arr.push_back(result_to_json(states[i], p));
        }
        out.write_json("states.json", arr);
        std::cout << arr.dump(2) << "\n";
        return kExitOk;
    }
    if (con_cycle->parsed()) {
        auto g = load_graph(graph_src);
        OutputDir out(out_dir);
        auto r = cycle_compact_state(g, p, lambda, h);
        out.write_json("manifest.json", manifest_base("construct cycle", argc, argv));
        emit_state(out, "state", r, p);
        std::cout << result_to_json(r, p).dump(2) << "\n";
        return r.converged ? kExitOk : kExitNonConvergence;
    }
    if (con_pend->parsed()) {
        auto g = load_graph(graph_src);
        OutputDir out(out_dir);
        auto r = pendant_compact_state(g, p, lambda, h);
        out.write_json("manifest.json", manifest_base("construct pendant", argc, argv));
        emit_state(out, "state", r, p);
        std::cout << result_to_json(r, p).dump(2) << "\n";
        return r.converged ? kExitOk : kExitNonConvergence;
    }
    if (con_db->parsed()) {
        OutputDir out(out_dir);
        double mu = std::stod(mu_text);
        SolverOptions dbopts = opts;
        dbopts.tolerance = std::max(tol, 1e-7);
        auto r = double_bridge_state(Rational::parse(b1), Rational::parse(b2), p, mu, dbopts);
        out.write_json("manifest.json", manifest_base("construct double-bridge", argc, argv));
        emit_state(out, "state", r, p);
        std::cout << result_to_json(r, p).dump(2) << "\n";
        return r.converged ? kExitOk : kExitNonConvergence;
    }
    if (wave_cmd->parsed()) {
        OutputDir out(out_dir);
        PeriodicWave w = periodic_odd_solution(L, p, lambda);
        int n = std::max(8, static_cast<int>(std::ceil(w.minimal_period() / h)));
        std::vector<double> xs(static_cast<std::size_t>(n) + 1);
        for (int j = 0; j <= n; ++j)
            xs[static_cast<std::size_t>(j)] = w.minimal_period() * j / n;
        auto vals = w.eval_many(xs);
        std::ostringstream os;
        os << "x,phi,dphi\n";
        for (std::size_t j = 0; j < xs.size(); ++j)
            os << fmt12(xs[j]) << "," << fmt12(vals[j].first) << "," << fmt12(vals[j].second) << "\n";
        out.write("wave.csv", os.str());
        auto m = manifest_base("wave", argc, argv);
        m["L"] = L;
        m["p"] = p;
        m["lambda"] = lambda;
        m["slope"] = w.slope();
        m["repetitions"] = w.repetitions();
        m["xbar"] = w.xbar();
        out.write_json("manifest.json", m);
        std::cout << "wave.csv written (s=" << fmt12(w.slope()) << ", k=" << w.repetitions()
                  << ", xbar=" << fmt12(w.xbar()) << ")\n";
        return kExitOk;
    }
    if (classify->parsed()) {
        auto g = load_graph(graph_src);
        auto rep = classify_regime(*g, p, std::stod(mu_text));
        auto j = regime_to_json(rep);
        std::cout << j.dump(2) << "\n";
        if (classify->count("--out") > 0) {
            OutputDir out(out_dir);
            out.write_json("manifest.json", manifest_base("classify", argc, argv));
            out.write_json("regime.json", j);
        }
        return kExitOk;
    }
    if (scan->parsed()) {
        auto g = load_graph(graph_src);
        OutputDir out(out_dir);
        ScanOptions sopts;
        sopts.solver = opts;
        sopts.mode = mode_of();
        auto grid = parse_mu_grid(mu_text, geometric);
        auto table = nonexistence_scan(g, p, grid, sopts);
        auto m = manifest_base("scan", argc, argv);
        m["p"] = p;
        m["mu_grid"] = grid;
        m["mode"] = mode_text;
        m["starts"] = opts.starts;
        m["seed"] = seed;
        m["consistent"] = table.consistent;
        if (!table.consistent) m["violation"] = table.violation;
        out.write_json("manifest.json", m);
        out.write("results.csv", scan_to_csv(table));
        std::cout << scan_to_csv(table);
        if (!table.consistent) {
            std::cerr << "consistency violation: " << table.violation << "\n";
            return kExitConsistency;
        }
        return kExitOk;
    }
    if (verify->parsed()) {
        auto rep = verify_suite(suite);
        print_report(rep, std::cout);
        return rep.all_pass() ? kExitOk : kExitNonConvergence;
    }
    return kExitInput;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConsistencyViolation ? kExitConsistency : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
