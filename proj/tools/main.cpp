// cmcgraph command-line tool.
//
// Subcommands:
//   mesh          generate (or load and validate) a triangulated domain
//   solve         solve one penalized problem at fixed (eps, upsilon)
//   continuation  run the full eps-continuation and report the limit pair
//   verify        run the built-in verification suites
//
// Exit codes: 0 success, 2 configuration/mesh errors, 3 solver failures,
// 4 verification failures.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cmcgraph/cmcgraph.hpp>

namespace {

using namespace cmcgraph;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;

struct Options {
    // metric
    std::string metric = "euclidean";
    double metric_radius = 1.0;
    double bump = 0.05;
    // domain
    std::string shape = "disk";
    std::string mesh_file;
    double radius = 1.0;
    double a = 1.5, b = 1.0;
    double h = 0.05;
    std::vector<double> center = {0.0, 0.0};
    double delta = 0.25;
    int lobes = 5;
    // Neumann data (values at boundary-loop vertices)
    std::string phi_profile = "constant"; // constant | cap | sinusoidal
    double phi = 0.0;
    double rho = 2.0;
    double phi_amp = 0.1;
    int phi_k = 2;
    std::string phi_file; // per-boundary-vertex values, whitespace separated
    // initial guess
    std::string u0 = "compatible"; // compatible | zero
    // solver
    double eps = 1e-3;
    double upsilon = 0.0;
    std::vector<double> eps_schedule = default_eps_schedule();
    double tol = 1e-10;
    int max_iter = 50;
    // verification
    std::string suite = "all";
    int jobs = 1;
    std::uint64_t seed = 20240901ull;
    // outputs
    std::string report;
    std::string out_mesh;
    std::string vtk;
    std::string dump_coo;
    bool strict = false; // enforce strict convexity before solving
    std::string config_path; // resolved before CLI parsing; kept for --help
};

// Configuration file: a flat JSON object whose keys mirror the long option
// names (without the leading dashes). Command-line flags override file values.
void apply_config(const ordered_json& j, Options& o) {
    auto num = [&](const char* key, double& slot) {
        if (j.contains(key)) slot = j.at(key).get<double>();
    };
    auto str = [&](const char* key, std::string& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::string>();
    };
    str("metric", o.metric);
    num("metric-radius", o.metric_radius);
    num("bump", o.bump);
    str("shape", o.shape);
    str("mesh-file", o.mesh_file);
    num("radius", o.radius);
    num("a", o.a);
    num("b", o.b);
    num("h", o.h);
    if (j.contains("center")) o.center = j.at("center").get<std::vector<double>>();
    num("delta", o.delta);
    if (j.contains("lobes")) o.lobes = j.at("lobes").get<int>();
    str("phi-profile", o.phi_profile);
    num("phi", o.phi);
    num("rho", o.rho);
    num("phi-amp", o.phi_amp);
    if (j.contains("phi-k")) o.phi_k = j.at("phi-k").get<int>();
    str("phi-file", o.phi_file);
    str("u0", o.u0);
    num("eps", o.eps);
    num("upsilon", o.upsilon);
    if (j.contains("eps-schedule")) o.eps_schedule = j.at("eps-schedule").get<std::vector<double>>();
    num("tol", o.tol);
    if (j.contains("max-iter")) o.max_iter = j.at("max-iter").get<int>();
    str("suite", o.suite);
    if (j.contains("jobs")) o.jobs = j.at("jobs").get<int>();
    if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
    str("report", o.report);
    str("out", o.out_mesh);
    str("vtk", o.vtk);
    str("dump-coo", o.dump_coo);
    if (j.contains("strict")) o.strict = j.at("strict").get<bool>();
}

// --config is resolved before CLI11 parsing so that explicit flags win.
void preload_config(int argc, char** argv, Options& o) {
    std::string path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    }
    if (path.empty()) return;
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    ordered_json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
    apply_config(j, o);
}

Metric2 build_metric(const Options& o) {
    MetricParams params;
    params.radius = o.metric_radius;
    params.bump = o.bump;
    return make_metric(o.metric, params);
}

TriangulatedDomain build_domain(const Options& o) {
    if (!o.mesh_file.empty()) return read_mesh(o.mesh_file);
    if (o.center.size() != 2) throw ConfigError("--center needs exactly two values");
    const Vec<2> c(o.center[0], o.center[1]);
    if (o.shape == "disk") return generate_disk_mesh(o.radius, o.h, c);
    if (o.shape == "ellipse") return generate_ellipse_mesh(o.a, o.b, o.h);
    if (o.shape == "star") return generate_star_mesh(o.radius, o.h, o.delta, o.lobes, c);
    throw ConfigError("unknown shape '" + o.shape + "' (expected disk, ellipse or star)");
}

std::vector<double> build_phi(const Options& o, const TriangulatedDomain& dom) {
    const size_t nb = dom.boundary_loop.size();
    std::vector<double> phi(nb, o.phi);
    if (!o.phi_file.empty()) {
        std::ifstream is(o.phi_file);
        if (!is) throw ConfigError("cannot open phi file '" + o.phi_file + "'");
        for (size_t i = 0; i < nb; ++i)
            if (!(is >> phi[i]))
                throw ConfigError("phi file '" + o.phi_file + "': expected " +
                                  std::to_string(nb) + " values (one per boundary vertex)");
        double extra;
        if (is >> extra)
            throw ConfigError("phi file '" + o.phi_file + "': more values than boundary vertices");
        return phi;
    }
    if (o.phi_profile == "constant") return phi;
    if (o.phi_profile == "cap") {
        // Neumann data of the spherical cap of radius rho over a Euclidean
        // disk: phi = -r / sqrt(rho^2 - r^2) at boundary distance r from the
        // disk center.
        if (o.center.size() != 2) throw ConfigError("--center needs exactly two values");
        const Vec<2> c(o.center[0], o.center[1]);
        for (size_t i = 0; i < nb; ++i) {
            const double r = (dom.vertices[dom.boundary_loop[i]] - c).norm();
            if (!(o.rho > r)) throw ConfigError("cap profile: need rho > boundary radius");
            phi[i] = -r / std::sqrt(o.rho * o.rho - r * r);
        }
        return phi;
    }
    if (o.phi_profile == "sinusoidal") {
        if (o.center.size() != 2) throw ConfigError("--center needs exactly two values");
        const Vec<2> c(o.center[0], o.center[1]);
        for (size_t i = 0; i < nb; ++i) {
            const Vec<2> d = dom.vertices[dom.boundary_loop[i]] - c;
            const double theta = std::atan2(d.y(), d.x());
            phi[i] = o.phi + o.phi_amp * std::cos(o.phi_k * theta);
        }
        return phi;
    }
    throw ConfigError("unknown phi profile '" + o.phi_profile + "'");
}

DiscreteField build_u0(const Options& o, const TriangulatedDomain& dom,
                       const std::vector<double>& phi) {
    if (o.u0 == "zero") return DiscreteField(static_cast<size_t>(dom.num_vertices()), 0.0);
    if (o.u0 == "compatible") return build_compatible_u0(dom, phi);
    throw ConfigError("unknown u0 choice '" + o.u0 + "' (expected compatible or zero)");
}

void emit_json(const ordered_json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        write_json_file(path, j);
    }
}

void check_hypotheses(const Options& o, const TriangulatedDomain& dom, const Metric2& metric) {
    const ConvexityReport conv = boundary_convexity(dom, metric);
    if (!conv.strictly_convex) {
        if (o.strict)
            throw NotStrictlyConvex("boundary is not strictly convex (kappa1 = " +
                                    std::to_string(conv.kappa1) + ")");
        std::cerr << "warning: boundary is not strictly convex (kappa1 = " << conv.kappa1
                  << "); continuing anyway\n";
    }
}

int cmd_mesh(const Options& o) {
    const Metric2 metric = build_metric(o);
    const TriangulatedDomain dom = build_domain(o);
    if (!o.out_mesh.empty()) write_mesh(o.out_mesh, dom);
    if (!o.vtk.empty()) write_vtk_file(o.vtk, dom, {}, "cmcgraph mesh");
    emit_json(mesh_summary_json(dom, metric), o.report);
    return kExitOk;
}

int cmd_solve(const Options& o) {
    const Metric2 metric = build_metric(o);
    auto dom = std::make_shared<TriangulatedDomain>(build_domain(o));
    check_hypotheses(o, *dom, metric);
    const std::vector<double> phi = build_phi(o, *dom);
    const DiscreteField u0 = build_u0(o, *dom, phi);

    PenalizedProblem problem(metric, dom, phi, o.eps, o.upsilon);
    NewtonSettings settings;
    settings.tol_residual = o.tol;
    settings.max_iter = o.max_iter;

    SolveResult sol;
    try {
        sol = solve_penalized(problem, u0, settings);
    } catch (const Error& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitSolver;
    }
    emit_json(solve_report_json(problem, sol, o.eps, o.upsilon), o.report);
    if (!o.vtk.empty()) {
        const DiscreteField lam = problem.lambda_field(sol.u);
        write_vtk_file(o.vtk, *dom, {{"u", &sol.u}, {"lambda", &lam}}, "cmcgraph solve");
    }
    if (!o.dump_coo.empty()) {
        std::ofstream os(o.dump_coo);
        if (!os) throw ConfigError("cannot open '" + o.dump_coo + "' for writing");
        problem.dump_coo(sol.u, os);
    }
    if (!sol.converged) {
        std::cerr << "solver did not reach tolerance " << o.tol << " in " << o.max_iter
                  << " iterations (final residual " << sol.residual_history.back() << ")\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_continuation(const Options& o) {
    const Metric2 metric = build_metric(o);
    auto dom = std::make_shared<TriangulatedDomain>(build_domain(o));
    check_hypotheses(o, *dom, metric);
    const std::vector<double> phi = build_phi(o, *dom);
    const DiscreteField u0 = build_u0(o, *dom, phi);

    PenalizedProblem base(metric, dom, phi, 1.0, 0.0);
    NewtonSettings settings;
    settings.tol_residual = o.tol;
    settings.max_iter = o.max_iter;

    ContinuationReport rep;
    try {
        rep = run_continuation(base, o.eps_schedule, u0, settings);
    } catch (const ContinuationAborted& e) {
        std::cerr << "continuation aborted: " << e.what() << "\n";
        emit_json(continuation_report_json(e.partial), o.report);
        return kExitSolver;
    }
    emit_json(continuation_report_json(rep), o.report);
    if (!o.vtk.empty()) {
        const auto& last = rep.records.back();
        const PenalizedProblem p_final = base.with_eps_upsilon(last.eps, last.upsilon_eps);
        const DiscreteField lam = p_final.lambda_field(rep.u_final);
        write_vtk_file(o.vtk, *dom, {{"u", &rep.u_final}, {"lambda", &lam}},
                       "cmcgraph continuation");
    }
    return kExitOk;
}

int cmd_verify(const Options& o) {
    std::vector<VerificationOutcome> outcomes;
    auto with_seed = [&](std::vector<VerificationCase> cases) {
        for (size_t i = 0; i < cases.size(); ++i) cases[i].seed = o.seed + i;
        return cases;
    };
    auto append = [&](std::vector<VerificationOutcome> v) {
        for (auto& x : v) outcomes.push_back(std::move(x));
    };

    const bool all = o.suite == "all";
    if (all || o.suite == "geometry") outcomes.push_back(run_geometry_suite(o.seed));
    // The curved suite presupposes the flat one: running 'curved' runs both.
    if (all || o.suite == "flat" || o.suite == "curved")
        append(run_cases(with_seed(flat_suite()), o.jobs));
    if (all || o.suite == "curved") append(run_cases(with_seed(curved_suite()), o.jobs));
    if (all || o.suite == "negative-controls")
        append(run_cases(with_seed(negative_control_suite()), o.jobs));
    if (all || o.suite == "regression") outcomes.push_back(regression_spherical_cap(1.0, 2.0, 0.04));
    if (outcomes.empty())
        throw ConfigError("unknown suite '" + o.suite +
                          "' (expected all, geometry, flat, curved, negative-controls or regression)");

    emit_json(verify_report_json(outcomes), o.report);
    for (const auto& out : outcomes) {
        std::cerr << (out.overall ? "[ ok ] " : "[FAIL] ") << out.case_name << "\n";
        if (!out.overall)
            for (const auto& c : out.checks)
                if (!c.passed) std::cerr << "         " << c.name << ": " << c.details << "\n";
    }
    return all_passed(outcomes) ? kExitOk : kExitVerify;
}

void add_common_options(CLI::App* cmd, Options& o, bool domain, bool metric) {
    cmd->set_help_flag("--help", "print usage");
    cmd->add_option("--config", o.config_path,
                    "flat JSON file with defaults (keys = option names)");
    if (metric) {
        cmd->add_option("--metric", o.metric,
                        "metric: euclidean | polar-flat | sphere | hyperbolic | perturbed-flat");
        cmd->add_option("--metric-radius", o.metric_radius, "radius parameter of the sphere metric");
        cmd->add_option("--bump", o.bump, "strength of the perturbed-flat metric");
    }
    if (domain) {
        cmd->add_option("--shape", o.shape, "domain shape: disk | ellipse | star");
        cmd->add_option("--mesh-file", o.mesh_file, "load this mesh instead of generating one");
        cmd->add_option("--radius", o.radius, "disk/star radius");
        cmd->add_option("--a", o.a, "ellipse semi-axis a");
        cmd->add_option("--b", o.b, "ellipse semi-axis b");
        cmd->add_option("--h", o.h, "target mesh size");
        cmd->add_option("--center", o.center, "chart coordinates of the domain center")
            ->expected(2);
        cmd->add_option("--delta", o.delta, "star amplitude");
        cmd->add_option("--lobes", o.lobes, "star lobe count");
    }
}

void add_data_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--phi", o.phi, "constant Neumann value (base value for profiles)");
    cmd->add_option("--phi-profile", o.phi_profile, "phi profile: constant | cap | sinusoidal");
    cmd->add_option("--rho", o.rho, "cap profile: sphere radius");
    cmd->add_option("--phi-amp", o.phi_amp, "sinusoidal profile: amplitude");
    cmd->add_option("--phi-k", o.phi_k, "sinusoidal profile: frequency");
    cmd->add_option("--phi-file", o.phi_file, "read phi values (one per boundary vertex)");
    cmd->add_option("--u0", o.u0, "initial guess: compatible | zero");
    cmd->add_option("--tol", o.tol, "Newton residual tolerance");
    cmd->add_option("--max-iter", o.max_iter, "Newton iteration cap");
    cmd->add_flag("--strict", o.strict, "fail instead of warning when hypotheses are violated");
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"constant-mean-curvature graphs with Neumann data: penalized solver"};
    app.require_subcommand(1);
    // '--h' is the mesh-size option, so help must not claim the short '-h'
    app.set_help_flag("--help", "print usage");

    CLI::App* mesh = app.add_subcommand("mesh", "generate or validate a mesh");
    add_common_options(mesh, o, true, true);
    mesh->add_option("--out", o.out_mesh, "write the mesh in text format");
    mesh->add_option("--vtk", o.vtk, "write a legacy-VTK copy");
    mesh->add_option("--report", o.report, "write the summary JSON here (default: stdout)");

    CLI::App* solve = app.add_subcommand("solve", "solve one penalized problem");
    add_common_options(solve, o, true, true);
    add_data_options(solve, o);
    solve->add_option("--eps", o.eps, "penalization parameter");
    solve->add_option("--upsilon", o.upsilon, "zeroth-order shift");
    solve->add_option("--report", o.report, "write the solve report JSON here (default: stdout)");
    solve->add_option("--vtk", o.vtk, "write u and the lambda field as VTK");
    solve->add_option("--dump-coo", o.dump_coo, "dump the Jacobian at the solution (COO text)");

    CLI::App* cont = app.add_subcommand("continuation", "run the eps-continuation");
    add_common_options(cont, o, true, true);
    add_data_options(cont, o);
    cont->add_option("--eps-schedule", o.eps_schedule, "decreasing eps values")
        ->expected(-1);
    cont->add_option("--report", o.report, "write the continuation report JSON here");
    cont->add_option("--vtk", o.vtk, "write the limit graph as VTK");

    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    verify->set_help_flag("--help", "print usage");
    verify->add_option("--config", o.config_path,
                       "flat JSON file with defaults (keys = option names)");
    verify->add_option("--suite", o.suite,
                       "all | geometry | flat | curved | negative-controls | regression");
    verify->add_option("--jobs", o.jobs, "parallel case workers");
    verify->add_option("--seed", o.seed, "base seed for the perturbation runs");
    verify->add_option("--report", o.report, "write the verify report JSON here (default: stdout)");

    try {
        preload_config(argc, argv, o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (mesh->parsed()) return cmd_mesh(o);
        if (solve->parsed()) return cmd_solve(o);
        if (cont->parsed()) return cmd_continuation(o);
        if (verify->parsed()) return cmd_verify(o);
    } catch (const NewtonDiverged& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitSolver;
    } catch (const LinearSolveFailed& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitSolver;
    } catch (const NonFiniteResidual& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return kExitSolver;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
