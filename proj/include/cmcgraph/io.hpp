#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuation.hpp"
#include "verify.hpp"

namespace cmcgraph {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Legacy VTK (ASCII, unstructured grid) export with optional vertex scalars.

inline void write_vtk(std::ostream& os, const TriangulatedDomain& dom,
                      const std::vector<std::pair<std::string, const DiscreteField*>>& fields = {},
                      const std::string& title = "cmcgraph export") {
    for (const auto& [name, f] : fields)
        if (!f || static_cast<int>(f->size()) != dom.num_vertices())
            throw ConfigError("vtk export: field '" + name + "' has wrong size");

    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << std::setprecision(17);
    os << "POINTS " << dom.num_vertices() << " double\n";
    for (const auto& p : dom.vertices) os << p.x() << " " << p.y() << " 0\n";
    const auto m = dom.triangles.size();
    os << "CELLS " << m << " " << 4 * m << "\n";
    for (const auto& t : dom.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    os << "CELL_TYPES " << m << "\n";
    for (size_t i = 0; i < m; ++i) os << "5\n";
    if (!fields.empty()) {
        os << "POINT_DATA " << dom.num_vertices() << "\n";
        for (const auto& [name, f] : fields) {
            os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : *f) os << v << "\n";
        }
    }
}

inline void write_vtk_file(const std::string& path, const TriangulatedDomain& dom,
                           const std::vector<std::pair<std::string, const DiscreteField*>>& fields = {},
                           const std::string& title = "cmcgraph export") {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    write_vtk(os, dom, fields, title);
}

// ---------------------------------------------------------------------------
// JSON reports. All builders are deterministic: key order is fixed and no
// timestamps or hostnames are recorded.

namespace detail {

inline ordered_json field_stats(const DiscreteField& u) {
    ordered_json j;
    double mn = std::numeric_limits<double>::infinity(), mx = -mn, sum = 0.0;
    for (double v : u) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        sum += v;
    }
    j["min"] = u.empty() ? 0.0 : mn;
    j["max"] = u.empty() ? 0.0 : mx;
    j["mean"] = u.empty() ? 0.0 : sum / static_cast<double>(u.size());
    return j;
}

} // namespace detail

inline ordered_json mesh_summary_json(const TriangulatedDomain& dom, const Metric2& metric) {
    const Measures meas = measures(dom, metric);
    const ConvexityReport conv = boundary_convexity(dom, metric);
    ordered_json j;
    j["schema"] = "cmcgraph-mesh-summary/1";
    j["metric"] = metric.name;
    j["num_vertices"] = dom.num_vertices();
    j["num_edges"] =
        static_cast<int>((3 * dom.triangles.size() + dom.boundary_edges.size()) / 2);
    j["num_triangles"] = static_cast<int>(dom.triangles.size());
    j["num_boundary_vertices"] = static_cast<int>(dom.boundary_loop.size());
    j["euler_characteristic"] = 1;
    j["h_mesh"] = dom.h_mesh;
    j["volume"] = meas.volume;
    j["boundary_length"] = meas.boundary_length;
    j["kappa1"] = conv.kappa1;
    j["strictly_convex"] = conv.strictly_convex;
    return j;
}

inline ordered_json solve_report_json(const PenalizedProblem& p, const SolveResult& sol,
                                      double eps, double upsilon) {
    ordered_json j;
    j["schema"] = "cmcgraph-solve-report/1";
    j["eps"] = eps;
    j["upsilon"] = upsilon;
    j["converged"] = sol.converged;
    j["iterations"] = sol.iterations;
    j["residual_history"] = sol.residual_history;
    j["lambda_mean"] = p.lambda_mean(sol.u);
    j["lambda_compatibility"] = p.lambda_from_compatibility(sol.u);
    j["lambda_spread"] = p.lambda_spread(sol.u);
    j["sup_grad"] = sol.sup_grad;
    j["lambda_field"] = p.lambda_field(sol.u);
    j["u"] = detail::field_stats(sol.u);
    {
        const auto& ca = sol.contact_angle;
        double mn = 1.0, mx = -1.0;
        for (double v : ca) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        ordered_json cj;
        cj["min"] = ca.empty() ? 0.0 : mn;
        cj["max"] = ca.empty() ? 0.0 : mx;
        j["contact_cosine"] = cj;
    }
    return j;
}

inline ordered_json continuation_report_json(const ContinuationReport& rep) {
    ordered_json j;
    j["schema"] = "cmcgraph-continuation-report/1";
    j["complete"] = rep.complete;
    j["eps_schedule"] = rep.eps_schedule;
    j["anchor_vertex"] = rep.anchor_vertex;
    j["anchor_u0"] = rep.anchor_u0;
    j["barrier_M"] = rep.barrier_M;
    ordered_json stages = ordered_json::array();
    for (const auto& rec : rep.records) {
        ordered_json s;
        s["eps"] = rec.eps;
        s["upsilon_eps"] = rec.upsilon_eps;
        s["lambda_eps"] = rec.lambda_eps;
        s["lambda_spread"] = rec.lambda_spread;
        s["sup_grad"] = rec.sup_grad;
        s["newton_iterations"] = rec.newton_iterations;
        s["final_residual"] = rec.final_residual;
        stages.push_back(std::move(s));
    }
    j["stages"] = std::move(stages);
    j["lambda_final"] = rep.lambda_final;
    j["lambda_compatibility"] = rep.lambda_compatibility;
    j["lambda_extrapolated"] = rep.lambda_extrapolated;
    j["u_final"] = detail::field_stats(rep.u_final);
    return j;
}

inline ordered_json verify_report_json(const std::vector<VerificationOutcome>& outcomes) {
    ordered_json j;
    j["schema"] = "cmcgraph-verify-report/1";
    j["overall"] = all_passed(outcomes);
    ordered_json arr = ordered_json::array();
    for (const auto& o : outcomes) {
        ordered_json oj;
        oj["case"] = o.case_name;
        oj["overall"] = o.overall;
        ordered_json checks = ordered_json::array();
        for (const auto& c : o.checks) {
            ordered_json cj;
            cj["name"] = c.name;
            cj["passed"] = c.passed;
            cj["details"] = c.details;
            checks.push_back(std::move(cj));
        }
        oj["checks"] = std::move(checks);
        arr.push_back(std::move(oj));
    }
    j["cases"] = std::move(arr);
    return j;
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
}

} // namespace cmcgraph
