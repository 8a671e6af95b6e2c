#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "newton.hpp"

namespace cmcgraph {

// One continuation stage at penalization eps (the solve itself is always the
// upsilon = 0 problem; other upsilon are reached by the exact shift).
struct ContinuationRecord {
    double eps = 0.0;
    double upsilon_eps = 0.0;   // eps * (u_{eps,0}(anchor) - u0(anchor))
    double lambda_eps = 0.0;    // sigma-volume-weighted mean of the lambda field
    double lambda_spread = 0.0; // max - min of the lambda field
    double sup_grad = 0.0;
    double anchor_value = 0.0;  // u_{eps,0} at the anchor vertex
    int newton_iterations = 0;
    double final_residual = 0.0;
};

struct ContinuationReport {
    std::vector<double> eps_schedule;
    std::vector<ContinuationRecord> records;
    int anchor_vertex = -1;
    double anchor_u0 = 0.0;         // normalization target u0(anchor)
    double barrier_M = 0.0;         // 1 + max|u0| + max|div(Du0/W0)|
    double lambda_final = 0.0;      // lambda_eps at the smallest eps
    double lambda_compatibility = 0.0;
    double lambda_extrapolated = 0.0; // linear-in-eps extrapolation of the last two stages
    DiscreteField u_final;          // shifted and anchored solution at the smallest eps
    bool complete = false;
};

// Thrown when a stage fails; carries whatever stages did complete.
class ContinuationAborted : public Error {
public:
    ContinuationAborted(const std::string& msg, ContinuationReport partial_report)
        : Error(msg), partial(std::move(partial_report)) {}
    ContinuationReport partial;
};

// u_{eps,upsilon} = u_{eps,0} - upsilon / eps (exact algebraic shift).
inline DiscreteField shift_solution(const DiscreteField& u_eps0, double eps, double upsilon) {
    if (!(eps > 0.0)) throw ConfigError("shift_solution: eps must be positive");
    DiscreteField u = u_eps0;
    const double c = upsilon / eps;
    for (double& v : u) v -= c;
    return u;
}

// upsilon_eps with u_{eps,upsilon_eps}(anchor) = u0(anchor).
inline double select_upsilon(double u_eps0_anchor, double u0_anchor, double eps) {
    if (!(eps > 0.0)) throw ConfigError("select_upsilon: eps must be positive");
    return eps * (u_eps0_anchor - u0_anchor);
}

// Mesh vertex nearest the vertex centroid (the chart stand-in for a marked
// interior point).
inline int anchor_vertex(const TriangulatedDomain& dom) {
    Vec<2> c = Vec<2>::Zero();
    for (const auto& p : dom.vertices) c += p;
    c /= dom.num_vertices();
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dom.num_vertices(); ++i) {
        const double d = (dom.vertices[i] - c).squaredNorm();
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

// Barrier constant M = 1 + max|u0| + max|div(Du0/W0)|, with the divergence
// realized by the discrete operator of the problem (including the boundary
// flux data). Sub/supersolutions u0 -+ M t bracket the shift family, so the
// selected upsilon must land in (-M, M).
inline double barrier_constant(const PenalizedProblem& p, const DiscreteField& u0) {
    double max_u = 0.0;
    for (double v : u0) max_u = std::max(max_u, std::abs(v));
    double max_div = 0.0;
    for (double v : p.divergence_field(u0)) max_div = std::max(max_div, std::abs(v));
    return 1.0 + max_u + max_div;
}

// Compatible initial surface: u0 = phi_ext * bdist * cutoff(bdist / d0) with
// bdist the chart distance to the nearest boundary vertex (increasing into
// the domain, so the inward normal derivative at the boundary is phi) and a
// C^1 cubic cutoff that removes the profile beyond d0 = d0_factor * inradius.
// Only the anchor value and barrier constant depend on u0, so approximation
// quality is not critical.
inline DiscreteField build_compatible_u0(const TriangulatedDomain& dom,
                                         const std::vector<double>& phi_on_loop,
                                         double d0_factor = 0.3) {
    const int V = dom.num_vertices();
    if (phi_on_loop.size() != dom.boundary_loop.size())
        throw ConfigError("build_compatible_u0: phi size mismatch");

    const BoundaryDistance bd = boundary_distance(dom);
    const double inradius = *std::max_element(bd.dist.begin(), bd.dist.end());
    if (!(inradius > 0.0)) throw DegenerateMesh("mesh has no interior vertex");
    const double d0 = d0_factor * inradius;

    DiscreteField u0(static_cast<size_t>(V), 0.0);
    for (int v = 0; v < V; ++v) {
        const double s = std::min(1.0, bd.dist[static_cast<size_t>(v)] / d0);
        const double cut = 1.0 - s * s * (3.0 - 2.0 * s);
        u0[static_cast<size_t>(v)] =
            phi_on_loop[static_cast<size_t>(bd.nearest_loop_pos[static_cast<size_t>(v)])] *
            bd.dist[static_cast<size_t>(v)] * cut;
    }
    return u0;
}

inline std::vector<double> default_eps_schedule() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

// eps -> 0 continuation: solve the upsilon = 0 problem at each eps, warm
// starting from the previous stage plus the first-order shift
// lambda_prev (1/eps - 1/eps_prev) of the leading eps^-1 mode; then select
// upsilon_eps and output the anchored field at the smallest eps.
inline ContinuationReport run_continuation(const PenalizedProblem& base,
                                           const std::vector<double>& eps_schedule,
                                           const DiscreteField& u0,
                                           const NewtonSettings& settings = {}) {
    if (eps_schedule.empty()) throw ConfigError("continuation: empty eps schedule");
    for (size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0.0)) throw ConfigError("continuation: eps must be positive");
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
            throw ConfigError("continuation: eps schedule must be strictly decreasing");
    }

    ContinuationReport rep;
    rep.eps_schedule = eps_schedule;
    rep.anchor_vertex = anchor_vertex(base.domain());
    rep.anchor_u0 = u0[static_cast<size_t>(rep.anchor_vertex)];
    rep.barrier_M = barrier_constant(base, u0);

    DiscreteField u = u0;
    double lambda_prev = 0.0, eps_prev = 0.0;
    bool have_prev = false;
    for (double eps : eps_schedule) {
        if (have_prev) {
            const double c = lambda_prev * (1.0 / eps - 1.0 / eps_prev);
            for (double& v : u) v += c;
        }
        const PenalizedProblem p = base.with_eps_upsilon(eps, 0.0);
        SolveResult sol;
        try {
            sol = solve_penalized(p, u, settings);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "continuation aborted at eps = " << eps << ": " << e.what();
            throw ContinuationAborted(os.str(), rep);
        }
        if (!sol.converged) {
            std::ostringstream os;
            os << "continuation aborted at eps = " << eps << ": newton hit max_iter at residual "
               << sol.residual_history.back();
            throw ContinuationAborted(os.str(), rep);
        }

        ContinuationRecord rec;
        rec.eps = eps;
        rec.lambda_eps = p.lambda_mean(sol.u);
        rec.lambda_spread = p.lambda_spread(sol.u);
        rec.sup_grad = sol.sup_grad;
        rec.anchor_value = sol.u[static_cast<size_t>(rep.anchor_vertex)];
        rec.upsilon_eps = select_upsilon(rec.anchor_value, rep.anchor_u0, eps);
        rec.newton_iterations = sol.iterations;
        rec.final_residual = sol.residual_history.back();
        rep.records.push_back(rec);

        u = std::move(sol.u);
        lambda_prev = rec.lambda_eps;
        eps_prev = eps;
        have_prev = true;
    }

    const ContinuationRecord& last = rep.records.back();
    rep.lambda_final = last.lambda_eps;
    rep.u_final = shift_solution(u, last.eps, last.upsilon_eps);
    rep.lambda_compatibility =
        base.with_eps_upsilon(last.eps, 0.0).lambda_from_compatibility(u);
    if (rep.records.size() >= 2) {
        const ContinuationRecord& prev = rep.records[rep.records.size() - 2];
        // lambda(eps) ~ lambda0 + c eps  =>  eliminate the linear term
        rep.lambda_extrapolated =
            (last.lambda_eps * prev.eps - prev.lambda_eps * last.eps) / (prev.eps - last.eps);
    } else {
        rep.lambda_extrapolated = rep.lambda_final;
    }
    rep.complete = true;
    return rep;
}

} // namespace cmcgraph
