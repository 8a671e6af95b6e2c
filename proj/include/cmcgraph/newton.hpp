#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "assembly.hpp"

namespace cmcgraph {

struct NewtonSettings {
    double tol_residual = 1e-10;       // inf-norm of the assembled residual
    int max_iter = 50;
    double backtrack_factor = 0.5;
    double min_step = 1.0 / 1048576.0; // 2^-20
    double linear_rtol = 1e-12;        // linear-solve residual contract
};

struct SolveResult {
    DiscreteField u;
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history; // inf-norms, first entry = initial residual
    double sup_grad = 0.0;
    std::vector<double> lambda_field;     // per vertex: upsilon + eps u
    std::vector<double> contact_angle;    // per boundary vertex (loop order)
};

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double two_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Sparse LU with iterative refinement. The refined solve must meet
// ||J d - r|| <= rtol ||r|| up to the floating-point attainability floor
// eps_mach * (||J|| ||d|| + ||r||); otherwise LinearSolveFailed.
inline Eigen::VectorXd solve_linear(const SparseMat& J, const Eigen::VectorXd& rhs, double rtol) {
    Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw LinearSolveFailed("sparse LU factorization failed");

    double norm_J = 0.0; // inf-norm = max abs row sum; iterate columns of J^T
    {
        Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(J.rows());
        for (int k = 0; k < J.outerSize(); ++k)
            for (SparseMat::InnerIterator it(J, k); it; ++it) rowsum[it.row()] += std::abs(it.value());
        norm_J = rowsum.maxCoeff();
    }

    Eigen::VectorXd d = lu.solve(rhs);
    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    constexpr double eps_mach = std::numeric_limits<double>::epsilon();
    for (int pass = 0; pass < 3; ++pass) {
        const Eigen::VectorXd r_lin = rhs - J * d;
        const double floor = 64.0 * eps_mach *
                             (norm_J * d.lpNorm<Eigen::Infinity>() + rhs_norm);
        if (r_lin.lpNorm<Eigen::Infinity>() <= std::max(rtol * rhs_norm, floor)) return d;
        d += lu.solve(r_lin);
    }
    const double final_res = (rhs - J * d).lpNorm<Eigen::Infinity>();
    const double floor = 64.0 * eps_mach * (norm_J * d.lpNorm<Eigen::Infinity>() + rhs_norm);
    if (final_res <= std::max(rtol * rhs_norm, floor)) return d;
    std::ostringstream os;
    os << "linear solve residual " << final_res << " exceeds contract (rhs norm " << rhs_norm << ")";
    throw LinearSolveFailed(os.str());
}

} // namespace detail

// Damped Newton iteration on the penalized problem. The line search measures
// sufficient decrease in the Euclidean norm of the residual,
// ||R(u + a d)||_2 < (1 - 1e-4 a) ||R(u)||_2, because the Newton direction
// with an (almost) exact linear solve is always a descent direction for that
// norm; convergence and the recorded history use the inf-norm. The step is
// halved down to min_step. If even the shortest step fails, the iteration
// switches to a pseudo-transient regime: a multiple of the lumped mass is
// added to the Jacobian (an implicit step of the associated parabolic flow,
// accepted on any strict decrease), and the damping decays once full steps
// are accepted again, restoring plain Newton near the solution.
// NewtonDiverged is thrown only when damping escalation is exhausted.
// Hitting max_iter with a still-decreasing residual returns converged = false.
inline SolveResult solve_penalized(const PenalizedProblem& p, const DiscreteField& u_init,
                                   const NewtonSettings& s = {}) {
    if (!(s.tol_residual > 0.0) || s.max_iter < 1)
        throw ConfigError("newton settings: tol_residual > 0 and max_iter >= 1 required");
    for (double v : u_init)
        if (!std::isfinite(v)) throw ConfigError("newton: non-finite initial field");

    SolveResult out;
    out.u = u_init;
    std::vector<double> R = p.residual(out.u);
    double rn = detail::inf_norm(R);
    double rn2 = detail::two_norm(R);
    out.residual_history.push_back(rn);

    const int n = p.domain().num_vertices();
    SparseMat mass_diag(n, n);
    {
        const std::vector<double> lump = p.lumped_mass();
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, lump[static_cast<size_t>(i)]);
        mass_diag.setFromTriplets(trips.begin(), trips.end());
    }
    double mu = 0.0; // pseudo-transient damping (0 = plain Newton)
    int escalations = 0;

    while (rn > s.tol_residual && out.iterations < s.max_iter) {
        SparseMat J = p.jacobian(out.u);
        if (mu > 0.0) J = J + mu * mass_diag;
        Eigen::VectorXd rhs(J.rows());
        for (int i = 0; i < J.rows(); ++i) rhs[i] = -R[static_cast<size_t>(i)];
        const Eigen::VectorXd d = detail::solve_linear(J, rhs, s.linear_rtol);

        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= s.min_step) {
            DiscreteField u_try = out.u;
            for (size_t i = 0; i < u_try.size(); ++i) u_try[i] += alpha * d[static_cast<Eigen::Index>(i)];
            bool finite = true;
            std::vector<double> R_try;
            try {
                R_try = p.residual(u_try);
            } catch (const NonFiniteResidual&) {
                finite = false;
            }
            if (finite) {
                const double rn2_try = detail::two_norm(R_try);
                const double required =
                    (mu > 0.0) ? (1.0 - 1e-12) * rn2 : (1.0 - 1e-4 * alpha) * rn2;
                if (rn2_try < required) {
                    out.u = std::move(u_try);
                    R = std::move(R_try);
                    rn = detail::inf_norm(R);
                    rn2 = rn2_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= s.backtrack_factor;
        }
        if (!accepted) {
            mu = (mu == 0.0) ? 1.0 : 16.0 * mu;
            if (++escalations > 60 || mu > 1e12) {
                std::ostringstream os;
                os << "newton line search stalled at residual " << rn << " (iteration "
                   << out.iterations << ", damping " << mu << ")";
                throw NewtonDiverged(os.str());
            }
            continue; // retry this iteration with a damped Jacobian
        }
        escalations = 0;
        if (mu > 0.0) {
            // decay the damping after every accepted step (faster on full
            // steps) so the iteration returns to plain Newton
            mu *= (alpha == 1.0) ? 0.25 : 0.5;
            if (mu <= 1e-8) mu = 0.0;
        }
        ++out.iterations;
        out.residual_history.push_back(rn);
    }

    out.converged = rn <= s.tol_residual;
    out.sup_grad = p.sup_grad(out.u);
    out.lambda_field = p.lambda_field(out.u);
    out.contact_angle = p.contact_angle(out.u);
    return out;
}

} // namespace cmcgraph
