#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include "geometry.hpp"
#include "mesh.hpp"

namespace cmcgraph {

using SparseMat = Eigen::SparseMatrix<double>;
using DiscreteField = std::vector<double>; // one value per mesh vertex

// One instance of the penalized problem: find u with
//   div(Du / sqrt(1+|Du|^2)) = upsilon + eps u   in Omega,
//   D_nu u = phi                                 on the boundary (nu inward).
//
// Discretized with piecewise-linear elements, one-point (centroid) volume
// quadrature and two-point Gauss boundary quadrature. The Neumann data enters
// through the conormal flux <F, nu> = phi / W_b with
// W_b = sqrt(1 + t^2 + phi^2), t the tangential slope along the boundary edge.
//
// The residual of the weak form (test function v_k) is
//   R_k = sum_T <F(Du), Dv_k>_sigma w_T
//       + sum_T (upsilon + eps u(c_T)) v_k(c_T) w_T
//       + sum_e int_e (phi / W_b) v_k dA_sigma ,
// which vanishes exactly at the discrete solution.
class PenalizedProblem {
public:
    PenalizedProblem(MetricField<2> metric, std::shared_ptr<const TriangulatedDomain> dom,
                     std::vector<double> phi_on_loop, double eps, double upsilon)
        : metric_(std::move(metric)), dom_(std::move(dom)), phi_(std::move(phi_on_loop)),
          eps_(eps), upsilon_(upsilon) {
        if (!dom_) throw ConfigError("penalized problem: null domain");
        if (!(eps_ > 0.0)) throw ConfigError("penalized problem: eps must be positive");
        if (phi_.size() != dom_->boundary_loop.size())
            throw ConfigError("penalized problem: phi must have one value per boundary vertex");
        cache_ = std::make_shared<const Cache>(build_cache());
    }

    // Cheap copy sharing the geometric cache; eps / upsilon replaced.
    PenalizedProblem with_eps_upsilon(double eps, double upsilon) const {
        if (!(eps > 0.0)) throw ConfigError("penalized problem: eps must be positive");
        PenalizedProblem p(*this);
        p.eps_ = eps;
        p.upsilon_ = upsilon;
        return p;
    }

    const TriangulatedDomain& domain() const { return *dom_; }
    std::shared_ptr<const TriangulatedDomain> domain_ptr() const { return dom_; }
    const MetricField<2>& metric() const { return metric_; }
    const std::vector<double>& phi() const { return phi_; }
    double eps() const { return eps_; }
    double upsilon() const { return upsilon_; }
    double volume() const { return cache_->volume; }

    DiscreteField zero_field() const {
        return DiscreteField(static_cast<size_t>(dom_->num_vertices()), 0.0);
    }

    std::vector<double> residual(const DiscreteField& u) const {
        check_field(u);
        std::vector<double> R(u.size(), 0.0);
        for (const auto& T : cache_->tris) {
            const Vec<2> du = T.g[0] * u[T.v[0]] + T.g[1] * u[T.v[1]] + T.g[2] * u[T.v[2]];
            const Vec<2> Du = T.sigma_inv * du;
            const double W = std::sqrt(1.0 + du.dot(Du));
            const Vec<2> F = Du / W;
            const double ubar = (u[T.v[0]] + u[T.v[1]] + u[T.v[2]]) / 3.0;
            const double load = (upsilon_ + eps_ * ubar) * T.omega / 3.0;
            for (int i = 0; i < 3; ++i) R[T.v[i]] += T.omega * F.dot(T.g[i]) + load;
        }
        for (const auto& E : cache_->edges) {
            const double t = (u[E.b] - u[E.a]) / E.ell;
            for (int g = 0; g < 2; ++g) {
                const double Wb = std::sqrt(1.0 + t * t + E.phi_g[g] * E.phi_g[g]);
                const double c = 0.5 * E.dens[g] * E.phi_g[g] / Wb;
                R[E.a] += c * (1.0 - E.s[g]);
                R[E.b] += c * E.s[g];
            }
        }
        for (double r : R)
            if (!std::isfinite(r)) throw NonFiniteResidual("residual has non-finite entries");
        return R;
    }

    // Exact derivative of residual(). Volume kernel a^{ij}/W^3 and the mass
    // term are symmetric; the boundary block differentiates phi/W_b through
    // the tangential slope and is symmetric only where phi * t = 0.
    SparseMat jacobian(const DiscreteField& u) const {
        check_field(u);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(cache_->tris.size() * 9 + cache_->edges.size() * 8);
        for (const auto& T : cache_->tris) {
            const Vec<2> du = T.g[0] * u[T.v[0]] + T.g[1] * u[T.v[1]] + T.g[2] * u[T.v[2]];
            const Vec<2> Du = T.sigma_inv * du;
            const double W2 = 1.0 + du.dot(Du);
            const double W = std::sqrt(W2);
            const Mat<2> K = (W2 * T.sigma_inv - Du * Du.transpose()) / (W2 * W);
            const double mass = eps_ * T.omega / 9.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    trip.emplace_back(T.v[i], T.v[j], T.omega * T.g[i].dot(K * T.g[j]) + mass);
        }
        for (const auto& E : cache_->edges) {
            const double t = (u[E.b] - u[E.a]) / E.ell;
            for (int g = 0; g < 2; ++g) {
                const double Wb2 = 1.0 + t * t + E.phi_g[g] * E.phi_g[g];
                const double dcdt = -E.phi_g[g] * t / (Wb2 * std::sqrt(Wb2)); // d(phi/Wb)/dt
                const double shape[2] = {1.0 - E.s[g], E.s[g]};
                const int row[2] = {E.a, E.b};
                const double dt_du[2] = {-1.0 / E.ell, 1.0 / E.ell};
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c)
                        trip.emplace_back(row[r], row[c],
                                          0.5 * E.dens[g] * dcdt * dt_du[c] * shape[r]);
            }
        }
        SparseMat J(dom_->num_vertices(), dom_->num_vertices());
        J.setFromTriplets(trip.begin(), trip.end());
        return J;
    }

    // lambda * Vol_sigma = -surface integral of phi / W_b (inward normal),
    // forced by the divergence theorem.
    double lambda_from_compatibility(const DiscreteField& u) const {
        check_field(u);
        double s = 0.0;
        for (const auto& E : cache_->edges) {
            const double t = (u[E.b] - u[E.a]) / E.ell;
            for (int g = 0; g < 2; ++g) {
                const double Wb = std::sqrt(1.0 + t * t + E.phi_g[g] * E.phi_g[g]);
                s += 0.5 * E.dens[g] * E.phi_g[g] / Wb;
            }
        }
        return -s / cache_->volume;
    }

    // Per-vertex field upsilon + eps u.
    std::vector<double> lambda_field(const DiscreteField& u) const {
        check_field(u);
        std::vector<double> f(u.size());
        for (size_t i = 0; i < u.size(); ++i) f[i] = upsilon_ + eps_ * u[i];
        return f;
    }

    // sigma-volume-weighted mean of the lambda field (centroid rule; equals
    // the lumped-mass vertex mean identically).
    double lambda_mean(const DiscreteField& u) const {
        check_field(u);
        double s = 0.0;
        for (const auto& T : cache_->tris) {
            const double ubar = (u[T.v[0]] + u[T.v[1]] + u[T.v[2]]) / 3.0;
            s += (upsilon_ + eps_ * ubar) * T.omega;
        }
        return s / cache_->volume;
    }

    double lambda_spread(const DiscreteField& u) const {
        const std::vector<double> f = lambda_field(u);
        const auto [mn, mx] = std::minmax_element(f.begin(), f.end());
        return *mx - *mn;
    }

    // sup over quadrature (centroid) points of |Du|_sigma.
    double sup_grad(const DiscreteField& u) const {
        check_field(u);
        double m = 0.0;
        for (const auto& T : cache_->tris) {
            const Vec<2> du = T.g[0] * u[T.v[0]] + T.g[1] * u[T.v[1]] + T.g[2] * u[T.v[2]];
            m = std::max(m, std::sqrt(du.dot(T.sigma_inv * du)));
        }
        return m;
    }

    // Lumped sigma-mass per vertex: m_k = sum over adjacent triangles of w_T/3.
    std::vector<double> lumped_mass() const {
        std::vector<double> m(static_cast<size_t>(dom_->num_vertices()), 0.0);
        for (const auto& T : cache_->tris)
            for (int i = 0; i < 3; ++i) m[T.v[i]] += T.omega / 3.0;
        return m;
    }

    // Discrete div(Du / W) per vertex, from the weak identity
    //   int div(F) v_k = -( int <F, Dv_k> + boundary flux term )
    // divided by the lumped mass. On the boundary the conormal flux uses the
    // prescribed phi, so for a compatible field this approximates the
    // divergence consistently up to the boundary.
    std::vector<double> divergence_field(const DiscreteField& u) const {
        check_field(u);
        std::vector<double> R(u.size(), 0.0);
        for (const auto& T : cache_->tris) {
            const Vec<2> du = T.g[0] * u[T.v[0]] + T.g[1] * u[T.v[1]] + T.g[2] * u[T.v[2]];
            const Vec<2> Du = T.sigma_inv * du;
            const double W = std::sqrt(1.0 + du.dot(Du));
            for (int i = 0; i < 3; ++i) R[T.v[i]] += T.omega * Du.dot(T.g[i]) / W;
        }
        for (const auto& E : cache_->edges) {
            const double t = (u[E.b] - u[E.a]) / E.ell;
            for (int g = 0; g < 2; ++g) {
                const double Wb = std::sqrt(1.0 + t * t + E.phi_g[g] * E.phi_g[g]);
                const double c = 0.5 * E.dens[g] * E.phi_g[g] / Wb;
                R[E.a] += c * (1.0 - E.s[g]);
                R[E.b] += c * E.s[g];
            }
        }
        const std::vector<double> m = lumped_mass();
        std::vector<double> div(u.size());
        for (size_t k = 0; k < u.size(); ++k) div[k] = -R[k] / m[k];
        return div;
    }

    // Cosine of the contact angle at each boundary vertex: phi / W_b with the
    // vertex tangential slope taken as the mean of the adjacent edge slopes.
    // Aligned with domain().boundary_loop.
    std::vector<double> contact_angle(const DiscreteField& u) const {
        check_field(u);
        const int nb = static_cast<int>(dom_->boundary_loop.size());
        std::vector<double> cosines(static_cast<size_t>(nb));
        for (int i = 0; i < nb; ++i) {
            const auto& Eout = cache_->edges[static_cast<size_t>(i)];
            const auto& Ein = cache_->edges[static_cast<size_t>((i + nb - 1) % nb)];
            const double t_out = (u[Eout.b] - u[Eout.a]) / Eout.ell;
            const double t_in = (u[Ein.b] - u[Ein.a]) / Ein.ell;
            const double tv = 0.5 * (t_in + t_out);
            const double Wb = std::sqrt(1.0 + tv * tv + phi_[static_cast<size_t>(i)] * phi_[static_cast<size_t>(i)]);
            cosines[static_cast<size_t>(i)] = phi_[static_cast<size_t>(i)] / Wb;
        }
        return cosines;
    }

    // Coordinate-format dump of the Jacobian (1-based indices), debug aid.
    void dump_coo(const DiscreteField& u, std::ostream& os) const {
        const SparseMat J = jacobian(u);
        os.precision(17);
        for (int k = 0; k < J.outerSize(); ++k)
            for (SparseMat::InnerIterator it(J, k); it; ++it)
                os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
    }

private:
    struct TriData {
        std::array<int, 3> v;
        std::array<Vec<2>, 3> g; // covector gradients of the hat functions
        double omega;            // sqrt(det sigma(centroid)) * chart area
        Mat<2> sigma_inv;        // at the centroid
    };
    struct EdgeData {
        int a, b;
        double ell;       // sigma length (2-pt Gauss)
        double s[2];      // Gauss parameters on [0,1]
        double dens[2];   // sqrt(d^T sigma d) at the Gauss points
        double phi_g[2];  // interpolated phi there
    };
    struct Cache {
        std::vector<TriData> tris;
        std::vector<EdgeData> edges; // loop order: edge i runs loop[i] -> loop[i+1]
        double volume = 0.0;
    };

    Cache build_cache() const {
        Cache c;
        c.tris.reserve(dom_->triangles.size());
        for (const auto& t : dom_->triangles) {
            TriData td;
            td.v = t;
            const Vec<2>&p0 = dom_->vertices[t[0]], &p1 = dom_->vertices[t[1]], &p2 = dom_->vertices[t[2]];
            Mat<2> E;
            E.col(0) = p1 - p0;
            E.col(1) = p2 - p0;
            const double area = 0.5 * E.determinant();
            if (!(area > 0.0)) throw DegenerateMesh("non-positive triangle area in assembly");
            const Mat<2> Einv = E.inverse();
            td.g[1] = Einv.row(0).transpose();
            td.g[2] = Einv.row(1).transpose();
            td.g[0] = -td.g[1] - td.g[2];
            const Vec<2> centroid = (p0 + p1 + p2) / 3.0;
            const GeometryJet<2> jet = build_jet(metric_, centroid, false);
            td.sigma_inv = jet.sigma_inv;
            td.omega = jet.sqrt_det * area;
            c.volume += td.omega;
            c.tris.push_back(td);
        }
        // edges in loop order: edge i runs loop[i] -> loop[i+1]
        c.edges.reserve(dom_->boundary_edges.size());
        const int nb = static_cast<int>(dom_->boundary_loop.size());
        for (int i = 0; i < nb; ++i) {
            EdgeData ed;
            ed.a = dom_->boundary_loop[static_cast<size_t>(i)];
            ed.b = dom_->boundary_loop[static_cast<size_t>((i + 1) % nb)];
            const Vec<2>&xa = dom_->vertices[ed.a], &xb = dom_->vertices[ed.b];
            const Vec<2> d = xb - xa;
            ed.s[0] = detail::kGaussA;
            ed.s[1] = detail::kGaussB;
            const double pa = phi_[static_cast<size_t>(dom_->loop_position(ed.a))];
            const double pb = phi_[static_cast<size_t>(dom_->loop_position(ed.b))];
            ed.ell = 0.0;
            for (int g = 0; g < 2; ++g) {
                const Vec<2> x = (1.0 - ed.s[g]) * xa + ed.s[g] * xb;
                ed.dens[g] = std::sqrt(d.dot(metric_.sigma(x) * d));
                ed.phi_g[g] = (1.0 - ed.s[g]) * pa + ed.s[g] * pb;
                ed.ell += 0.5 * ed.dens[g];
            }
            if (!(ed.ell > 0.0)) throw DegenerateMesh("zero-length boundary edge in assembly");
            c.edges.push_back(ed);
        }
        return c;
    }

    void check_field(const DiscreteField& u) const {
        if (static_cast<int>(u.size()) != dom_->num_vertices())
            throw ConfigError("discrete field size does not match vertex count");
    }

    MetricField<2> metric_;
    std::shared_ptr<const TriangulatedDomain> dom_;
    std::vector<double> phi_;
    double eps_;
    double upsilon_;
    std::shared_ptr<const Cache> cache_;
};

} // namespace cmcgraph
