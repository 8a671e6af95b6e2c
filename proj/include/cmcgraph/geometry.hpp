#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "jet.hpp"

namespace cmcgraph {

// Gradient bookkeeping for a graph function: du is the covector u_i,
// grad_sq = sigma^{ij} u_i u_j, W = sqrt(1 + |Du|^2).
template <int N> struct GradientData {
    Vec<N> du;
    double grad_sq = 0.0;
    double W = 1.0;
};

template <int N>
inline GradientData<N> make_gradient_data(const GeometryJet<N>& jet, const Vec<N>& du) {
    GradientData<N> g;
    g.du = du;
    g.grad_sq = du.dot(jet.sigma_inv * du);
    g.W = std::sqrt(1.0 + g.grad_sq);
    return g;
}

// D_i D_j u = d_i d_j u - Gamma^k_ij u_k
template <int N>
inline Mat<N> covariant_hessian(const GeometryJet<N>& jet, const Vec<N>& du, const Mat<N>& d2u) {
    Mat<N> h = d2u;
    for (int k = 0; k < N; ++k) h -= jet.christoffel[k] * du[k];
    return h;
}

// H = (sigma^{ik} - D^i u D^k u / W^2) D_i D_k u / W, the divergence of the
// normalized gradient div(Du / sqrt(1+|Du|^2)).
template <int N>
inline double mean_curvature(const GeometryJet<N>& jet, const Vec<N>& du, const Mat<N>& d2u) {
    const GradientData<N> g = make_gradient_data(jet, du);
    const Vec<N> Du = jet.sigma_inv * du; // raised gradient
    const Mat<N> A = jet.sigma_inv - (Du * Du.transpose()) / (g.W * g.W);
    const Mat<N> hess = covariant_hessian(jet, du, d2u);
    return A.cwiseProduct(hess).sum() / g.W;
}

// Normalized flux F^i = sigma^{ik} u_k / W and its exact derivative
// dF^i/du_j = a^{ij} / W^3 with a^{ij} = (1+|Du|^2) sigma^{ij} - D^i u D^j u.
// The derivative is symmetric positive definite for every du.
template <int N>
inline std::pair<Vec<N>, Mat<N>> flux_and_derivative(const GeometryJet<N>& jet, const Vec<N>& du) {
    const GradientData<N> g = make_gradient_data(jet, du);
    const Vec<N> Du = jet.sigma_inv * du;
    const Vec<N> F = Du / g.W;
    const Mat<N> a = (g.W * g.W) * jet.sigma_inv - Du * Du.transpose();
    return {F, Mat<N>(a / (g.W * g.W * g.W))};
}

// Defect of the Ricci identity  u_;kij - u_;ijk = R^l_ikj u_l  at one chart
// point, for a test function given by analytic gradient/Hessian closures.
// The third covariant derivative u_;ijk = (grad_k Hess)_ij is formed with a
// central difference of the covariant Hessian field (step h_fd), so the
// defect decays O(h_fd^2) when the index conventions line up.
template <int N>
inline double ricci_identity_error(const MetricField<N>& metric, const Vec<N>& x,
                                   const std::function<Vec<N>(const Vec<N>&)>& du_fun,
                                   const std::function<Mat<N>(const Vec<N>&)>& d2u_fun,
                                   double h_fd) {
    const GeometryJet<N> jet = build_jet(metric, x, true);
    const Vec<N> du = du_fun(x);

    auto hess_at = [&](const Vec<N>& y) {
        const GeometryJet<N> jy = build_jet(metric, y, false);
        return covariant_hessian(jy, du_fun(y), d2u_fun(y));
    };

    // dH[k](i,j) = d_k (D_i D_j u) by central differences
    Tensor3<N> dH;
    for (int k = 0; k < N; ++k) {
        Vec<N> xp = x, xm = x;
        xp[k] += h_fd;
        xm[k] -= h_fd;
        dH[k] = (hess_at(xp) - hess_at(xm)) / (2.0 * h_fd);
    }

    // u3[k](i,j) = u_;ijk = d_k H_ij - Gamma^m_ki H_mj - Gamma^m_kj H_im
    const Mat<N> H = hess_at(x);
    Tensor3<N> u3;
    for (int k = 0; k < N; ++k) {
        u3[k] = dH[k];
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double c = 0.0;
                for (int m = 0; m < N; ++m)
                    c += jet.christoffel[m](k, i) * H(m, j) + jet.christoffel[m](k, j) * H(i, m);
                u3[k](i, j) -= c;
            }
    }

    double defect = 0.0;
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k)
            for (int j = 0; j < N; ++j) {
                double curv = 0.0;
                for (int l = 0; l < N; ++l) curv += jet.riemann[l][i](k, j) * du[l];
                defect = std::max(defect, std::abs(u3[j](k, i) - u3[k](i, j) - curv));
            }
    return defect;
}

} // namespace cmcgraph
