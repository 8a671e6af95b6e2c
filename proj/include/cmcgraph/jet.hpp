#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "metric.hpp"
#include "tensor.hpp"

namespace cmcgraph {

// Pointwise geometric data at a chart point: metric, inverse, volume density,
// Christoffel symbols, and (optionally) curvature tensors.
//
// Index layout: christoffel[k](i,j) = Gamma^k_ij,
//               riemann[l][i](k,j)  = R^l_ikj,
//               ricci(i,j)          = Ric_ij = R^k_ikj.
template <int N> struct GeometryJet {
    Vec<N> x;
    Mat<N> sigma;
    Mat<N> sigma_inv;
    double sqrt_det = 0.0;
    Tensor3<N> christoffel;
    bool has_curvature = false;
    Tensor4<N> riemann;
    Mat<N> ricci;
};

namespace detail {

// Relative positive-definiteness tolerance (against the trace scale).
inline constexpr double kPdTol = 1e-12;

} // namespace detail

template <int N>
inline GeometryJet<N> build_jet(const MetricField<N>& metric, const Vec<N>& x,
                                bool with_curvature = false) {
    GeometryJet<N> jet;
    jet.x = x;
    jet.sigma = metric.sigma(x);

    Eigen::SelfAdjointEigenSolver<Mat<N>> es(jet.sigma);
    const double scale = std::abs(jet.sigma.trace());
    if (es.eigenvalues().minCoeff() <= detail::kPdTol * std::max(scale, 1e-300))
        throw NonPositiveDefiniteMetric("metric not positive definite at chart point");

    jet.sigma_inv = jet.sigma.inverse();
    jet.sqrt_det = std::sqrt(jet.sigma.determinant());

    // Gamma^k_ij = 1/2 sigma^{kl} (d_i sigma_jl + d_j sigma_il - d_l sigma_ij)
    const Tensor3<N> ds = metric.dsigma(x);
    jet.christoffel = zero_tensor3<N>();
    for (int k = 0; k < N; ++k)
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double s = 0.0;
                for (int l = 0; l < N; ++l)
                    s += jet.sigma_inv(k, l) * (ds[i](j, l) + ds[j](i, l) - ds[l](i, j));
                jet.christoffel[k](i, j) = 0.5 * s;
            }

    if (!with_curvature) return jet;

    // d_m sigma^{kl} = -(sigma^{-1} d_m sigma sigma^{-1})^{kl}
    Tensor3<N> dsinv;
    for (int m = 0; m < N; ++m) dsinv[m] = -jet.sigma_inv * ds[m] * jet.sigma_inv;

    const Tensor4<N> d2s = metric.d2sigma(x); // [k][l](i,j) = d_l d_k sigma_ij

    // d_m Gamma^k_ij
    Tensor4<N> dGamma = zero_tensor4<N>(); // [m][k](i,j)
    for (int m = 0; m < N; ++m)
        for (int k = 0; k < N; ++k)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < N; ++l) {
                        s += dsinv[m](k, l) * (ds[i](j, l) + ds[j](i, l) - ds[l](i, j));
                        s += jet.sigma_inv(k, l) *
                             (d2s[i][m](j, l) + d2s[j][m](i, l) - d2s[l][m](i, j));
                    }
                    dGamma[m][k](i, j) = 0.5 * s;
                }

    // R^l_ikj = d_k Gamma^l_ij - d_j Gamma^l_ik + Gamma^l_km Gamma^m_ij - Gamma^l_jm Gamma^m_ik
    jet.riemann = zero_tensor4<N>();
    for (int l = 0; l < N; ++l)
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < N; ++k)
                for (int j = 0; j < N; ++j) {
                    double s = dGamma[k][l](i, j) - dGamma[j][l](i, k);
                    for (int m = 0; m < N; ++m)
                        s += jet.christoffel[l](k, m) * jet.christoffel[m](i, j) -
                             jet.christoffel[l](j, m) * jet.christoffel[m](i, k);
                    jet.riemann[l][i](k, j) = s;
                }

    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            double s = 0.0;
            for (int k = 0; k < N; ++k) s += jet.riemann[k][i](k, j);
            jet.ricci(i, j) = s;
        }
    jet.has_curvature = true;
    return jet;
}

// Minimum over the sample points of the smallest eigenvalue of Ric relative
// to sigma (generalized eigenproblem Ric v = mu sigma v). Nonnegative (up to
// tolerance) means the curvature hypothesis holds on the sampled set.
template <int N>
inline double ricci_min_eigenvalue(const MetricField<N>& metric,
                                   const std::vector<Vec<N>>& samples) {
    if (samples.empty()) throw ConfigError("ricci_min_eigenvalue: empty sample set");
    double m = std::numeric_limits<double>::infinity();
    for (const auto& x : samples) {
        const GeometryJet<N> jet = build_jet(metric, x, true);
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat<N>> ges(jet.ricci, jet.sigma);
        m = std::min(m, ges.eigenvalues().minCoeff());
    }
    return m;
}

} // namespace cmcgraph
