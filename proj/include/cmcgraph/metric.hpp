#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "errors.hpp"
#include "tensor.hpp"

namespace cmcgraph {

// Metric on a coordinate chart: sigma_ij(x) together with first and second
// spatial derivatives. Derivatives are either analytic closures or central
// finite differences built by with_fd_derivatives().
//
// Layout: dsigma(x)[k](i,j) = d_k sigma_ij, d2sigma(x)[k][l](i,j) = d_l d_k sigma_ij.
template <int N> struct MetricField {
    std::string name = "custom";
    std::function<Mat<N>(const Vec<N>&)> sigma;
    std::function<Tensor3<N>(const Vec<N>&)> dsigma;
    std::function<Tensor4<N>(const Vec<N>&)> d2sigma;

    static constexpr int dim = N;
};

// Central finite differences for metric derivatives. Step is
// h_rel * max(1, |x|_inf) so the stencil scales with the chart coordinates.
template <int N>
inline MetricField<N> with_fd_derivatives(std::function<Mat<N>(const Vec<N>&)> sigma,
                                          double h_rel = 1e-5,
                                          std::string name = "custom-fd") {
    MetricField<N> m;
    m.name = std::move(name);
    m.sigma = sigma;
    m.dsigma = [sigma, h_rel](const Vec<N>& x) {
        const double h = h_rel * std::max(1.0, x.template lpNorm<Eigen::Infinity>());
        Tensor3<N> t = zero_tensor3<N>();
        for (int k = 0; k < N; ++k) {
            Vec<N> xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            t[k] = (sigma(xp) - sigma(xm)) / (2.0 * h);
        }
        return t;
    };
    m.d2sigma = [sigma, h_rel](const Vec<N>& x) {
        const double h = h_rel * std::max(1.0, x.template lpNorm<Eigen::Infinity>());
        Tensor4<N> t = zero_tensor4<N>();
        const Mat<N> s0 = sigma(x);
        for (int k = 0; k < N; ++k) {
            for (int l = k; l < N; ++l) {
                Mat<N> d;
                if (k == l) {
                    Vec<N> xp = x, xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    d = (sigma(xp) - 2.0 * s0 + sigma(xm)) / (h * h);
                } else {
                    Vec<N> xpp = x, xpm = x, xmp = x, xmm = x;
                    xpp[k] += h; xpp[l] += h;
                    xpm[k] += h; xpm[l] -= h;
                    xmp[k] -= h; xmp[l] += h;
                    xmm[k] -= h; xmm[l] -= h;
                    d = (sigma(xpp) - sigma(xpm) - sigma(xmp) + sigma(xmm)) / (4.0 * h * h);
                }
                t[k][l] = d;
                t[l][k] = d;
            }
        }
        return t;
    };
    return m;
}

using Metric2 = MetricField<2>;

inline Metric2 make_euclidean() {
    Metric2 m;
    m.name = "euclidean";
    m.sigma = [](const Vec<2>&) { return Mat<2>::Identity(); };
    m.dsigma = [](const Vec<2>&) { return zero_tensor3<2>(); };
    m.d2sigma = [](const Vec<2>&) { return zero_tensor4<2>(); };
    return m;
}

// Flat plane in polar coordinates (x0 = r, x1 = theta): sigma = diag(1, r^2).
inline Metric2 make_polar_flat() {
    Metric2 m;
    m.name = "polar-flat";
    m.sigma = [](const Vec<2>& x) {
        Mat<2> s = Mat<2>::Zero();
        s(0, 0) = 1.0;
        s(1, 1) = x[0] * x[0];
        return s;
    };
    m.dsigma = [](const Vec<2>& x) {
        Tensor3<2> t = zero_tensor3<2>();
        t[0](1, 1) = 2.0 * x[0];
        return t;
    };
    m.d2sigma = [](const Vec<2>&) {
        Tensor4<2> t = zero_tensor4<2>();
        t[0][0](1, 1) = 2.0;
        return t;
    };
    return m;
}

// Round sphere of radius rho, geodesic polar chart (x0 = geodesic distance,
// x1 = longitude): sigma = diag(1, rho^2 sin^2(x0/rho)). Gauss curvature 1/rho^2.
inline Metric2 make_sphere(double rho = 1.0) {
    if (!(rho > 0.0)) throw ConfigError("sphere metric: radius must be positive");
    Metric2 m;
    m.name = "sphere";
    m.sigma = [rho](const Vec<2>& x) {
        Mat<2> s = Mat<2>::Zero();
        const double sn = std::sin(x[0] / rho);
        s(0, 0) = 1.0;
        s(1, 1) = rho * rho * sn * sn;
        return s;
    };
    m.dsigma = [rho](const Vec<2>& x) {
        Tensor3<2> t = zero_tensor3<2>();
        t[0](1, 1) = rho * std::sin(2.0 * x[0] / rho);
        return t;
    };
    m.d2sigma = [rho](const Vec<2>& x) {
        Tensor4<2> t = zero_tensor4<2>();
        t[0][0](1, 1) = 2.0 * std::cos(2.0 * x[0] / rho);
        return t;
    };
    return m;
}

// Hyperbolic plane, geodesic polar chart: sigma = diag(1, sinh^2 x0).
// Gauss curvature -1; used as a negative control for the Ricci hypothesis.
inline Metric2 make_hyperbolic() {
    Metric2 m;
    m.name = "hyperbolic";
    m.sigma = [](const Vec<2>& x) {
        Mat<2> s = Mat<2>::Zero();
        const double sh = std::sinh(x[0]);
        s(0, 0) = 1.0;
        s(1, 1) = sh * sh;
        return s;
    };
    m.dsigma = [](const Vec<2>& x) {
        Tensor3<2> t = zero_tensor3<2>();
        t[0](1, 1) = std::sinh(2.0 * x[0]);
        return t;
    };
    m.d2sigma = [](const Vec<2>& x) {
        Tensor4<2> t = zero_tensor4<2>();
        t[0][0](1, 1) = 2.0 * std::cosh(2.0 * x[0]);
        return t;
    };
    return m;
}

// Conformal perturbation of the flat plane: sigma = e^{-2c|x|^2} I.
// Gauss curvature K = 4c e^{2c|x|^2}, so c >= 0 gives Ric >= 0.
inline Metric2 make_perturbed_flat(double c = 0.05) {
    Metric2 m;
    m.name = "perturbed-flat";
    auto f = [c](const Vec<2>& x) { return std::exp(-2.0 * c * x.squaredNorm()); };
    m.sigma = [f](const Vec<2>& x) { return Mat<2>(f(x) * Mat<2>::Identity()); };
    m.dsigma = [f, c](const Vec<2>& x) {
        Tensor3<2> t = zero_tensor3<2>();
        const double v = f(x);
        for (int k = 0; k < 2; ++k) t[k] = (-4.0 * c * x[k] * v) * Mat<2>::Identity();
        return t;
    };
    m.d2sigma = [f, c](const Vec<2>& x) {
        Tensor4<2> t = zero_tensor4<2>();
        const double v = f(x);
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                const double kl = (k == l) ? 1.0 : 0.0;
                t[k][l] = ((-4.0 * c * kl + 16.0 * c * c * x[k] * x[l]) * v) * Mat<2>::Identity();
            }
        return t;
    };
    return m;
}

struct MetricParams {
    double radius = 1.0; // sphere
    double bump = 0.05;  // perturbed-flat
};

// Metric zoo addressable by name (CLI configs go through here).
inline Metric2 make_metric(const std::string& name, const MetricParams& p = {}) {
    if (name == "euclidean") return make_euclidean();
    if (name == "polar-flat") return make_polar_flat();
    if (name == "sphere") return make_sphere(p.radius);
    if (name == "hyperbolic") return make_hyperbolic();
    if (name == "perturbed-flat") return make_perturbed_flat(p.bump);
    throw ConfigError("unknown metric name: '" + name + "'");
}

} // namespace cmcgraph
