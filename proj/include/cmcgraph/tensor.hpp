#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace cmcgraph {

template <int N> using Vec = Eigen::Matrix<double, N, 1>;
template <int N> using Mat = Eigen::Matrix<double, N, N>;

// Rank-3 array indexed as t3[k](i,j); which slot is "upper" is documented
// at each use site (e.g. christoffel[k](i,j) = Gamma^k_ij).
template <int N> using Tensor3 = std::array<Mat<N>, N>;

// Rank-4 array indexed as t4[a][b](c,d).
template <int N> using Tensor4 = std::array<std::array<Mat<N>, N>, N>;

template <int N> inline Tensor3<N> zero_tensor3() {
    Tensor3<N> t;
    for (int k = 0; k < N; ++k) t[k].setZero();
    return t;
}

template <int N> inline Tensor4<N> zero_tensor4() {
    Tensor4<N> t;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) t[a][b].setZero();
    return t;
}

// The array length is deduced separately from N: std::array's size parameter
// is std::size_t, so deducing it as the int N would fail.
template <int N, std::size_t M> inline double max_abs(const std::array<Mat<N>, M>& t) {
    double m = 0.0;
    for (const auto& slice : t) m = std::max(m, slice.cwiseAbs().maxCoeff());
    return m;
}

template <int N, std::size_t M1, std::size_t M2>
inline double max_abs(const std::array<std::array<Mat<N>, M1>, M2>& t) {
    double m = 0.0;
    for (const auto& row : t)
        for (const auto& slice : row) m = std::max(m, slice.cwiseAbs().maxCoeff());
    return m;
}

// Largest |t[k](i,j) - t[k](j,i)| over all slots: symmetry defect in the
// trailing index pair.
template <int N, std::size_t M>
inline double symmetry_defect(const std::array<Mat<N>, M>& t) {
    double m = 0.0;
    for (const auto& slice : t)
        m = std::max(m, (slice - slice.transpose()).cwiseAbs().maxCoeff());
    return m;
}

} // namespace cmcgraph
