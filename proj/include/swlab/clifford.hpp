#pragma once

#include <array>
#include <complex>

#include "swlab/grid.hpp"

namespace swlab {

/// 2x2 complex matrix in row-major order {m00, m01, m10, m11}.
using Mat2 = std::array<complexd, 4>;

inline Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline Mat2 operator*(const complexd& s, const Mat2& a) {
    return {s * a[0], s * a[1], s * a[2], s * a[3]};
}
inline Mat2 matmul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}
inline std::array<complexd, 2> matvec(const Mat2& a, const std::array<complexd, 2>& v) {
    return {a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]};
}
inline double frobenius_norm_sq(const Mat2& a) {
    return std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]) + std::norm(a[3]);
}
inline complexd trace(const Mat2& a) { return a[0] + a[3]; }

// su(2) basis of Eq (3.1); quantum-mechanics sign on gamma2.
inline constexpr Mat2 kGamma1{complexd(0, 0), complexd(0, 1), complexd(0, 1), complexd(0, 0)};
inline constexpr Mat2 kGamma2{complexd(0, 0), complexd(1, 0), complexd(-1, 0), complexd(0, 0)};
inline constexpr Mat2 kGamma3{complexd(0, 1), complexd(0, 0), complexd(0, 0), complexd(0, -1)};

inline const Mat2& gamma(int j) {
    static const std::array<Mat2, 3> g{kGamma1, kGamma2, kGamma3};
    return g[j - 1];
}

/// The sign fixed so that the flat n=0 configuration solves the discrete
/// equations with zero residual; see sigma_map and the curvature assembly.
inline constexpr double kSigmaSign = +1.0;

/// rho on 1-forms: sum_j c_j dx_j -> sum_j c_j gamma_j (complex coefficients
/// allowed; imaginary-valued forms are passed as their complex components).
inline Mat2 clifford_rho(const std::array<complexd, 3>& one_form) {
    Mat2 m{};
    for (int j = 0; j < 3; ++j) {
        m = m + one_form[j] * gamma(j + 1);
    }
    return m;
}

/// rho on 2-forms via the Hodge dual, honoring rho(dx1^dx2) = rho(dx3).
/// Components ordered (c12, c23, c31).
inline Mat2 clifford_rho_2form(const std::array<complexd, 3>& two_form) {
    return clifford_rho({two_form[1], two_form[2], two_form[0]});
}

/// Traceless hermitian-symmetrized bilinear of Eq (2.3):
/// sigma(psi, phi) = i * ((psi phi^dag + phi psi^dag)/2)_0.
inline Mat2 sigma_map(const std::array<complexd, 2>& psi, const std::array<complexd, 2>& phi) {
    Mat2 outer{psi[0] * std::conj(phi[0]), psi[0] * std::conj(phi[1]),
               psi[1] * std::conj(phi[0]), psi[1] * std::conj(phi[1])};
    Mat2 outer2{phi[0] * std::conj(psi[0]), phi[0] * std::conj(psi[1]),
                phi[1] * std::conj(psi[0]), phi[1] * std::conj(psi[1])};
    Mat2 sym = 0.5 * (outer + outer2);
    const complexd half_tr = 0.5 * trace(sym);
    sym[0] -= half_tr;
    sym[3] -= half_tr;
    return complexd(0.0, kSigmaSign) * sym;
}

}  // namespace swlab
