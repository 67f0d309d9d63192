#pragma once

#include <functional>
#include <optional>
#include <string>

#include "swlab/spectral.hpp"

namespace swlab {

/// A discretized linear operator with diagonal inner-product weights on both
/// sides.  `apply` must agree with `matrix` when the matrix is assembled;
/// `apply_adjoint` is the adjoint in the declared weighted products.
struct OperatorHandle {
    std::string name;
    int rows = 0, cols = 0;
    std::function<Vec(const Vec&)> apply;
    std::function<Vec(const Vec&)> apply_adjoint;
    std::optional<SpMat> matrix;
    Vec domain_weight;  // diagonal of the domain inner product (size cols)
    Vec range_weight;   // diagonal of the range inner product (size rows)

    double domain_dot(const Vec& x, const Vec& y) const {
        return x.cwiseProduct(domain_weight).dot(y);
    }
    double range_dot(const Vec& x, const Vec& y) const {
        return x.cwiseProduct(range_weight).dot(y);
    }

    /// Matrix conjugated to plain Euclidean coordinates:
    /// R^{1/2} M D^{-1/2}; singular data of this matrix are the singular data
    /// of the operator between the weighted spaces.
    SpMat weighted_matrix() const {
        if (!matrix) throw std::runtime_error(name + ": operator has no assembled matrix");
        const Vec dl = range_weight.cwiseSqrt();
        const Vec dr = domain_weight.cwiseSqrt().cwiseInverse();
        return dl.asDiagonal() * (*matrix) * dr.asDiagonal();
    }
};

/// Max relative mismatch between `apply` and the assembled matrix on random
/// probes; used by the construction-time self checks.
inline double apply_matrix_mismatch(const OperatorHandle& op, int probes = 4,
                                    std::uint64_t seed = 321) {
    if (!op.matrix) return 0.0;
    Rng rng(seed);
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
        Vec x(op.cols);
        for (int i = 0; i < op.cols; ++i) x[i] = rng.normal();
        const Vec a = op.apply(x);
        const Vec b = (*op.matrix) * x;
        worst = std::max(worst, (a - b).norm() / std::max(b.norm(), 1e-300));
    }
    return worst;
}

/// Max relative defect of <L u, v>_range - <u, L^dag v>_domain on random probes.
inline double adjoint_pairing_defect(const OperatorHandle& op, int probes = 4,
                                     std::uint64_t seed = 654) {
    Rng rng(seed);
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
        Vec u(op.cols), v(op.rows);
        for (int i = 0; i < op.cols; ++i) u[i] = rng.normal();
        for (int i = 0; i < op.rows; ++i) v[i] = rng.normal();
        const double lhs = op.range_dot(op.apply(u), v);
        const double rhs = op.domain_dot(u, op.apply_adjoint(v));
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

}  // namespace swlab
