#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "swlab/rng.hpp"

namespace swlab {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using DenseMat = Eigen::MatrixXd;

struct SingularPairs {
    Vec values;      // ascending
    DenseMat right;  // columns: right singular vectors (domain side)
};

namespace spectral_detail {

inline DenseMat random_block(int n, int k, std::uint64_t seed) {
    Rng rng(seed);
    DenseMat X(n, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) X(i, j) = rng.normal();
    return X;
}

}  // namespace spectral_detail

/// Largest singular value of A by power iteration on A^T A.
inline double largest_singular_value(const SpMat& A, int iters = 200, std::uint64_t seed = 12345) {
    Vec x = spectral_detail::random_block(static_cast<int>(A.cols()), 1, seed).col(0);
    x.normalize();
    double lam = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vec y = A.transpose() * (A * x);
        const double nl = y.norm();
        if (nl == 0.0) return 0.0;
        y /= nl;
        if (std::abs(nl - lam) <= 1e-12 * std::max(nl, 1.0) && it > 8) {
            lam = nl;
            break;
        }
        lam = nl;
        x = y;
    }
    return std::sqrt(lam);
}

/// k smallest singular values and right singular vectors of A via
/// shift-inverted subspace iteration on A^T A.  Deterministic given the seed.
inline SingularPairs smallest_singular_pairs(const SpMat& A, int k, std::uint64_t seed = 6789,
                                             int max_iters = 120) {
    const int n = static_cast<int>(A.cols());
    k = std::min(k, n);
    SpMat AtA = SpMat(A.transpose()) * A;
    const double smax = largest_singular_value(A);
    const double shift = std::max(smax * smax, 1.0) * 1e-14;
    SpMat M = AtA;
    for (int i = 0; i < n; ++i) M.coeffRef(i, i) += shift;
    M.makeCompressed();
    Eigen::SimplicialLDLT<SpMat> solver(M);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("smallest_singular_pairs: factorization failed");

    DenseMat X = spectral_detail::random_block(n, k, seed);
    Eigen::HouseholderQR<DenseMat> qr0(X);
    X = qr0.householderQ() * DenseMat::Identity(n, k);

    Vec ritz_prev = Vec::Zero(k);
    for (int it = 0; it < max_iters; ++it) {
        DenseMat Y = solver.solve(X);
        Eigen::HouseholderQR<DenseMat> qr(Y);
        X = qr.householderQ() * DenseMat::Identity(n, k);
        // Ritz values of A^T A on the subspace.
        DenseMat B = X.transpose() * (AtA * X);
        B = 0.5 * (B + B.transpose());
        Eigen::SelfAdjointEigenSolver<DenseMat> eig(B);
        Vec ritz = eig.eigenvalues();
        const double delta = (ritz - ritz_prev).cwiseAbs().maxCoeff();
        const double scale = std::max(ritz.cwiseAbs().maxCoeff(), 1e-30);
        X = X * eig.eigenvectors();
        ritz_prev = ritz;
        // The small Ritz values converge almost immediately under the
        // inverted iteration; the top of the window only needs a few digits
        // for gap ratios.
        if (it > 4 && delta <= 1e-7 * scale) break;
    }

    DenseMat B = X.transpose() * (AtA * X);
    B = 0.5 * (B + B.transpose());
    Eigen::SelfAdjointEigenSolver<DenseMat> eig(B);
    SingularPairs out;
    out.values = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    out.right = X * eig.eigenvectors();
    return out;
}

}  // namespace swlab
