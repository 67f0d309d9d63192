#pragma once

#include <Eigen/SparseLU>

#include "swlab/cutoff.hpp"
#include "swlab/linear_ops.hpp"

namespace swlab {

// ---------------------------------------------------------------------------
// One-dimensional weighted Fredholm laboratory.
//
// The operator d/df between the polynomially weighted spaces L^2_{k+1;eps-1}
// and L^2_{k;eps} is studied after the change of variables ds = df / sigma(f),
// under which sigma becomes exponential in s and the conjugated operator is
//
//   T g = dg/ds - (eps - 1/2) sigma'(f(s)) g,
//
// acting between plain L^2(ds) spaces.  The zeroth-order coefficient tends to
// -/+ (eps - 1/2)/R at the two ends, so genuine null modes decay into the
// interior while truncation artifacts hug the boundary; a square one-sided
// difference matrix with no boundary condition plus interior-localization
// filtering recovers the index.
// ---------------------------------------------------------------------------

enum class DVariant { Plain, Adjoint, Extended, Perturbed };

struct Weighted1DSpace {
    double L;        // interval [-L, L]
    int m;           // node count
    WeightSpec spec; // epsilon and R; the axis tag is unused here

    Weighted1DSpace(double L_, int m_, double eps, double R)
        : L(L_), m(m_), spec(eps, R, WeightAxis::X1) {
        require(L_ >= 20.0 * R, "Weighted1DSpace: L must be at least 20 R");
        require(m_ >= 1024, "Weighted1DSpace: need at least 1024 nodes");
        require(eps > 1.0 && eps < 1.5, "Weighted1DSpace: epsilon must lie in (1, 3/2)");
    }

    double f(int i) const { return -L + 2.0 * L * i / (m - 1); }
    double df() const { return 2.0 * L / (m - 1); }
};

struct Fredholm1DOperator {
    OperatorHandle op;
    Weighted1DSpace space;
    DVariant variant;
    int ext_cols = 0;          // extension dofs appended to the domain
    std::vector<double> s;     // exact cumulative-trapezoid s-coordinates
    Vec domain_mask, range_mask;
};

/// Conjugated operator matrix for the requested variant.  `nu` supplies the
/// perturbation for DVariant::Perturbed (a function of f).
inline Fredholm1DOperator build_weighted_d(const Weighted1DSpace& space, DVariant variant,
                                           const std::function<double(double)>& nu = {}) {
    const int m = space.m;
    const double eps = space.spec.epsilon;

    // Exact cumulative trapezoid of 1/sigma.
    std::vector<double> s(m, 0.0);
    for (int i = 1; i < m; ++i) {
        const double a = 1.0 / space.spec.sigma(space.f(i - 1));
        const double b = 1.0 / space.spec.sigma(space.f(i));
        s[i] = s[i - 1] + 0.5 * (a + b) * space.df();
    }
    const double s_mid = 0.5 * s[m - 1];
    for (auto& v : s) v -= s_mid;  // symmetric about 0

    // Trapezoid quadrature weights in s.
    Vec w(m);
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        if (i > 0) acc += 0.5 * (s[i] - s[i - 1]);
        if (i < m - 1) acc += 0.5 * (s[i + 1] - s[i]);
        w[i] = acc;
    }

    auto coef = [&](int i) {
        double c = -(eps - 0.5) * space.spec.sigma_deriv(space.f(i));
        if (variant == DVariant::Perturbed && nu)
            c += space.spec.sigma(space.f(i)) * nu(space.f(i));
        return c;
    };

    // One-sided second-order difference rows on every node where the forward
    // stencil fits (rows = m - 2), with no boundary condition: the matrix has
    // full row rank, and the two structural column-null directions are the
    // discrete recursion seeds, which hug the interval ends and are removed
    // by the localization filter.
    const int rows = m - 2;
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < rows; ++i) {
        const double h1 = s[i + 1] - s[i], h2 = s[i + 2] - s[i + 1];
        trip.emplace_back(i, i, -(2.0 * h1 + h2) / (h1 * (h1 + h2)) + coef(i));
        trip.emplace_back(i, i + 1, (h1 + h2) / (h1 * h2));
        trip.emplace_back(i, i + 2, -h1 / (h2 * (h1 + h2)));
    }

    const bool extended = (variant == DVariant::Extended);
    const int cols = extended ? m + 2 : m;
    if (extended) {
        // Image of the plateau directions lambda_d c+ + (1 - lambda_d) c-:
        // folded column sigma^{eps+1/2} lambda_d'(f) (c+ - c-).
        const LambdaCutoff lam{space.spec.R};
        for (int i = 0; i < rows; ++i) {
            const double fold = std::pow(space.spec.sigma(space.f(i)), eps + 0.5);
            const double val = fold * lam.deriv(space.f(i));
            if (val != 0.0) {
                trip.emplace_back(i, m, val);
                trip.emplace_back(i, m + 1, -val);
            }
        }
    }

    auto matrix = std::make_shared<SpMat>(rows, cols);
    matrix->setFromTriplets(trip.begin(), trip.end());
    matrix->makeCompressed();

    Fredholm1DOperator out{OperatorHandle{}, space, variant, extended ? 2 : 0, s, Vec(), Vec()};
    out.op.name = "weighted_d";
    out.op.rows = rows;
    out.op.cols = cols;
    out.op.matrix = *matrix;
    out.op.range_weight = w.head(rows);
    out.op.domain_weight = Vec(cols);
    out.op.domain_weight.head(m) = w;
    if (extended) out.op.domain_weight.tail(2).setConstant(1.0);
    out.op.apply = [matrix](const Vec& x) -> Vec { return (*matrix) * x; };
    {
        const Vec dw = out.op.domain_weight, rw = out.op.range_weight;
        out.op.apply_adjoint = [matrix, dw, rw](const Vec& y) -> Vec {
            const Vec t = matrix->transpose() * rw.cwiseProduct(y);
            return t.cwiseQuotient(dw);
        };
    }

    // Interior masks: |f| within the inner half of the interval; extension
    // dofs are global directions and count as interior.
    out.domain_mask = Vec::Zero(cols);
    out.range_mask = Vec::Zero(rows);
    for (int i = 0; i < m; ++i) {
        const double in = (std::abs(space.f(i)) <= 0.5 * space.L) ? 1.0 : 0.0;
        out.domain_mask[i] = in;
        if (i < rows) out.range_mask[i] = in;
    }
    if (extended) out.domain_mask.tail(2).setConstant(1.0);

    if (variant == DVariant::Adjoint) {
        // The formal adjoint in the weighted products, as its own operator
        // (cols x rows).
        const Vec dw = out.op.domain_weight, rw = out.op.range_weight;
        SpMat t = matrix->transpose();
        SpMat scaled = dw.cwiseInverse().asDiagonal() * t;
        SpMat adj_mat = scaled * SpMat(rw.asDiagonal());
        auto adj = std::make_shared<SpMat>(std::move(adj_mat));
        out.op.matrix = *adj;
        out.op.rows = cols;
        out.op.cols = rows;
        std::swap(out.op.domain_weight, out.op.range_weight);
        std::swap(out.domain_mask, out.range_mask);
        out.op.apply = [adj](const Vec& x) -> Vec { return (*adj) * x; };
        const Vec dw2 = out.op.domain_weight, rw2 = out.op.range_weight;
        out.op.apply_adjoint = [adj, dw2, rw2](const Vec& y) -> Vec {
            const Vec t2 = adj->transpose() * rw2.cwiseProduct(y);
            return t2.cwiseQuotient(dw2);
        };
    }
    return out;
}

/// Default gap policy for the 1-D lab.  The truncation-limited cokernel
/// singular value sits at (L/R)^{-(eps-1/2)} above an essential floor of
/// (eps-1/2)/R -- a polynomial separation -- so the required ratio is 8.
/// The candidate window is tightened because sigma_max ~ 2m/R is inflated by
/// the fine end spacings of the s-grid.
inline GapPolicy fredholm_gap_policy() {
    GapPolicy p;
    p.threshold = 8.0;
    p.candidate_fraction = 1e-5;
    return p;
}

struct Index1DReport {
    int dim_ker = 0;
    int dim_coker = 0;
    int index = 0;
    bool conclusive = false;
    std::string note;
    std::vector<double> singular_values;
    double gap_ratio = 0.0;
    std::vector<double> kernel_localization, coker_localization;
    double coker_sigma_correlation = 0.0;   // |<coker, sigma^{-2 eps}>| (folded)
    double kernel_const_correlation = 0.0;  // |<kernel, plateau constants>|
};

/// SVD-based index of a 1-D weighted-difference operator with the
/// interior-localization policy of the lemma laboratory.
inline Index1DReport numerical_index(const Fredholm1DOperator& fd,
                                     GapPolicy policy = fredholm_gap_policy()) {
    policy.max_roughness = std::numeric_limits<double>::infinity();  // no doublers here
    auto rep = kernel_analysis(fd.op, fd.domain_mask, fd.range_mask, policy);
    Index1DReport out;
    out.conclusive = rep.conclusive;
    out.note = rep.note;
    out.singular_values = rep.singular_values;
    out.gap_ratio = rep.gap_ratio;
    if (!rep.conclusive) return out;
    out.dim_ker = rep.dim_ker;
    out.dim_coker = rep.dim_coker;
    out.index = rep.dim_ker - rep.dim_coker;
    out.kernel_localization = rep.kernel_localization;
    out.coker_localization = rep.coker_localization;

    const Weighted1DSpace& sp = fd.space;
    const double eps = sp.spec.epsilon;

    // Folded cokernel profile sigma^{1/2 - eps} (the image of sigma^{-2 eps}
    // under the range isometry).  It lives in the plain/perturbed range and
    // in the adjoint domain.
    const bool adjoint = (fd.variant == DVariant::Adjoint);
    const int prof_len = adjoint ? fd.op.cols : fd.op.rows;
    Vec profile(prof_len);
    for (int i = 0; i < prof_len; ++i)
        profile[i] = std::pow(sp.spec.sigma(sp.f(i)), 0.5 - eps);

    auto correlation = [](const Vec& a, const Vec& b, const Vec& weight) {
        const double num = std::abs(a.cwiseProduct(weight).dot(b));
        const double den = std::sqrt(a.cwiseProduct(weight).dot(a)) *
                           std::sqrt(b.cwiseProduct(weight).dot(b));
        return den > 0.0 ? num / den : 0.0;
    };

    // The sigma^{-2 eps} direction lives in the plain/perturbed cokernel and
    // in the adjoint kernel.
    if (!adjoint) {
        for (const Vec& v : rep.coker_basis)
            out.coker_sigma_correlation =
                std::max(out.coker_sigma_correlation,
                         correlation(v, profile, fd.op.range_weight));
    } else {
        for (const Vec& v : rep.kernel_basis)
            out.coker_sigma_correlation =
                std::max(out.coker_sigma_correlation,
                         correlation(v, profile, fd.op.domain_weight));
    }

    // Constant-function correlation for the extended kernel: the constants
    // are carried by the two extension dofs.
    if (fd.ext_cols == 2) {
        for (const Vec& v : rep.kernel_basis) {
            Vec cdir = Vec::Zero(v.size());
            cdir[v.size() - 2] = 1.0;
            cdir[v.size() - 1] = 1.0;
            out.kernel_const_correlation =
                std::max(out.kernel_const_correlation,
                         correlation(v, cdir, fd.op.domain_weight));
        }
    }
    return out;
}

/// Index across a family of decaying perturbations.
inline std::vector<Index1DReport> perturb_stability(
    const Weighted1DSpace& space, const std::vector<std::function<double(double)>>& family,
    const GapPolicy& policy = fredholm_gap_policy()) {
    std::vector<Index1DReport> out;
    for (const auto& nu : family) {
        auto fd = build_weighted_d(space, nu ? DVariant::Perturbed : DVariant::Plain, nu);
        out.push_back(numerical_index(fd, policy));
    }
    return out;
}

/// Minimum-norm least-squares solve of fd.op x = b through the KKT system;
/// returns (solution, residual norm) in the weighted norms.
inline std::pair<Vec, double> min_norm_solve(const Fredholm1DOperator& fd, const Vec& b) {
    const SpMat& M = *fd.op.matrix;
    const int rows = fd.op.rows, cols = fd.op.cols;
    // [[D, M^T R], [R M, 0]] [x; y] = [0; R b], i.e. min ||x||_D s.t. Mx = b.
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < cols; ++i) trip.emplace_back(i, i, fd.op.domain_weight[i]);
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            const double wv = fd.op.range_weight[it.row()] * it.value();
            trip.emplace_back(it.col(), cols + it.row(), wv);
            trip.emplace_back(cols + it.row(), it.col(), wv);
        }
    SpMat K(cols + rows, cols + rows);
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    Eigen::SparseLU<SpMat> lu(K);
    if (lu.info() != Eigen::Success) throw std::runtime_error("min_norm_solve: KKT LU failed");
    Vec rhs = Vec::Zero(cols + rows);
    rhs.tail(rows) = fd.op.range_weight.cwiseProduct(b);
    Vec sol = lu.solve(rhs);
    for (int refine = 0; refine < 2; ++refine) sol += lu.solve(rhs - K * sol);
    const Vec x = sol.head(cols);
    const Vec r = fd.op.apply(x) - b;
    const double res = std::sqrt(r.cwiseProduct(fd.op.range_weight).dot(r));
    return {x, res};
}

}  // namespace swlab
