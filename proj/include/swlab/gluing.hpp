#pragma once

#include <Eigen/SparseLU>

#include "swlab/linear_ops.hpp"
#include "swlab/vortex.hpp"

namespace swlab {

// ---------------------------------------------------------------------------
// Gluing at the planar (x3-invariant) level.  A configuration is pre-glued by
// blending the gauge-invariant potentials u = log|alpha|^2 with the cutoff
// gamma_R and reconstructing (alpha, a) with the union phase: the spinor
// phases of the two pieces are parallel by construction, the blend equals the
// aligned pieces bit-exactly outside the transition annulus, and the Dirac
// equation holds exactly along the reconstruction.  The correction is a
// gauge-fixed Newton iteration on the Theta system.
// ---------------------------------------------------------------------------

struct GluingConstants {
    double C1 = 1.0, C2 = 0.75, C3 = 0.5, C4 = 0.25;
    void validate() const {
        require(C1 > C2 && C2 > C3 && C3 > C4 && C4 > 0.0,
                "GluingConstants: need C1 > C2 > C3 > C4 > 0");
    }
};

/// Approximate planar configuration: connection pair and Higgs field with the
/// prescribed zero multiset.
struct GluingConfig {
    Grid2 grid;
    double t = 1.0;
    CenterSet centers;
    ScalarField2 a1, a2;
    ComplexField2 alpha;

    explicit GluingConfig(const Grid2& g) : grid(g), a1(g), a2(g), alpha(g) {}

    complexd a_zbar(std::size_t n) const { return 0.5 * complexd(a1[n], a2[n]); }
};

struct GluingJob {
    VortexSolution v;   // base solution, centers within C4 R
    CenterSet y;        // far vortex centers, moduli beyond C1 R
    double R;
    GluingConstants constants;

    GluingJob(VortexSolution base, CenterSet far, double separation,
              GluingConstants c = GluingConstants{})
        : v(std::move(base)), y(std::move(far)), R(separation), constants(c) {
        constants.validate();
        require(R > 0.0, "GluingJob: separation must be positive");
        require(v.t == 1.0, "GluingJob: base must be a t = 1 solution");
        const bool degenerate = same_center_multiset(v.centers, y);
        if (!degenerate) {
            require(v.centers.max_modulus() <= constants.C4 * R,
                    "GluingJob: base centers must lie within C4 R");
            for (const auto& e : y.entries)
                require(std::abs(e.z) >= constants.C1 * R,
                        "GluingJob: far centers must lie beyond C1 R");
            require(v.grid.covered_radius() >= constants.C1 * R + 6.0,
                    "GluingJob: grid must cover radius C1 R + 6");
            if (y.total() > 0)
                require(v.grid.covered_radius() >= y.max_modulus() + 6.0,
                        "GluingJob: far centers must sit 6 inside the grid");
        }
    }

    double gamma(double r) const {
        const double c3r = constants.C3 * R, c2r = constants.C2 * R;
        return 1.0 - smoothstep5((r - c3r) / (c2r - c3r));
    }

    static bool same_center_multiset(const CenterSet& a, const CenterSet& b) {
        if (a.total() != b.total() || a.entries.size() != b.entries.size()) return false;
        auto key = [](const CenterSet& s) {
            std::vector<std::pair<std::pair<double, double>, int>> k;
            for (const auto& e : s.entries)
                k.push_back({{e.z.real(), e.z.imag()}, e.multiplicity});
            std::sort(k.begin(), k.end());
            return k;
        };
        return key(a) == key(b);
    }
};

namespace glue_detail {

/// alpha = prod (z - z_j)^{m_j} exp(w / 2): shared reconstruction so pre-glued
/// pieces match the solver's fields bit-for-bit where the cutoff is flat.
inline ComplexField2 reconstruct_alpha(const Grid2& g, const CenterSet& centers,
                                       const ScalarField2& w) {
    ComplexField2 alpha(g, complexd(1.0, 0.0));
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            const complexd z = g.z(i, j);
            complexd prod(1.0, 0.0);
            for (const auto& e : centers.entries)
                for (int m = 0; m < e.multiplicity; ++m) prod *= (z - e.z);
            alpha[n] = prod * std::exp(0.5 * w[n]);
        }
    return alpha;
}

inline void reconstruct_connection(const Grid2& g, const ScalarField2& w, ScalarField2& a1,
                                   ScalarField2& a2) {
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            a1[n] = 0.5 * dx2(w, i, j);
            a2[n] = -0.5 * dx1(w, i, j);
        }
}

}  // namespace glue_detail

/// Cutoff interpolation of the base and the far-vortex solution (both in
/// their (vor) gauges, aligned through the union phase).
inline GluingConfig preglue(const GluingJob& job) {
    const Grid2& g = job.v.grid;
    GluingConfig out(g);
    out.t = 1.0;

    if (GluingJob::same_center_multiset(job.v.centers, job.y)) {
        out.centers = job.v.centers;
        out.a1 = job.v.a1;
        out.a2 = job.v.a2;
        out.alpha = job.v.alpha;
        return out;
    }

    const VortexSolution ysol =
        job.y.total() > 0 ? solve_vortex(job.y, g, 1e-10) : solve_vortex(CenterSet{}, g, 1e-10);

    out.centers = job.v.centers;
    for (const auto& e : job.y.entries) out.centers.add(e.z, e.multiplicity);

    // Smooth potential of the blend in the union gauge:
    //   w_c = s_v + (1 - gamma)(s_y - s_v) - gamma 2 sum_y log - (1 - gamma) 2 sum_v log,
    // where the log sums are smooth on the regions where they appear.
    ScalarField2 wc(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            const complexd z = g.z(i, j);
            const double gam = job.gamma(std::abs(z));
            double log_y = 0.0, log_v = 0.0;
            for (const auto& e : job.y.entries)
                log_y += 2.0 * e.multiplicity * std::log(std::abs(z - e.z));
            for (const auto& e : job.v.centers.entries)
                log_v += 2.0 * e.multiplicity * std::log(std::abs(z - e.z));
            wc[n] = job.v.w[n] + (1.0 - gam) * (ysol.w[n] - job.v.w[n]) - gam * log_y -
                    (1.0 - gam) * log_v;
        }
    out.alpha = glue_detail::reconstruct_alpha(g, out.centers, wc);
    glue_detail::reconstruct_connection(g, wc, out.a1, out.a2);
    return out;
}

// ---------------------------------------------------------------------------
// Residual measurement (the discrete system the correction solves)
// ---------------------------------------------------------------------------

struct GluingResidual {
    double sup = 0.0;
    double l2 = 0.0;
    double weighted_l2 = 0.0;
};

/// Curvature and Dirac residuals of the vortex equations at interior nodes,
/// measured with the stencils shared with the Theta assembly.  The weighted
/// norm uses the radial polynomial weight (epsilon, R_w).
inline GluingResidual gluing_residual(const GluingConfig& c, double epsilon = 1.25,
                                      double weight_scale = 4.0) {
    const Grid2& g = c.grid;
    WeightSpec spec(epsilon, weight_scale, WeightAxis::Radial);
    GluingResidual out;
    double acc = 0.0, wacc = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t n = g.idx(i, j);
            const double curl = dx1(c.a2, i, j) - dx2(c.a1, i, j);
            const double e2 = curl - 0.5 * (c.t - std::norm(c.alpha[n]));
            const complexd e1 =
                2.0 * (dbar(c.alpha, i, j) - complexd(0, 1) * c.a_zbar(n) * c.alpha[n]);
            const double sq = e2 * e2 + std::norm(e1);
            out.sup = std::max(out.sup, std::sqrt(sq));
            const double w = trapezoid_weight(g, i, j);
            acc += w * sq;
            wacc += w * std::pow(spec.sigma(spec.f_of(g, i, j)), 2.0 * epsilon) * sq;
        }
    out.l2 = std::sqrt(acc);
    out.weighted_l2 = std::sqrt(wacc);
    return out;
}

/// Curvature integral of a configuration.
inline double config_vortex_number(const GluingConfig& c) {
    const Grid2& g = c.grid;
    double acc = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i)
            acc += trapezoid_weight(g, i, j) * (dx1(c.a2, i, j) - dx2(c.a1, i, j));
    return acc / (2.0 * M_PI);
}

// ---------------------------------------------------------------------------
// Newton-Kantorovich correction
// ---------------------------------------------------------------------------

struct CorrectionRecord {
    GluingResidual initial;
    std::vector<double> residual_l2;    // per accepted iteration
    std::vector<double> update_norm;    // V-block norm of each Newton step
    double k_estimate = 0.0;            // empirical quadratic-form constant
    double eta_norm = 0.0;              // initial packed-residual norm
    double q_over_first = 0.0;          // ||q_total|| / ||first step||
    double gauge_defect_ratio = 0.0;    // max ||delta1(step)|| / ||step||
    int iterations = 0;
    bool converged = false;
};

namespace glue_detail {

inline PlanarBackground background_of_config(const GluingConfig& c) {
    PlanarBackground bg(c.grid);
    for (std::size_t n = 0; n < c.grid.size(); ++n) {
        bg.A1[n] = 2.0 * c.a1[n];
        bg.A2[n] = 2.0 * c.a2[n];
        bg.alpha[n] = c.alpha[n];
    }
    return bg;
}

/// Packed nonlinear residual eta = (0 - i m3_hat, Dirac) on interior nodes,
/// in the layout of assemble_theta.
inline Vec packed_residual(const GluingConfig& c) {
    const Grid2& g = c.grid;
    Vec eta(4 * ops_detail::interior_count(g));
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t q = 4 * ops_detail::interior_index(g, i, j);
            const std::size_t n = g.idx(i, j);
            const double m3 = 2.0 * (dx1(c.a2, i, j) - dx2(c.a1, i, j)) -
                              (c.t - std::norm(c.alpha[n]));
            const complexd dirac =
                2.0 * (dbar(c.alpha, i, j) - complexd(0, 1) * c.a_zbar(n) * c.alpha[n]);
            eta[q] = 0.0;        // gauge row
            eta[q + 1] = -m3;    // Im of the mu slot
            eta[q + 2] = dirac.real();
            eta[q + 3] = dirac.imag();
        }
    return eta;
}

/// Quadratic remainder B(q) of the residual map in the same packing.
inline Vec quadratic_remainder(const GluingConfig& c, const PlanarSection& q) {
    const Grid2& g = c.grid;
    Vec out(4 * ops_detail::interior_count(g));
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t p = 4 * ops_detail::interior_index(g, i, j);
            const std::size_t n = g.idx(i, j);
            const complexd lam = q.lambda[n];
            const complexd b = q.b[n];
            out[p] = 0.0;
            out[p + 1] = std::norm(lam);  // -i |lambda|^2 in the mu slot
            const complexd bnu = -complexd(0, 0.5) * b * lam;
            out[p + 2] = bnu.real();
            out[p + 3] = bnu.imag();
        }
    return out;
}

inline double weighted_norm_packed(const Grid2& g, const Vec& x) {
    double acc = 0.0;
    const double h2 = g.h() * g.h();
    for (std::size_t p = 0; p + 3 < static_cast<std::size_t>(x.size()); p += 4)
        acc += h2 * (x[p] * x[p] + x[p + 1] * x[p + 1] +
                     4.0 * (x[p + 2] * x[p + 2] + x[p + 3] * x[p + 3]));
    return std::sqrt(acc);
}

}  // namespace glue_detail

/// Correct an approximate configuration to a discrete solution by Newton
/// iteration on the gauge-fixed Theta system; the update encodes
/// (dA1 + i dA2, dalpha) with the connection at determinant normalization.
inline std::pair<GluingConfig, CorrectionRecord> newton_correct(const GluingConfig& c0,
                                                                double tol = 1e-10,
                                                                int iteration_cap = 20) {
    GluingConfig c = c0;
    const Grid2& g = c.grid;
    CorrectionRecord rec;
    rec.initial = gluing_residual(c);

    // Folded coordinates: both weighted products become Euclidean.
    Vec weights;
    {
        auto op0 = assemble_theta(glue_detail::background_of_config(c));
        weights = op0.domain_weight;
    }
    const Vec sqw = weights.cwiseSqrt();

    // Near-null directions of the linearization: moduli motions and lattice
    // doubler modes, tracked on both sides and re-converged against each new
    // factorization by inverse power steps.  The minimum-norm right inverse
    // excludes the right family from every Newton step (junk amplified by
    // tiny singular values would dominate the quadratic remainder and wander
    // the prescribed centers), and the solved system is the projected one,
    // mirroring the pi'-projected equation of the gluing argument: the
    // complement holds only lattice-scale junk with no continuum content.
    DenseMat right_basis, left_basis;
    auto orthonormalize = [](DenseMat& B) {
        for (int p = 0; p < B.cols(); ++p) {
            for (int q = 0; q < p; ++q) B.col(p) -= B.col(q).dot(B.col(p)) * B.col(q);
            const double nrm = B.col(p).norm();
            if (nrm > 1e-12) B.col(p) /= nrm;
            else B.col(p).setZero();
        }
    };
    auto project_step = [&](const Vec& step) {
        Vec folded = sqw.cwiseProduct(step);
        for (int q = 0; q < right_basis.cols(); ++q)
            folded -= right_basis.col(q).dot(folded) * right_basis.col(q);
        return Vec(folded.cwiseQuotient(sqw));
    };
    auto project_residual = [&](const Vec& eta) {
        Vec folded = sqw.cwiseProduct(eta);
        for (int q = 0; q < left_basis.cols(); ++q)
            folded -= left_basis.col(q).dot(folded) * left_basis.col(q);
        return Vec(folded.cwiseQuotient(sqw));
    };
    auto packed_sup = [&](const Vec& x) {
        double sup = 0.0;
        for (Eigen::Index p = 0; p + 3 < x.size(); p += 4)
            sup = std::max(sup, std::sqrt(x[p] * x[p] + x[p + 1] * x[p + 1] +
                                          x[p + 2] * x[p + 2] + x[p + 3] * x[p + 3]));
        return sup;
    };

    double target = tol;
    double first_step = 0.0, total_sq = 0.0;
    for (int iter = 0; iter < iteration_cap; ++iter) {
        auto op = assemble_theta(glue_detail::background_of_config(c));
        // Tiny diagonal shift: the linearization carries exactly singular
        // moduli directions, and the raw factorization would amplify solver
        // roundoff along them beyond what the projection can attribute.
        SpMat shifted = *op.matrix;
        for (int d = 0; d < shifted.rows(); ++d) shifted.coeffRef(d, d) += 1e-8;
        shifted.makeCompressed();
        Eigen::SparseLU<SpMat> lu(shifted);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("newton_correct: linearization factorization failed");

        if (iter == 0) {
            // Build the near-null block by inverse power iterations through
            // the factorization: the contrast across the spectral gap makes a
            // few passes plenty, and the direct solver is already in hand.
            const SpMat W = op.weighted_matrix();
            const double smax = largest_singular_value(W, 60);
            const int block = 8;
            Rng rng(4242);
            DenseMat X(op.cols, block);
            for (int q = 0; q < block; ++q)
                for (int r = 0; r < op.cols; ++r) X(r, q) = rng.normal();
            orthonormalize(X);
            for (int pass = 0; pass < 4; ++pass) {
                for (int q = 0; q < block; ++q) {
                    const Vec x = lu.transpose().solve(Vec(sqw.cwiseProduct(X.col(q))));
                    const Vec y = lu.solve(Vec(x.cwiseQuotient(weights)));
                    X.col(q) = sqw.cwiseProduct(y);
                }
                orthonormalize(X);
            }
            std::vector<int> keep;
            for (int q = 0; q < block; ++q)
                if ((W * X.col(q)).norm() < 1e-4 * smax) keep.push_back(q);
            right_basis.resize(op.cols, static_cast<int>(keep.size()));
            for (std::size_t q = 0; q < keep.size(); ++q)
                right_basis.col(static_cast<int>(q)) = X.col(keep[q]);
            orthonormalize(right_basis);
            // Left partners through the transposed factorization.
            left_basis.resize(op.rows, right_basis.cols());
            for (int q = 0; q < right_basis.cols(); ++q) {
                const Vec x = lu.transpose().solve(Vec(sqw.cwiseProduct(right_basis.col(q))));
                left_basis.col(q) = x.cwiseQuotient(sqw);
            }
            orthonormalize(left_basis);
            for (int pass = 0; pass < 2; ++pass) {
                for (int q = 0; q < left_basis.cols(); ++q) {
                    const Vec x = lu.solve(Vec(left_basis.col(q).cwiseQuotient(sqw)));
                    const Vec y = lu.transpose().solve(Vec(weights.cwiseProduct(x)));
                    left_basis.col(q) = y.cwiseQuotient(sqw);
                }
                orthonormalize(left_basis);
            }
        } else {
            // Inverse power steps through the fresh factorization.
            for (int q = 0; q < right_basis.cols(); ++q) {
                const Vec x = lu.transpose().solve(Vec(sqw.cwiseProduct(right_basis.col(q))));
                const Vec y = lu.solve(Vec(x.cwiseQuotient(weights)));
                right_basis.col(q) = sqw.cwiseProduct(y);
            }
            orthonormalize(right_basis);
            for (int q = 0; q < left_basis.cols(); ++q) {
                const Vec x = lu.solve(Vec(left_basis.col(q).cwiseQuotient(sqw)));
                const Vec y = lu.transpose().solve(Vec(weights.cwiseProduct(x)));
                left_basis.col(q) = y.cwiseQuotient(sqw);
            }
            orthonormalize(left_basis);
        }

        const Vec eta_raw = glue_detail::packed_residual(c);
        const Vec eta = project_residual(eta_raw);
        const double res_sup = packed_sup(eta);
        if (iter == 0) {
            rec.eta_norm = glue_detail::weighted_norm_packed(g, eta);
            target = std::max(tol, 1e-6 * res_sup);
            if (res_sup <= target) {
                rec.converged = true;
                break;
            }
        } else if (res_sup <= target) {
            rec.converged = true;
            break;
        }

        const Vec step = project_step(lu.solve(-eta));
        const PlanarSection q = unpack_section(g, step);

        if (iter == 0) {
            // Empirical contraction constant: B is exactly quadratic, so its
            // sharp constant along the correction ray is ||B(G eta)||/||eta||^2.
            const Vec b = glue_detail::quadratic_remainder(c, q);
            rec.k_estimate =
                glue_detail::weighted_norm_packed(g, b) / (rec.eta_norm * rec.eta_norm);
            if (rec.k_estimate > 0.0 && rec.eta_norm > 1.0 / (10.0 * rec.k_estimate)) {
                throw std::runtime_error(
                    "newton_correct: contraction precondition failed (k = " +
                    std::to_string(rec.k_estimate) + ", |eta| = " +
                    std::to_string(rec.eta_norm) + ")");
            }
        }

        // Gauge condition on the accepted update.
        auto bg = glue_detail::background_of_config(c);
        const ScalarField2 d1 = gauge_delta1(bg, q);
        double d1acc = 0.0;
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i)
                d1acc += trapezoid_weight(g, i, j) * d1[g.idx(i, j)] * d1[g.idx(i, j)];
        const double step_norm = glue_detail::weighted_norm_packed(g, step);
        if (step_norm > 0)
            rec.gauge_defect_ratio =
                std::max(rec.gauge_defect_ratio, std::sqrt(d1acc) / step_norm);

        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const std::size_t n = g.idx(i, j);
                c.a1[n] += 0.5 * q.b[n].real();
                c.a2[n] += 0.5 * q.b[n].imag();
                c.alpha[n] += q.lambda[n];
            }
        ++rec.iterations;
        rec.update_norm.push_back(step_norm);
        total_sq += step_norm * step_norm;
        if (iter == 0) first_step = step_norm;
        rec.residual_l2.push_back(
            glue_detail::weighted_norm_packed(g, project_residual(glue_detail::packed_residual(c))));
        if (!rec.residual_l2.empty() && rec.residual_l2.back() <= 0.3 * target) {
            rec.converged = true;
            break;
        }
    }
    if (first_step > 0.0) rec.q_over_first = std::sqrt(total_sq) / first_step;
    return {c, rec};
}

// ---------------------------------------------------------------------------
// Residual sweep and the end chart
// ---------------------------------------------------------------------------

struct SweepEntry {
    double R = 0.0;
    double sup = 0.0;
    double weighted_l2 = 0.0;
    double bound = 0.0;  // calibrated C R^{-3/2 + eps}
};

namespace glue_detail {

/// Scalar-form residual of the blended potential: with u_c = u_v + (1-g) d,
/// d = u_y - u_v, the residual against Delta u = e^u - 1 is
///   -d Lap(g-bar) - 2 grad(g-bar).grad d + [e^{u_v}-1] + (1-g)(e^{u_y}-e^{u_v})
///     - (e^{u_c}-1) + blended solver residuals,
/// with g-bar = 1 - gamma.  Every term is evaluated from the solved fields
/// and the analytic cutoff, so the discretization floor scales with the
/// overlap signal instead of the core curvature.
inline GluingResidual scalar_preglue_residual(const GluingJob& job, const VortexSolution& ysol,
                                              double epsilon, double weight_scale) {
    const Grid2& g = job.v.grid;
    const GluingConstants& cc = job.constants;
    const double c3r = cc.C3 * job.R, c2r = cc.C2 * job.R;
    const double band = c2r - c3r;
    WeightSpec spec(epsilon, weight_scale, WeightAxis::Radial);

    // u and d as fields (d only used where the annulus terms are active).
    ScalarField2 d(g);
    for (std::size_t n = 0; n < g.size(); ++n) d[n] = ysol.u[n] - job.v.u[n];

    GluingResidual out;
    double acc = 0.0, wacc = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t n = g.idx(i, j);
            const double r = std::abs(g.z(i, j));
            const double gam = job.gamma(r);
            const double ev = std::norm(job.v.alpha[n]);
            const double ey = std::norm(ysol.alpha[n]);
            double res = 0.0;
            if (gam == 1.0) {
                res = 0.0;  // u_c = u_v exactly: solver-level residual only
            } else if (gam == 0.0) {
                res = 0.0;
            } else {
                const double euc = ev * std::exp((1.0 - gam) * d[n]);
                // Radial derivatives of gamma via the smoothstep profile.
                const double t = (r - c3r) / band;
                const double dgam = -smoothstep5_deriv(t) / band;
                const double t1 = ((r + 1e-5) - c3r) / band;
                const double t0 = ((r - 1e-5) - c3r) / band;
                const double ddgam =
                    -(smoothstep5_deriv(t1) - smoothstep5_deriv(t0)) / (2e-5 * band);
                const double x1 = g.x1(i), x2 = g.x2(j);
                const double rx = x1 / r, ry = x2 / r;
                // grad gamma = dgam (rx, ry); Lap gamma = ddgam + dgam / r.
                const double lap_gbar = -(ddgam + dgam / r);
                const double gx = -dgam * rx, gy = -dgam * ry;
                res = -d[n] * lap_gbar - 2.0 * (gx * dx1(d, i, j) + gy * dx2(d, i, j)) +
                      (ev - 1.0) + (1.0 - gam) * (ey - ev) - (euc - 1.0);
            }
            // E2-normalized: curvature residual is -res/2.
            const double e2 = 0.5 * std::abs(res);
            out.sup = std::max(out.sup, e2);
            const double w = trapezoid_weight(g, i, j);
            acc += w * e2 * e2;
            wacc += w * std::pow(spec.sigma(spec.f_of(g, i, j)), 2.0 * epsilon) * e2 * e2;
        }
    out.l2 = std::sqrt(acc);
    out.weighted_l2 = std::sqrt(wacc);
    return out;
}

}  // namespace glue_detail

/// Pre-glue residual decay in the separation R: the far vortex sits at
/// polar_multiplier * R along the given direction; the bound curve is
/// calibrated at the smallest R.
inline std::vector<SweepEntry> residual_sweep(const CenterSet& base_centers,
                                              double polar_multiplier, double angle,
                                              const std::vector<double>& R_list, double h,
                                              double epsilon = 1.25,
                                              GluingConstants constants = GluingConstants{}) {
    require(!R_list.empty(), "residual_sweep: empty R list");
    for (std::size_t i = 1; i < R_list.size(); ++i)
        require(R_list[i] > R_list[i - 1], "residual_sweep: R list must increase");
    std::vector<SweepEntry> out;
    for (double R : R_list) {
        const double far_r = polar_multiplier * R;
        const double covered = far_r + 8.0;
        int n = static_cast<int>(std::ceil(2.0 * covered / h));
        n += n % 2;
        Grid2 grid(n, n, h);
        auto v = solve_vortex(base_centers, grid, 1e-10);
        CenterSet y;
        y.add(far_r * complexd(std::cos(angle), std::sin(angle)));
        GluingJob job(std::move(v), y, R, constants);
        const VortexSolution ysol = solve_vortex(y, grid, 1e-10);
        auto res = glue_detail::scalar_preglue_residual(job, ysol, epsilon, 4.0);
        out.push_back({R, res.sup, res.weighted_l2, 0.0});
    }
    const double C =
        out.front().weighted_l2 / std::pow(R_list.front(), -1.5 + epsilon);
    for (auto& e : out) e.bound = C * std::pow(e.R, -1.5 + epsilon);
    return out;
}

struct EndChartEntry {
    complexd probe;
    bool converged = false;
    double final_residual = 0.0;
    double vortex_number = 0.0;
    CenterSet centers;
    std::string error;
};

/// Glue and correct one far vortex per probe around the base solution; failed
/// corrections are recorded per probe and the chart continues.
inline std::vector<EndChartEntry> end_chart(const VortexSolution& base,
                                            const std::vector<complexd>& probes, double R,
                                            double tol = 1e-10,
                                            GluingConstants constants = GluingConstants{}) {
    std::vector<EndChartEntry> out;
    for (const complexd& p : probes) {
        EndChartEntry entry;
        entry.probe = p;
        try {
            CenterSet y;
            y.add(p);
            GluingJob job(base, y, R, constants);
            auto c = preglue(job);
            auto [corrected, rec] = newton_correct(c, tol);
            entry.converged = rec.converged;
            entry.final_residual = rec.residual_l2.empty() ? rec.initial.l2
                                                           : rec.residual_l2.back();
            entry.vortex_number = config_vortex_number(corrected);
            entry.centers = centers_of(corrected.grid, corrected.alpha, corrected.t);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace swlab
