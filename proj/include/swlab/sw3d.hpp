#pragma once

#include <functional>
#include <vector>

#include "swlab/clifford.hpp"
#include "swlab/norms.hpp"
#include "swlab/vortex.hpp"

namespace swlab {

/// Seiberg-Witten configuration on a spatial grid in temporal gauge.  The
/// stored real connection components are at determinant-line normalization:
/// the spinor covariant derivative is D_j = d_j - (i/2) A_j, so a pullback
/// carries A = 2a with a the planar vortex connection.
struct SWField3 {
    Grid3 grid;
    double t = 1.0;
    ScalarField3 A1, A2, A3;
    ComplexField3 alpha, beta;
    bool temporal = true;

    explicit SWField3(const Grid3& g, double t_ = 1.0)
        : grid(g), t(t_), A1(g), A2(g), A3(g), alpha(g), beta(g) {
        require(t_ >= 0.0, "SWField3: t must be non-negative");
    }

    std::array<complexd, 2> psi(std::size_t n) const { return {alpha[n], beta[n]}; }

    void check_temporal() const {
        if (!temporal) return;
        for (const double v : A3.values())
            if (v != 0.0) throw std::invalid_argument("SWField3: temporal gauge requires A3 = 0");
    }
};

struct SWResidualReport {
    double curvature_sup = 0.0, curvature_l2 = 0.0, curvature_weighted_l2 = 0.0;
    double dirac_sup = 0.0, dirac_l2 = 0.0, dirac_weighted_l2 = 0.0;
    double beta_l2 = 0.0;
};

namespace sw_detail {

/// Dirac operator at a node: sum_j gamma_j (d_j - (i/2) A_j) psi.
inline std::array<complexd, 2> dirac_at(const SWField3& c, int i, int j, int k) {
    const Grid3& g = c.grid;
    const std::size_t n = g.idx(i, j, k);
    const complexd ihalf(0.0, 0.5);
    const std::array<complexd, 2> psi{c.alpha[n], c.beta[n]};
    std::array<std::array<complexd, 2>, 3> cov;
    cov[0] = {dx1(c.alpha, i, j, k) - ihalf * c.A1[n] * c.alpha[n],
              dx1(c.beta, i, j, k) - ihalf * c.A1[n] * c.beta[n]};
    cov[1] = {dx2(c.alpha, i, j, k) - ihalf * c.A2[n] * c.alpha[n],
              dx2(c.beta, i, j, k) - ihalf * c.A2[n] * c.beta[n]};
    cov[2] = {dx3(c.alpha, i, j, k) - ihalf * c.A3[n] * c.alpha[n],
              dx3(c.beta, i, j, k) - ihalf * c.A3[n] * c.beta[n]};
    std::array<complexd, 2> out{0.0, 0.0};
    for (int d = 0; d < 3; ++d) {
        const auto t = matvec(gamma(d + 1), cov[d]);
        out[0] += t[0];
        out[1] += t[1];
    }
    return out;
}

/// Curvature-equation residual matrix rho(F_A) - i sigma(psi,psi) - i rho(omega)
/// with F at E-level (half the exterior derivative of the stored components)
/// and omega = -(t/2) dx1^dx2.
inline Mat2 curvature_matrix_at(const SWField3& c, int i, int j, int k) {
    const std::size_t n = c.grid.idx(i, j, k);
    const double f12 = 0.5 * (dx1(c.A2, i, j, k) - dx2(c.A1, i, j, k));
    const double f23 = 0.5 * (dx2(c.A3, i, j, k) - dx3(c.A2, i, j, k));
    const double f31 = 0.5 * (dx3(c.A1, i, j, k) - dx1(c.A3, i, j, k));
    const complexd mi(0.0, -1.0);
    const Mat2 rhoF = clifford_rho_2form({mi * f12, mi * f23, mi * f31});
    const Mat2 sig = sigma_map({c.alpha[n], c.beta[n]}, {c.alpha[n], c.beta[n]});
    const Mat2 rho_omega = clifford_rho_2form({complexd(-0.5 * c.t, 0.0), 0.0, 0.0});
    return rhoF - complexd(0, 1) * sig - complexd(0, 1) * rho_omega;
}

}  // namespace sw_detail

/// Node-wise evaluation of both equations of the perturbed Seiberg-Witten
/// system; the weighted norms use the supplied weight (x3-axis by default).
inline SWResidualReport sw_residual(const SWField3& c,
                                    WeightSpec spec = WeightSpec(1.25, 1.0, WeightAxis::X3)) {
    c.check_temporal();
    const Grid3& g = c.grid;
    SWResidualReport rep;
    double c2 = 0.0, cw2 = 0.0, d2 = 0.0, dw2 = 0.0, b2 = 0.0;
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const auto dir = sw_detail::dirac_at(c, i, j, k);
                const Mat2 cm = sw_detail::curvature_matrix_at(c, i, j, k);
                const double dsq = std::norm(dir[0]) + std::norm(dir[1]);
                const double csq = frobenius_norm_sq(cm);
                const double w = trapezoid_weight(g, i, j, k);
                const double ws = std::pow(spec.sigma(spec.f_of(g, i, j, k)), 2.0 * spec.epsilon);
                rep.dirac_sup = std::max(rep.dirac_sup, std::sqrt(dsq));
                rep.curvature_sup = std::max(rep.curvature_sup, std::sqrt(csq));
                d2 += w * dsq;
                c2 += w * csq;
                dw2 += w * ws * dsq;
                cw2 += w * ws * csq;
                b2 += w * std::norm(c.beta[g.idx(i, j, k)]);
            }
    rep.dirac_l2 = std::sqrt(d2);
    rep.curvature_l2 = std::sqrt(c2);
    rep.dirac_weighted_l2 = std::sqrt(dw2);
    rep.curvature_weighted_l2 = std::sqrt(cw2);
    rep.beta_l2 = std::sqrt(b2);
    return rep;
}

/// Pull a converged t=1 vortex back to a Seiberg-Witten configuration at
/// parameter t.  The target grid's planar nodes must coincide with nodes of
/// the (t-rescaled) vortex grid.
inline SWField3 pullback(const VortexSolution& vortex, double t, const Grid3& grid3) {
    require(vortex.t == 1.0, "pullback: the input vortex must be the t=1 solution");
    const VortexSolution vt = rescale(vortex, t);
    const Grid2& g2 = vt.grid;
    require(std::abs(grid3.h() - g2.h()) <= 1e-12 * g2.h(),
            "pullback: grid3 spacing must match the t-rescaled vortex grid");
    // Planar node alignment.
    const double off1 = (grid3.x1(0) - g2.x1(0)) / g2.h();
    const double off2 = (grid3.x2(0) - g2.x2(0)) / g2.h();
    const int i0 = static_cast<int>(std::lround(off1));
    const int j0 = static_cast<int>(std::lround(off2));
    require(std::abs(off1 - i0) <= 1e-9 && std::abs(off2 - j0) <= 1e-9,
            "pullback: grid3 planar nodes must coincide with vortex grid nodes");
    require(i0 >= 0 && j0 >= 0 && i0 + grid3.nx() <= g2.nx() && j0 + grid3.ny() <= g2.ny(),
            "pullback: grid3 planar footprint must lie inside the vortex grid");

    SWField3 out(grid3, t);
    for (int k = 0; k < grid3.nz(); ++k)
        for (int j = 0; j < grid3.ny(); ++j)
            for (int i = 0; i < grid3.nx(); ++i) {
                const std::size_t n3 = grid3.idx(i, j, k);
                const std::size_t n2 = g2.idx(i0 + i, j0 + j);
                out.A1[n3] = 2.0 * vt.a1[n2];
                out.A2[n3] = 2.0 * vt.a2[n2];
                out.alpha[n3] = vt.alpha[n2];
                out.beta[n3] = 0.0;
            }
    return out;
}

/// Energy functional (2.5) on the grid: int |Dirac psi|^2 + (1/2)|curvature
/// residual|^2 by trapezoid quadrature.
inline double energy(const SWField3& c) {
    const Grid3& g = c.grid;
    double e = 0.0;
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const auto dir = sw_detail::dirac_at(c, i, j, k);
                const Mat2 cm = sw_detail::curvature_matrix_at(c, i, j, k);
                e += trapezoid_weight(g, i, j, k) *
                     (std::norm(dir[0]) + std::norm(dir[1]) + 0.5 * frobenius_norm_sq(cm));
            }
    return e;
}

struct LInfBound {
    double max_psi_sq = 0.0;
    double bound = 0.0;
    bool satisfied = false;
};

/// Solution-level bound max |psi|^2 <= t (1 + 5h^2).
inline LInfBound linf_bound_check(const SWField3& c) {
    LInfBound out;
    for (std::size_t n = 0; n < c.alpha.size(); ++n)
        out.max_psi_sq =
            std::max(out.max_psi_sq, std::norm(c.alpha[n]) + std::norm(c.beta[n]));
    out.bound = c.t * (1.0 + 5.0 * c.grid.h() * c.grid.h());
    out.satisfied = out.max_psi_sq <= out.bound;
    return out;
}

/// Gauge transform by e^{i xi}: psi -> e^{i xi} psi, A -> A + 2 grad_h xi.
inline SWField3 gauge_transform(const SWField3& c, const ScalarField3& xi) {
    const Grid3& g = c.grid;
    SWField3 out = c;
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                const complexd phase = std::exp(complexd(0.0, xi[n]));
                out.alpha[n] = phase * c.alpha[n];
                out.beta[n] = phase * c.beta[n];
                out.A1[n] = c.A1[n] + 2.0 * dx1(xi, i, j, k);
                out.A2[n] = c.A2[n] + 2.0 * dx2(xi, i, j, k);
                out.A3[n] = c.A3[n] + 2.0 * dx3(xi, i, j, k);
            }
    out.temporal = false;  // A3 picks up dx3 xi in general
    return out;
}

// ---------------------------------------------------------------------------
// Energy descent
// ---------------------------------------------------------------------------

struct DescentRecord {
    std::vector<double> energy_trace;
    int iterations = 0;
    bool stagnated = false;
};

namespace sw_detail {

/// Coefficients of the second-order first-difference along one axis:
/// index-offset / weight pairs for node position p on an axis of n nodes.
inline int diff_coeffs(int p, int n, double h, int* offs, double* wts) {
    if (p == 0) {
        offs[0] = 0; wts[0] = -1.5 / h;
        offs[1] = 1; wts[1] = 2.0 / h;
        offs[2] = 2; wts[2] = -0.5 / h;
        return 3;
    }
    if (p == n - 1) {
        offs[0] = 0; wts[0] = 1.5 / h;
        offs[1] = -1; wts[1] = -2.0 / h;
        offs[2] = -2; wts[2] = 0.5 / h;
        return 3;
    }
    offs[0] = 1; wts[0] = 0.5 / h;
    offs[1] = -1; wts[1] = -0.5 / h;
    return 2;
}

/// Exact gradient of the discrete energy with respect to the interior values
/// of (A1, A2, alpha, beta); boundary values and A3 are frozen.  Complex
/// gradients use the d/dRe + i d/dIm convention.
struct EnergyGradient {
    ScalarField3 gA1, gA2;
    ComplexField3 galpha, gbeta;
    explicit EnergyGradient(const Grid3& g) : gA1(g), gA2(g), galpha(g), gbeta(g) {}
};

inline EnergyGradient energy_gradient(const SWField3& c) {
    const Grid3& g = c.grid;
    EnergyGradient grad(g);
    int offs[3];
    double wts[3];
    const complexd ihalf(0.0, 0.5);

    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                const double w = trapezoid_weight(g, i, j, k);

                // Dirac part: E += w |r|^2 with r = sum_j gamma_j (d_j - (i/2)A_j) psi.
                const auto r = dirac_at(c, i, j, k);
                const std::array<complexd, 2> s{w * r[0], w * r[1]};
                const std::array<complexd, 2> psi{c.alpha[n], c.beta[n]};
                for (int d = 0; d < 3; ++d) {
                    // gamma_d^dag s = -gamma_d s.
                    const auto gs = matvec(gamma(d + 1), s);
                    const std::array<complexd, 2> gdag_s{-gs[0], -gs[1]};
                    // d_d psi scatter: dE = 2 Re <gamma^dag s, d_d dpsi>.
                    const int p = (d == 0) ? i : (d == 1) ? j : k;
                    const int np = (d == 0) ? g.nx() : (d == 1) ? g.ny() : g.nz();
                    const int m = diff_coeffs(p, np, g.h(), offs, wts);
                    for (int q = 0; q < m; ++q) {
                        const std::size_t tgt = (d == 0)   ? g.idx(i + offs[q], j, k)
                                                : (d == 1) ? g.idx(i, j + offs[q], k)
                                                           : g.idx(i, j, k + offs[q]);
                        grad.galpha[tgt] += 2.0 * wts[q] * gdag_s[0];
                        grad.gbeta[tgt] += 2.0 * wts[q] * gdag_s[1];
                    }
                    // Mass term -(i/2) A_d psi: its adjoint equals itself.
                    const double Ad = (d == 0) ? c.A1[n] : (d == 1) ? c.A2[n] : c.A3[n];
                    grad.galpha[n] += 2.0 * (-ihalf * Ad) * gs[0];
                    grad.gbeta[n] += 2.0 * (-ihalf * Ad) * gs[1];
                    // A-dof (temporal gauge: only d = 0, 1 vary).
                    if (d < 2) {
                        const auto gp = matvec(gamma(d + 1), psi);
                        const complexd inner = std::conj(s[0]) * gp[0] + std::conj(s[1]) * gp[1];
                        const double gval = 2.0 * std::real(-ihalf * inner);
                        if (d == 0) grad.gA1[n] += gval;
                        else grad.gA2[n] += gval;
                    }
                }

                // Curvature part: E += w sum_j m_j^2 over the E-level residual
                // components m = (m23, m31, m12) in the hermitian basis.
                const double f12 = 0.5 * (dx1(c.A2, i, j, k) - dx2(c.A1, i, j, k));
                const double f23 = 0.5 * (dx2(c.A3, i, j, k) - dx3(c.A2, i, j, k));
                const double f31 = 0.5 * (dx3(c.A1, i, j, k) - dx1(c.A3, i, j, k));
                const complexd ab = c.alpha[n] * std::conj(c.beta[n]);
                const double m1 = f23 + kSigmaSign * std::real(ab);
                const double m2 = f31 - kSigmaSign * std::imag(ab);
                const double m3 =
                    f12 - 0.5 * (c.t - std::norm(c.alpha[n]) + std::norm(c.beta[n]));
                // F-derivative scatters (factor 1/2 from the E-level F).
                // m1: -(1/2) d3 A2;  m2: +(1/2) d3 A1;  m3: (1/2)(d1 A2 - d2 A1).
                {
                    const int m = diff_coeffs(k, g.nz(), g.h(), offs, wts);
                    for (int q = 0; q < m; ++q) {
                        const std::size_t tgt = g.idx(i, j, k + offs[q]);
                        grad.gA2[tgt] += 2.0 * w * m1 * (-0.5) * wts[q];
                        grad.gA1[tgt] += 2.0 * w * m2 * (+0.5) * wts[q];
                    }
                }
                {
                    const int m = diff_coeffs(i, g.nx(), g.h(), offs, wts);
                    for (int q = 0; q < m; ++q)
                        grad.gA2[g.idx(i + offs[q], j, k)] += 2.0 * w * m3 * 0.5 * wts[q];
                }
                {
                    const int m = diff_coeffs(j, g.ny(), g.h(), offs, wts);
                    for (int q = 0; q < m; ++q)
                        grad.gA1[g.idx(i, j + offs[q], k)] += 2.0 * w * m3 * (-0.5) * wts[q];
                }
                // psi-derivatives of the bilinears.
                const complexd a = c.alpha[n], b = c.beta[n];
                grad.galpha[n] += 2.0 * w * kSigmaSign * (m1 * b + m2 * complexd(0, -1) * b);
                grad.gbeta[n] += 2.0 * w * kSigmaSign * (m1 * a + m2 * complexd(0, 1) * a);
                grad.galpha[n] += 2.0 * w * m3 * a;
                grad.gbeta[n] += 2.0 * w * m3 * (-b);
            }

    // Freeze boundary values and the temporal component.
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
                if (!g.interior(i, j, k)) {
                    const std::size_t n = g.idx(i, j, k);
                    grad.gA1[n] = grad.gA2[n] = 0.0;
                    grad.galpha[n] = grad.gbeta[n] = 0.0;
                }
    return grad;
}

}  // namespace sw_detail

/// Gradient descent on the full parameter vector with frozen boundary values
/// and temporal gauge.  Steps start from a Barzilai-Borwein estimate and
/// backtrack under the Armijo rule (factor 1/2, c = 1e-4), so the energy
/// trace is non-increasing.
inline SWField3 minimize_energy(const SWField3& c0, double grad_tol, int iteration_cap,
                                DescentRecord* record = nullptr) {
    c0.check_temporal();
    SWField3 c = c0;
    const Grid3& g = c.grid;
    const std::size_t nn = g.size();
    double e = energy(c);
    if (record) record->energy_trace.push_back(e);

    // Flattened dof view: [A1 | A2 | Re a | Im a | Re b | Im b].
    auto pack_grad = [&](const sw_detail::EnergyGradient& gr, std::vector<double>& out) {
        out.resize(6 * nn);
        for (std::size_t n = 0; n < nn; ++n) {
            out[n] = gr.gA1[n];
            out[nn + n] = gr.gA2[n];
            out[2 * nn + n] = gr.galpha[n].real();
            out[3 * nn + n] = gr.galpha[n].imag();
            out[4 * nn + n] = gr.gbeta[n].real();
            out[5 * nn + n] = gr.gbeta[n].imag();
        }
    };
    auto apply_step = [&](const std::vector<double>& dir, double s) {
        SWField3 trial = c;
        for (std::size_t n = 0; n < nn; ++n) {
            trial.A1[n] += s * dir[n];
            trial.A2[n] += s * dir[nn + n];
            trial.alpha[n] += s * complexd(dir[2 * nn + n], dir[3 * nn + n]);
            trial.beta[n] += s * complexd(dir[4 * nn + n], dir[5 * nn + n]);
        }
        return trial;
    };
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t q = 0; q < a.size(); ++q) s += a[q] * b[q];
        return s;
    };

    std::vector<double> gvec, gprev, dir;
    double step = 1.0;
    for (int iter = 0; iter < iteration_cap; ++iter) {
        pack_grad(sw_detail::energy_gradient(c), gvec);
        const double gnorm_sq = dot(gvec, gvec);
        if (std::sqrt(gnorm_sq) <= grad_tol) break;

        // Polak-Ribiere+ direction with restart when it fails to descend.
        if (iter == 0 || gprev.empty()) {
            dir.assign(gvec.size(), 0.0);
            for (std::size_t q = 0; q < gvec.size(); ++q) dir[q] = -gvec[q];
        } else {
            double num = 0.0, den = 0.0;
            for (std::size_t q = 0; q < gvec.size(); ++q) {
                num += gvec[q] * (gvec[q] - gprev[q]);
                den += gprev[q] * gprev[q];
            }
            const double beta_pr = std::max(0.0, num / den);
            for (std::size_t q = 0; q < gvec.size(); ++q)
                dir[q] = -gvec[q] + beta_pr * dir[q];
        }
        double slope = dot(dir, gvec);
        if (!(slope < 0.0)) {
            for (std::size_t q = 0; q < gvec.size(); ++q) dir[q] = -gvec[q];
            slope = -gnorm_sq;
        }
        gprev = gvec;

        bool accepted = false;
        step = std::min(std::max(step * 4.0, 1e-12), 1e12);
        for (int ls = 0; ls < 80; ++ls) {
            SWField3 trial = apply_step(dir, step);
            const double et = energy(trial);
            if (et <= e + 1e-4 * step * slope) {
                c = std::move(trial);
                e = et;
                accepted = true;
                if (record) {
                    record->energy_trace.push_back(e);
                    record->iterations = iter + 1;
                }
                break;
            }
            step *= 0.5;
            if (step < 1e-18) break;
        }
        if (!accepted) {
            if (record) record->stagnated = true;
            break;
        }
    }
    return c;
}

}  // namespace swlab
