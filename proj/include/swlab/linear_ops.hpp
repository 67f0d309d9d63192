#pragma once

#include <memory>
#include <vector>

#include "swlab/operator_handle.hpp"
#include "swlab/sw3d.hpp"
#include "swlab/vortex.hpp"

namespace swlab {

// ---------------------------------------------------------------------------
// Planar sections and the vortex deformation operator
//
// Sections of the linearized vortex problem are complex pairs (b, lambda); b
// encodes the planar connection direction at determinant-line normalization
// (b = dA1 + i dA2) and lambda the Higgs direction.  The operator
//
//   Theta(b, l) = (-2 del b - 2i conj(alpha) l,  2 dbar_a l - (i/2) b alpha)
//
// is the gauge-fixed linearization: the real part of the first slot is
// (minus) the gauge functional delta^1, the imaginary part the linearized
// curvature equation, and the second slot the linearized Dirac equation.  Its
// declared inner product is <(b,l),(b',l')> = int Re(conj(b) b') + 4 Re(conj(l) l').
// ---------------------------------------------------------------------------

struct PlanarBackground {
    Grid2 grid;
    ScalarField2 A1, A2;  // determinant-line components (twice the vortex a)
    ComplexField2 alpha;

    explicit PlanarBackground(const Grid2& g) : grid(g), A1(g), A2(g), alpha(g) {}

    complexd a_zbar(std::size_t n) const { return 0.25 * complexd(A1[n], A2[n]); }
    complexd a_z(std::size_t n) const { return 0.25 * complexd(A1[n], -A2[n]); }
};

inline PlanarBackground background_of(const VortexSolution& v) {
    PlanarBackground bg(v.grid);
    for (std::size_t n = 0; n < v.grid.size(); ++n) {
        bg.A1[n] = 2.0 * v.a1[n];
        bg.A2[n] = 2.0 * v.a2[n];
        bg.alpha[n] = v.alpha[n];
    }
    return bg;
}

/// Planar slice (k = 0) of an x3-invariant configuration.
inline PlanarBackground background_of_slice(const SWField3& c) {
    Grid2 g2(c.grid.nx(), c.grid.ny(), c.grid.h(), c.grid.center());
    PlanarBackground bg(g2);
    for (int j = 0; j < g2.ny(); ++j)
        for (int i = 0; i < g2.nx(); ++i) {
            const std::size_t n2 = g2.idx(i, j);
            const std::size_t n3 = c.grid.idx(i, j, 0);
            bg.A1[n2] = c.A1[n3];
            bg.A2[n2] = c.A2[n3];
            bg.alpha[n2] = c.alpha[n3];
        }
    return bg;
}

struct PlanarSection {
    ComplexField2 b, lambda;
    explicit PlanarSection(const Grid2& g) : b(g), lambda(g) {}
};

/// Theta applied with the shared second-order stencils (all nodes).
inline PlanarSection apply_theta(const PlanarBackground& bg, const PlanarSection& s) {
    const Grid2& g = bg.grid;
    PlanarSection out(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            const complexd al = bg.alpha[n];
            out.b[n] = -2.0 * del(s.b, i, j) - 2.0 * complexd(0, 1) * std::conj(al) * s.lambda[n];
            out.lambda[n] = 2.0 * (dbar(s.lambda, i, j) -
                                   complexd(0, 1) * bg.a_zbar(n) * s.lambda[n]) -
                            complexd(0, 0.5) * s.b[n] * al;
        }
    return out;
}

/// Formal adjoint of Theta in the declared product (same stencils).
inline PlanarSection apply_theta_dagger(const PlanarBackground& bg, const PlanarSection& s) {
    const Grid2& g = bg.grid;
    PlanarSection out(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            const complexd al = bg.alpha[n];
            out.b[n] = 2.0 * dbar(s.b, i, j) + 2.0 * complexd(0, 1) * std::conj(al) * s.lambda[n];
            out.lambda[n] = complexd(0, 0.5) * s.b[n] * al -
                            2.0 * (del(s.lambda, i, j) -
                                   complexd(0, 1) * bg.a_z(n) * s.lambda[n]);
        }
    return out;
}

/// Gauge functional delta^1(b, l) = div b - 2 Im(conj(alpha) l): the exact
/// adjoint-pairing complement of the infinitesimal gauge direction
/// (-(d1 + i d2) xi, -(i/2) xi alpha) in the declared product.
inline ScalarField2 gauge_delta1(const PlanarBackground& bg, const PlanarSection& s) {
    const Grid2& g = bg.grid;
    ScalarField2 out(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            const double divb = dx1(s.b, i, j).real() + dx2(s.b, i, j).imag();
            out[n] = divb - 2.0 * std::imag(std::conj(bg.alpha[n]) * s.lambda[n]);
        }
    return out;
}

/// Infinitesimal gauge direction generated by a real function xi.
inline PlanarSection gauge_direction(const PlanarBackground& bg, const ScalarField2& xi) {
    const Grid2& g = bg.grid;
    PlanarSection out(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            out.b[n] = -complexd(dx1(xi, i, j), dx2(xi, i, j));
            out.lambda[n] = -complexd(0, 0.5) * xi[n] * bg.alpha[n];
        }
    return out;
}

// --- interior-dof packing ---------------------------------------------------

namespace ops_detail {

inline std::size_t interior_count(const Grid2& g) {
    return static_cast<std::size_t>(g.nx() - 2) * (g.ny() - 2);
}

inline std::size_t interior_index(const Grid2& g, int i, int j) {
    return static_cast<std::size_t>(j - 1) * (g.nx() - 2) + (i - 1);
}

}  // namespace ops_detail

/// Pack a planar section's interior values as [Re b, Im b, Re l, Im l] per node.
inline Vec pack_section(const PlanarSection& s) {
    const Grid2& g = s.b.grid();
    Vec out(4 * ops_detail::interior_count(g));
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t q = 4 * ops_detail::interior_index(g, i, j);
            const std::size_t n = g.idx(i, j);
            out[q] = s.b[n].real();
            out[q + 1] = s.b[n].imag();
            out[q + 2] = s.lambda[n].real();
            out[q + 3] = s.lambda[n].imag();
        }
    return out;
}

/// Unpack interior dofs into a full-grid section with zero boundary values.
inline PlanarSection unpack_section(const Grid2& g, const Vec& v) {
    PlanarSection s(g);
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t q = 4 * ops_detail::interior_index(g, i, j);
            const std::size_t n = g.idx(i, j);
            s.b[n] = complexd(v[q], v[q + 1]);
            s.lambda[n] = complexd(v[q + 2], v[q + 3]);
        }
    return s;
}

/// Assemble Theta on interior nodes with homogeneous Dirichlet data as a
/// square sparse matrix, with the weighted products and interior mask filled.
inline OperatorHandle assemble_theta(const PlanarBackground& bg) {
    const Grid2& g = bg.grid;
    const std::size_t m = ops_detail::interior_count(g);
    const double h = g.h();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m * 4 * 8);

    auto add_complex = [&](std::size_t row_pair, std::size_t col_pair, complexd coeff) {
        // out_pair += coeff * in_pair as 2x2 real block.
        const double re = coeff.real(), im = coeff.imag();
        if (re != 0.0) {
            trip.emplace_back(row_pair, col_pair, re);
            trip.emplace_back(row_pair + 1, col_pair + 1, re);
        }
        if (im != 0.0) {
            trip.emplace_back(row_pair, col_pair + 1, -im);
            trip.emplace_back(row_pair + 1, col_pair, im);
        }
    };

    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t q = 4 * ops_detail::interior_index(g, i, j);
            const std::size_t n = g.idx(i, j);
            const complexd al = bg.alpha[n];
            // Row pair q: mu-slot = -2 del b - 2i conj(al) lambda.
            // del b = (dx1 b - i dx2 b)/2 via central differences.
            auto neighbor = [&](int di, int dj) -> std::optional<std::size_t> {
                const int ii = i + di, jj = j + dj;
                if (ii <= 0 || ii >= g.nx() - 1 || jj <= 0 || jj >= g.ny() - 1)
                    return std::nullopt;  // Dirichlet zero
                return 4 * ops_detail::interior_index(g, ii, jj);
            };
            struct Stencil {
                int di, dj;
                complexd w;
            };
            const complexd inv2h(1.0 / (2.0 * h), 0.0);
            // -2 del = -(d1 - i d2).
            const Stencil del_st[4] = {{1, 0, -inv2h},
                                       {-1, 0, inv2h},
                                       {0, 1, complexd(0, 1) * inv2h},
                                       {0, -1, complexd(0, -1) * inv2h}};
            for (const auto& st : del_st)
                if (auto col = neighbor(st.di, st.dj)) add_complex(q, *col, st.w);
            add_complex(q, q + 2, complexd(0, -2) * std::conj(al));
            // Row pair q+2: nu-slot = 2 dbar l - 2i a_zbar l - (i/2) b al.
            const Stencil dbar_st[4] = {{1, 0, inv2h},
                                        {-1, 0, -inv2h},
                                        {0, 1, complexd(0, 1) * inv2h},
                                        {0, -1, complexd(0, -1) * inv2h}};
            for (const auto& st : dbar_st)
                if (auto col = neighbor(st.di, st.dj)) add_complex(q + 2, *col + 2, st.w);
            add_complex(q + 2, q + 2, complexd(0, -2) * bg.a_zbar(n));
            add_complex(q + 2, q, complexd(0, -0.5) * al);
        }

    auto matrix = std::make_shared<SpMat>(4 * m, 4 * m);
    matrix->setFromTriplets(trip.begin(), trip.end());
    matrix->makeCompressed();

    OperatorHandle op;
    op.name = "theta";
    op.rows = op.cols = static_cast<int>(4 * m);
    op.matrix = *matrix;
    // Weighted products: per node [1, 1, 4, 4] * h^2 on both sides.
    Vec w(4 * m);
    for (std::size_t p = 0; p < m; ++p) {
        w[4 * p] = w[4 * p + 1] = h * h;
        w[4 * p + 2] = w[4 * p + 3] = 4.0 * h * h;
    }
    op.domain_weight = w;
    op.range_weight = w;
    op.apply = [matrix](const Vec& x) -> Vec { return (*matrix) * x; };
    {
        const Vec dw = op.domain_weight, rw = op.range_weight;
        op.apply_adjoint = [matrix, dw, rw](const Vec& y) -> Vec {
            const Vec out = matrix->transpose() * rw.cwiseProduct(y);
            return out.cwiseQuotient(dw);
        };
    }
    return op;
}

// ---------------------------------------------------------------------------
// Kernel analysis
// ---------------------------------------------------------------------------

struct GapPolicy {
    double threshold = 100.0;           // required (first retained)/(last rejected)
    double candidate_fraction = 1e-4;   // sigma < fraction * sigma_max are candidates
    double localization = 0.95;         // interior-mass filter for genuine modes
    double max_roughness = 1.0;         // lattice-scale oscillation filter
    int num_singular_values = 10;
    std::uint64_t seed = 2024;
};

struct KernelReport {
    std::vector<double> singular_values;  // ascending
    double sigma_max = 0.0;
    int dim_ker = 0;
    int dim_coker = 0;
    double gap_ratio = 0.0;
    bool conclusive = false;
    std::string note;
    std::vector<Vec> kernel_basis;        // weighted-orthonormal, interior dofs
    std::vector<Vec> coker_basis;
    std::vector<double> kernel_localization, coker_localization;
    std::vector<double> kernel_roughness, coker_roughness;
    std::vector<double> kernel_decay_rate, kernel_decay_quality;
};

/// Per-vector diagnostic callback type: maps an interior-dof vector to a
/// scalar score (e.g. lattice roughness).
using VectorScore = std::function<double(const Vec&)>;

namespace ops_detail {

struct SideResult {
    std::vector<double> values;
    std::vector<Vec> null_vectors;  // unfolded, weighted-orthonormal
    std::vector<double> localization, roughness;
    int null_count = 0;       // candidates below the gap
    int genuine_count = 0;    // candidates passing the filters
    double gap_ratio = 0.0;
    bool conclusive = true;
};

inline SideResult analyze_side(const SpMat& folded, const Vec& weight, const Vec& mask,
                               double sigma_max, const GapPolicy& policy,
                               const VectorScore& roughness, std::uint64_t seed) {
    SideResult out;
    auto pairs = smallest_singular_pairs(folded, policy.num_singular_values, seed);
    out.values.assign(pairs.values.data(), pairs.values.data() + pairs.values.size());

    // Split the computed window at the last ratio exceeding the threshold:
    // everything below the split is null (genuine modes plus boundary or
    // lattice artifacts, separated afterwards by the filters).  When no split
    // qualifies, the result is conclusive-empty only if even the smallest
    // value sits above the absolute candidate scale.
    const double floor = std::max(1e-14 * sigma_max, 1e-300);
    const int nv = static_cast<int>(out.values.size());
    int split = -1;
    double best = 0.0;
    for (int i = 0; i + 1 < nv; ++i) {
        const double ratio = out.values[i + 1] / std::max(out.values[i], floor);
        if (ratio >= policy.threshold) {
            split = i;
            best = ratio;
        }
    }
    if (split < 0) {
        if (!out.values.empty() && out.values[0] >= policy.candidate_fraction * sigma_max) {
            out.gap_ratio = std::numeric_limits<double>::infinity();
            out.conclusive = true;  // nothing rejected: the gap is vacuous
        } else {
            out.conclusive = false;
        }
        return out;
    }
    const int cand = split + 1;
    out.null_count = cand;
    out.gap_ratio = best;
    // The SVD returns an arbitrary rotation within the near-degenerate null
    // subspace, so genuine modes are counted basis-independently: rotate the
    // null basis to the principal directions of the interior-mass form first.
    DenseMat folded_null(pairs.right.rows(), cand);
    for (int q = 0; q < cand; ++q) folded_null.col(q) = pairs.right.col(q);
    {
        const Vec sqw = weight.cwiseSqrt();
        DenseMat gram(cand, cand);
        for (int p = 0; p < cand; ++p)
            for (int q = 0; q <= p; ++q) {
                const Vec vp = folded_null.col(p).cwiseQuotient(sqw);
                const Vec vq = folded_null.col(q).cwiseQuotient(sqw);
                gram(p, q) = gram(q, p) = vp.cwiseProduct(weight).cwiseProduct(mask).dot(vq);
            }
        Eigen::SelfAdjointEigenSolver<DenseMat> eig(gram);
        folded_null = folded_null * eig.eigenvectors();
    }
    for (int q = 0; q < cand; ++q) {
        // Unfold: physical = W^{-1/2} folded-coordinates vector.
        Vec v = folded_null.col(q).cwiseQuotient(weight.cwiseSqrt());
        const double nrm = std::sqrt(v.cwiseProduct(weight).dot(v));
        v /= nrm;
        const double inner = v.cwiseProduct(weight).cwiseProduct(mask).dot(v);
        const double rough = roughness ? roughness(v) : 0.0;
        out.localization.push_back(inner);
        out.roughness.push_back(rough);
        if (inner >= policy.localization && rough <= policy.max_roughness) {
            out.null_vectors.push_back(v);
            ++out.genuine_count;
        }
    }
    return out;
}

}  // namespace ops_detail

/// Estimate dim ker / dim coker of an assembled operator from the smallest
/// singular values of the weighted matrix.  Near-null vectors count as genuine
/// only when interior-localized (mask) and smooth on the lattice scale
/// (roughness callback): truncation artifacts live at the boundary, and the
/// central-difference doubler modes oscillate at the lattice scale.
inline KernelReport kernel_analysis(const OperatorHandle& op, const Vec& domain_mask,
                                    const Vec& range_mask, const GapPolicy& policy = {},
                                    const VectorScore& domain_roughness = {},
                                    const VectorScore& range_roughness = {}) {
    const SpMat W = op.weighted_matrix();
    KernelReport rep;
    rep.sigma_max = largest_singular_value(W);
    auto right = ops_detail::analyze_side(W, op.domain_weight, domain_mask, rep.sigma_max,
                                          policy, domain_roughness, policy.seed);
    auto left = ops_detail::analyze_side(SpMat(W.transpose()), op.range_weight, range_mask,
                                         rep.sigma_max, policy, range_roughness,
                                         policy.seed + 1);
    rep.singular_values = right.values;
    rep.gap_ratio = right.gap_ratio;
    rep.conclusive = right.conclusive && left.conclusive;
    if (!rep.conclusive) {
        rep.note = "no spectral gap under the policy; dimensions not determined";
        return rep;
    }
    rep.dim_ker = right.genuine_count;
    rep.dim_coker = left.genuine_count;
    rep.kernel_basis = right.null_vectors;
    rep.coker_basis = left.null_vectors;
    rep.kernel_localization = right.localization;
    rep.coker_localization = left.localization;
    rep.kernel_roughness = right.roughness;
    rep.coker_roughness = left.roughness;
    return rep;
}

/// Lattice-roughness score of a packed planar section: h^2 ||Lap_h s|| / ||s||,
/// ~h^2 for smooth sections and ~8 for checkerboard modes.
inline double section_roughness(const Grid2& g, const Vec& v) {
    const PlanarSection s = unpack_section(g, v);
    double num = 0.0, den = 0.0;
    for (int j = 2; j < g.ny() - 2; ++j)
        for (int i = 2; i < g.nx() - 2; ++i) {
            num += std::norm(laplacian(s.b, i, j)) + 4.0 * std::norm(laplacian(s.lambda, i, j));
            den += std::norm(s.b[g.idx(i, j)]) + 4.0 * std::norm(s.lambda[g.idx(i, j)]);
        }
    if (den == 0.0) return 0.0;
    return g.h() * g.h() * std::sqrt(num / den);
}

/// Interior mask (|z| within the fraction of the covered radius) for sections
/// assembled by assemble_theta.
inline Vec theta_interior_mask(const Grid2& g, double fraction = 0.5) {
    Vec mask(4 * ops_detail::interior_count(g));
    for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
            const double in = (std::abs(g.z(i, j)) <= fraction * g.covered_radius()) ? 1.0 : 0.0;
            const std::size_t q = 4 * ops_detail::interior_index(g, i, j);
            mask[q] = mask[q + 1] = mask[q + 2] = mask[q + 3] = in;
        }
    return mask;
}

/// Kernel analysis of Theta at a vortex background, with radial decay fits of
/// the kernel basis elements appended.
inline KernelReport theta_kernel_report(const PlanarBackground& bg, const GapPolicy& policy = {}) {
    auto op = assemble_theta(bg);
    const Vec mask = theta_interior_mask(bg.grid);
    const Grid2 grid = bg.grid;
    const VectorScore rough = [grid](const Vec& v) { return section_roughness(grid, v); };
    auto rep = kernel_analysis(op, mask, mask, policy, rough, rough);
    const Grid2& g = bg.grid;
    for (const Vec& v : rep.kernel_basis) {
        // Radial-bin RMS of the pointwise section magnitude, then a log fit.
        const PlanarSection s = unpack_section(g, v);
        const double r0 = 0.3 * g.covered_radius(), r1 = 0.75 * g.covered_radius();
        const double bin_w = 2.0 * g.h();
        const int nbins = static_cast<int>((r1 - r0) / bin_w);
        std::vector<double> sums(nbins, 0.0);
        std::vector<int> counts(nbins, 0);
        for (int j = 1; j < g.ny() - 1; ++j)
            for (int i = 1; i < g.nx() - 1; ++i) {
                const double r = std::abs(g.z(i, j));
                const int bin = static_cast<int>((r - r0) / bin_w);
                if (bin < 0 || bin >= nbins) continue;
                const std::size_t n = g.idx(i, j);
                sums[bin] += std::norm(s.b[n]) + 4.0 * std::norm(s.lambda[n]);
                counts[bin] += 1;
            }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        std::vector<std::pair<double, double>> pts;
        for (int bin = 0; bin < nbins; ++bin) {
            if (counts[bin] == 0) continue;
            const double rms = std::sqrt(sums[bin] / counts[bin]);
            if (rms <= 1e-280) continue;
            pts.push_back({r0 + (bin + 0.5) * bin_w, std::log(rms)});
        }
        for (auto& [x, y] : pts) {
            sx += x; sy += y; sxx += x * x; sxy += x * y; ++m;
        }
        if (m < 4) {
            rep.kernel_decay_rate.push_back(0.0);
            rep.kernel_decay_quality.push_back(0.0);
            continue;
        }
        const double denom = m * sxx - sx * sx;
        const double slope = (m * sxy - sx * sy) / denom;
        const double inter = (sy - slope * sx) / m;
        double ss_res = 0, ss_tot = 0;
        const double mean = sy / m;
        for (auto& [x, y] : pts) {
            ss_res += (y - inter - slope * x) * (y - inter - slope * x);
            ss_tot += (y - mean) * (y - mean);
        }
        rep.kernel_decay_rate.push_back(-slope);
        rep.kernel_decay_quality.push_back(ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// The extended operator D_c on spatial sections and its T' + N' decomposition
// ---------------------------------------------------------------------------

/// Section of W_1 = iR + (T*M + S): real scalar, real 1-form, two spinor
/// components.
struct W1Section {
    ScalarField3 gamma_hat;
    OneForm3 a;
    ComplexField3 eta_alpha, eta_beta;
    explicit W1Section(const Grid3& g) : gamma_hat(g), a(g), eta_alpha(g), eta_beta(g) {}
};

inline double w1_norm(const W1Section& s) {
    const Grid3& g = s.gamma_hat.grid();
    double acc = 0.0;
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                acc += trapezoid_weight(g, i, j, k) *
                       (s.gamma_hat[n] * s.gamma_hat[n] + s.a.c1[n] * s.a.c1[n] +
                        s.a.c2[n] * s.a.c2[n] + s.a.c3[n] * s.a.c3[n] +
                        4.0 * (std::norm(s.eta_alpha[n]) + std::norm(s.eta_beta[n])));
            }
    return std::sqrt(acc);
}

/// Full extended operator D_c(gamma, q) = (0, d_c gamma) + (d_c* q, D_c q)
/// evaluated with the shared second-order stencils.  Pure function.
inline W1Section apply_Dc(const SWField3& c, const W1Section& s) {
    c.check_temporal();
    const Grid3& g = c.grid;
    W1Section out(g);
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                const complexd al = c.alpha[n], be = c.beta[n];
                const complexd ea = s.eta_alpha[n], eb = s.eta_beta[n];

                // Scalar slot: d_c* q = div a - 2 Im(conj(psi) eta).
                const double diva =
                    dx1(s.a.c1, i, j, k) + dx2(s.a.c2, i, j, k) + dx3(s.a.c3, i, j, k);
                out.gamma_hat[n] =
                    diva - 2.0 * std::imag(std::conj(al) * ea + std::conj(be) * eb);

                // 1-form slot: -grad gamma + linearized curvature equation
                // (determinant-line normalization).
                const complexd dab = ea * std::conj(be) + al * std::conj(eb);
                const double dm1 =
                    (dx2(s.a.c3, i, j, k) - dx3(s.a.c2, i, j, k)) + 2.0 * dab.real();
                const double dm2 =
                    (dx3(s.a.c1, i, j, k) - dx1(s.a.c3, i, j, k)) - 2.0 * dab.imag();
                const double dm3 = (dx1(s.a.c2, i, j, k) - dx2(s.a.c1, i, j, k)) +
                                   2.0 * std::real(std::conj(al) * ea) -
                                   2.0 * std::real(std::conj(be) * eb);
                out.a.c1[n] = -dx1(s.gamma_hat, i, j, k) + dm1;
                out.a.c2[n] = -dx2(s.gamma_hat, i, j, k) + dm2;
                out.a.c3[n] = -dx3(s.gamma_hat, i, j, k) + dm3;

                // Spinor slot: -(i/2) gamma psi + Dirac eta - (i/2) rho(a) psi.
                const complexd ihalf(0.0, 0.5);
                std::array<complexd, 2> spin{-ihalf * s.gamma_hat[n] * al,
                                             -ihalf * s.gamma_hat[n] * be};
                // Dirac eta with the background connection.
                const std::array<complexd, 2> cov1{
                    dx1(s.eta_alpha, i, j, k) - ihalf * c.A1[n] * ea,
                    dx1(s.eta_beta, i, j, k) - ihalf * c.A1[n] * eb};
                const std::array<complexd, 2> cov2{
                    dx2(s.eta_alpha, i, j, k) - ihalf * c.A2[n] * ea,
                    dx2(s.eta_beta, i, j, k) - ihalf * c.A2[n] * eb};
                const std::array<complexd, 2> cov3{
                    dx3(s.eta_alpha, i, j, k) - ihalf * c.A3[n] * ea,
                    dx3(s.eta_beta, i, j, k) - ihalf * c.A3[n] * eb};
                for (auto [mat, cov] :
                     {std::pair{1, cov1}, std::pair{2, cov2}, std::pair{3, cov3}}) {
                    const auto t = matvec(gamma(mat), cov);
                    spin[0] += t[0];
                    spin[1] += t[1];
                }
                const std::array<complexd, 2> psi{al, be};
                for (int d = 0; d < 3; ++d) {
                    const double ad = (d == 0) ? s.a.c1[n] : (d == 1) ? s.a.c2[n] : s.a.c3[n];
                    const auto t = matvec(gamma(d + 1), psi);
                    spin[0] += -ihalf * ad * t[0];
                    spin[1] += -ihalf * ad * t[1];
                }
                out.eta_alpha[n] = spin[0];
                out.eta_beta[n] = spin[1];
            }
    return out;
}

/// Infinitesimal gauge direction d_c xi = (-grad xi, -(i/2) xi psi) as a
/// W_0 section embedded in W_1 (zero scalar slot).
inline W1Section gauge_direction_3d(const SWField3& c, const ScalarField3& xi) {
    const Grid3& g = c.grid;
    W1Section out(g);
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                out.a.c1[n] = -dx1(xi, i, j, k);
                out.a.c2[n] = -dx2(xi, i, j, k);
                out.a.c3[n] = -dx3(xi, i, j, k);
                out.eta_alpha[n] = -complexd(0, 0.5) * xi[n] * c.alpha[n];
                out.eta_beta[n] = -complexd(0, 0.5) * xi[n] * c.beta[n];
            }
    return out;
}

/// Complex packing of a W1 section over an x3-invariant background:
/// V-block (b, lambda) = (a1 + i a2, eta_alpha), N-block (mu, nu) =
/// (a3 - i gamma, eta_beta).
struct TNBlocks {
    ComplexField3 b, lambda, mu, nu;
    explicit TNBlocks(const Grid3& g) : b(g), lambda(g), mu(g), nu(g) {}
};

inline TNBlocks pack_blocks(const W1Section& s) {
    const Grid3& g = s.gamma_hat.grid();
    TNBlocks out(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
        out.b[n] = complexd(s.a.c1[n], s.a.c2[n]);
        out.lambda[n] = s.eta_alpha[n];
        out.mu[n] = complexd(s.a.c3[n], -s.gamma_hat[n]);
        out.nu[n] = s.eta_beta[n];
    }
    return out;
}

struct TNDecomposition {
    TNBlocks t_part;   // T' = diag(d3, -d3) blockwise
    TNBlocks n_part;   // N' = offdiag(-Theta^dag, Theta) slice by slice
    double defect = 0.0;

    explicit TNDecomposition(const Grid3& g) : t_part(g), n_part(g) {}
};

/// Verify D_c = i(T' + N') on an x3-invariant background: returns the parts
/// and the norm of the defect.
inline TNDecomposition decompose_TN(const SWField3& c, const W1Section& s) {
    const Grid3& g = c.grid;
    c.check_temporal();
    // x3 invariance of the background.
    for (int k = 1; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                if (c.alpha[g.idx(i, j, k)] != c.alpha[g.idx(i, j, 0)] ||
                    c.A1[g.idx(i, j, k)] != c.A1[g.idx(i, j, 0)] ||
                    c.A2[g.idx(i, j, k)] != c.A2[g.idx(i, j, 0)] ||
                    c.beta[g.idx(i, j, k)] != complexd(0.0))
                    throw std::invalid_argument(
                        "decompose_TN: background must be an x3-invariant pullback");
            }

    const PlanarBackground bg = background_of_slice(c);
    const Grid2& g2 = bg.grid;
    const TNBlocks in = pack_blocks(s);
    TNDecomposition out(g);

    // T' part: d3 on the V block, -d3 on the N block.
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                out.t_part.b[n] = dx3(in.b, i, j, k);
                out.t_part.lambda[n] = dx3(in.lambda, i, j, k);
                out.t_part.mu[n] = -dx3(in.mu, i, j, k);
                out.t_part.nu[n] = -dx3(in.nu, i, j, k);
            }

    // N' part, slice by slice with the planar Theta.
    for (int k = 0; k < g.nz(); ++k) {
        PlanarSection v(g2), nsec(g2);
        for (int j = 0; j < g2.ny(); ++j)
            for (int i = 0; i < g2.nx(); ++i) {
                v.b[g2.idx(i, j)] = in.b[g.idx(i, j, k)];
                v.lambda[g2.idx(i, j)] = in.lambda[g.idx(i, j, k)];
                nsec.b[g2.idx(i, j)] = in.mu[g.idx(i, j, k)];
                nsec.lambda[g2.idx(i, j)] = in.nu[g.idx(i, j, k)];
            }
        const PlanarSection tv = apply_theta(bg, v);
        const PlanarSection tdn = apply_theta_dagger(bg, nsec);
        for (int j = 0; j < g2.ny(); ++j)
            for (int i = 0; i < g2.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                const std::size_t n2 = g2.idx(i, j);
                out.n_part.b[n] = -tdn.b[n2];
                out.n_part.lambda[n] = -tdn.lambda[n2];
                out.n_part.mu[n] = tv.b[n2];
                out.n_part.nu[n] = tv.lambda[n2];
            }
    }

    // Defect of D_c - i(T' + N').
    const W1Section dc = apply_Dc(c, s);
    const TNBlocks lhs = pack_blocks(dc);
    const complexd I(0.0, 1.0);
    double acc = 0.0;
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                const double w = trapezoid_weight(g, i, j, k);
                acc += w * std::norm(lhs.b[n] - I * (out.t_part.b[n] + out.n_part.b[n]));
                acc += 4.0 * w *
                       std::norm(lhs.lambda[n] - I * (out.t_part.lambda[n] + out.n_part.lambda[n]));
                acc += w * std::norm(lhs.mu[n] - I * (out.t_part.mu[n] + out.n_part.mu[n]));
                acc += 4.0 * w * std::norm(lhs.nu[n] - I * (out.t_part.nu[n] + out.n_part.nu[n]));
            }
    out.defect = std::sqrt(acc);
    return out;
}

// ---------------------------------------------------------------------------
// Slice kernel and the projection Pi_c
// ---------------------------------------------------------------------------

/// Orthonormal basis of Ker Theta at the planar slice of an x3-invariant
/// background (constant across slices).
struct SliceKernel {
    Grid2 grid;
    std::vector<PlanarSection> basis;  // orthonormal in the V-block product
    int complex_rank() const { return static_cast<int>(basis.size()) / 2; }

    explicit SliceKernel(const Grid2& g) : grid(g) {}
};

inline double v_block_dot(const PlanarSection& x, const PlanarSection& y) {
    const Grid2& g = x.b.grid();
    double acc = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.idx(i, j);
            acc += trapezoid_weight(g, i, j) *
                   (std::real(std::conj(x.b[n]) * y.b[n]) +
                    4.0 * std::real(std::conj(x.lambda[n]) * y.lambda[n]));
        }
    return acc;
}

inline SliceKernel build_slice_kernel(const SWField3& c, const GapPolicy& policy = {}) {
    const PlanarBackground bg = background_of_slice(c);
    auto rep = theta_kernel_report(bg, policy);
    if (!rep.conclusive)
        throw std::runtime_error("build_slice_kernel: kernel analysis inconclusive");
    SliceKernel out(bg.grid);
    for (const Vec& v : rep.kernel_basis) {
        PlanarSection s = unpack_section(bg.grid, v);
        // Re-normalize in the full-grid quadrature product.
        for (const auto& prev : out.basis) {
            const double coef = v_block_dot(prev, s);
            for (std::size_t n = 0; n < bg.grid.size(); ++n) {
                s.b[n] -= coef * prev.b[n];
                s.lambda[n] -= coef * prev.lambda[n];
            }
        }
        const double nrm = std::sqrt(v_block_dot(s, s));
        if (nrm <= 1e-12) continue;
        for (std::size_t n = 0; n < bg.grid.size(); ++n) {
            s.b[n] /= nrm;
            s.lambda[n] /= nrm;
        }
        out.basis.push_back(std::move(s));
    }
    return out;
}

/// Slice-by-slice projection onto L^2(K_c): the V-block components are
/// projected onto the kernel basis, the N-block maps to zero.
inline W1Section project_Pi(const SWField3& c, const SliceKernel& kernel, const W1Section& s) {
    const Grid3& g = c.grid;
    require(!kernel.basis.empty() || true, "project_Pi: kernel basis required");
    const Grid2& g2 = kernel.grid;
    require(g2.nx() == g.nx() && g2.ny() == g.ny(), "project_Pi: slice grid mismatch");
    const TNBlocks in = pack_blocks(s);
    W1Section out(g);
    for (int k = 0; k < g.nz(); ++k) {
        PlanarSection v(g2);
        for (int j = 0; j < g2.ny(); ++j)
            for (int i = 0; i < g2.nx(); ++i) {
                v.b[g2.idx(i, j)] = in.b[g.idx(i, j, k)];
                v.lambda[g2.idx(i, j)] = in.lambda[g.idx(i, j, k)];
            }
        PlanarSection proj(g2);
        for (const auto& base : kernel.basis) {
            const double coef = v_block_dot(base, v);
            for (std::size_t n = 0; n < g2.size(); ++n) {
                proj.b[n] += coef * base.b[n];
                proj.lambda[n] += coef * base.lambda[n];
            }
        }
        for (int j = 0; j < g2.ny(); ++j)
            for (int i = 0; i < g2.nx(); ++i) {
                const std::size_t n = g.idx(i, j, k);
                const std::size_t n2 = g2.idx(i, j);
                out.a.c1[n] = proj.b[n2].real();
                out.a.c2[n] = proj.b[n2].imag();
                out.eta_alpha[n] = proj.lambda[n2];
            }
    }
    return out;
}

}  // namespace swlab
