#pragma once

#include <cmath>

#include "swlab/cutoff.hpp"
#include "swlab/stencil.hpp"

namespace swlab {

namespace detail {

template <typename T>
double abs_sq(const T& v) {
    if constexpr (std::is_same_v<T, double>) return v * v;
    else return std::norm(v);
}

template <typename T>
std::vector<Field<Grid2, T>> gradient_fields(const Field<Grid2, T>& f) {
    const Grid2& g = f.grid();
    std::vector<Field<Grid2, T>> out(2, Field<Grid2, T>(g));
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            out[0][g.idx(i, j)] = dx1(f, i, j);
            out[1][g.idx(i, j)] = dx2(f, i, j);
        }
    return out;
}

template <typename T>
std::vector<Field<Grid3, T>> gradient_fields(const Field<Grid3, T>& f) {
    const Grid3& g = f.grid();
    std::vector<Field<Grid3, T>> out(3, Field<Grid3, T>(g));
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                out[0][g.idx(i, j, k)] = dx1(f, i, j, k);
                out[1][g.idx(i, j, k)] = dx2(f, i, j, k);
                out[2][g.idx(i, j, k)] = dx3(f, i, j, k);
            }
    return out;
}

// Per-node squared magnitude fields of grad^i f for i = 0..k: derivative
// tensors are built by repeated first differences, mixed entries counted with
// multiplicity.
template <typename GridT, typename T>
std::vector<std::vector<double>> deriv_sq_fields(const Field<GridT, T>& f, int k) {
    std::vector<std::vector<double>> out;
    std::vector<Field<GridT, T>> level{f};
    for (int order = 0; order <= k; ++order) {
        std::vector<double> sq(f.size(), 0.0);
        for (const auto& comp : level)
            for (std::size_t n = 0; n < comp.size(); ++n) sq[n] += abs_sq(comp[n]);
        out.push_back(std::move(sq));
        if (order == k) break;
        std::vector<Field<GridT, T>> next;
        for (const auto& comp : level) {
            auto grads = gradient_fields(comp);
            for (auto& gf : grads) next.push_back(std::move(gf));
        }
        level = std::move(next);
    }
    return out;
}

inline double node_weight_pow(const WeightSpec& spec, const Grid2& g, std::size_t n, double p) {
    const int i = static_cast<int>(n % g.nx());
    const int j = static_cast<int>(n / g.nx());
    return std::pow(spec.sigma(spec.f_of(g, i, j)), p);
}

inline double node_weight_pow(const WeightSpec& spec, const Grid3& g, std::size_t n, double p) {
    const int i = static_cast<int>(n % g.nx());
    const int j = static_cast<int>((n / g.nx()) % g.ny());
    const int k = static_cast<int>(n / (static_cast<std::size_t>(g.nx()) * g.ny()));
    return std::pow(spec.sigma(spec.f_of(g, i, j, k)), p);
}

inline double node_quad_weight(const Grid2& g, std::size_t n) {
    const int i = static_cast<int>(n % g.nx());
    const int j = static_cast<int>(n / g.nx());
    return trapezoid_weight(g, i, j);
}

inline double node_quad_weight(const Grid3& g, std::size_t n) {
    const int i = static_cast<int>(n % g.nx());
    const int j = static_cast<int>((n / g.nx()) % g.ny());
    const int k = static_cast<int>(n / (static_cast<std::size_t>(g.nx()) * g.ny()));
    return trapezoid_weight(g, i, j, k);
}

}  // namespace detail

enum class NormP { L2, LInf };

/// Sum over i <= k of || sigma^eps * grad^i f ||_p (Def 2.2.11 layout: the
/// same weight power at every derivative order).  eps = 0 reduces to the
/// unweighted norm.
template <typename GridT, typename T>
double weighted_norm(const Field<GridT, T>& f, const WeightSpec& spec, NormP p, int k) {
    require(k >= 0 && k <= 2, "weighted_norm: derivative count must be <= 2");
    const GridT& g = f.grid();
    const auto sq = detail::deriv_sq_fields(f, k);
    double total = 0.0;
    for (int order = 0; order <= k; ++order) {
        if (p == NormP::L2) {
            double s = 0.0;
            for (std::size_t n = 0; n < f.size(); ++n)
                s += detail::node_quad_weight(g, n) *
                     detail::node_weight_pow(spec, g, n, 2.0 * spec.epsilon) * sq[order][n];
            total += std::sqrt(s);
        } else {
            double m = 0.0;
            for (std::size_t n = 0; n < f.size(); ++n)
                m = std::max(m, detail::node_weight_pow(spec, g, n, spec.epsilon) *
                                    std::sqrt(sq[order][n]));
            total += m;
        }
    }
    return total;
}

template <typename GridT, typename T>
double l2_norm(const Field<GridT, T>& f) {
    const GridT& g = f.grid();
    double s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n)
        s += detail::node_quad_weight(g, n) * detail::abs_sq(f[n]);
    return std::sqrt(s);
}

template <typename GridT, typename T>
double sup_norm(const Field<GridT, T>& f) {
    double m = 0.0;
    for (const auto& v : f.values()) m = std::max(m, std::sqrt(detail::abs_sq(v)));
    return m;
}

}  // namespace swlab
