#pragma once

#include "swlab/grid.hpp"

namespace swlab {

// Second-order differences: central at interior nodes, one-sided second-order
// at the boundary.  Index arithmetic assumes n >= 3 along each axis, which the
// grid invariants guarantee.

namespace detail {

template <typename T, typename At>
T d1_line(At&& at, int i, int n, double h) {
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(i + 1) - at(i - 1)) / (2.0 * h);
}

template <typename T, typename At>
T d2_line(At&& at, int i, int n, double h) {
    if (i == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h);
    if (i == n - 1)
        return (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / (h * h);
    return (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
}

}  // namespace detail

template <typename T>
T dx1(const Field<Grid2, T>& f, int i, int j) {
    const Grid2& g = f.grid();
    return detail::d1_line<T>([&](int ii) { return f[g.idx(ii, j)]; }, i, g.nx(), g.h());
}

template <typename T>
T dx2(const Field<Grid2, T>& f, int i, int j) {
    const Grid2& g = f.grid();
    return detail::d1_line<T>([&](int jj) { return f[g.idx(i, jj)]; }, j, g.ny(), g.h());
}

template <typename T>
T dx1(const Field<Grid3, T>& f, int i, int j, int k) {
    const Grid3& g = f.grid();
    return detail::d1_line<T>([&](int ii) { return f[g.idx(ii, j, k)]; }, i, g.nx(), g.h());
}

template <typename T>
T dx2(const Field<Grid3, T>& f, int i, int j, int k) {
    const Grid3& g = f.grid();
    return detail::d1_line<T>([&](int jj) { return f[g.idx(i, jj, k)]; }, j, g.ny(), g.h());
}

template <typename T>
T dx3(const Field<Grid3, T>& f, int i, int j, int k) {
    const Grid3& g = f.grid();
    return detail::d1_line<T>([&](int kk) { return f[g.idx(i, j, kk)]; }, k, g.nz(), g.h());
}

template <typename T>
T dxx1(const Field<Grid2, T>& f, int i, int j) {
    const Grid2& g = f.grid();
    return detail::d2_line<T>([&](int ii) { return f[g.idx(ii, j)]; }, i, g.nx(), g.h());
}

template <typename T>
T dxx2(const Field<Grid2, T>& f, int i, int j) {
    const Grid2& g = f.grid();
    return detail::d2_line<T>([&](int jj) { return f[g.idx(i, jj)]; }, j, g.ny(), g.h());
}

template <typename T>
T laplacian(const Field<Grid2, T>& f, int i, int j) {
    return dxx1(f, i, j) + dxx2(f, i, j);
}

/// dbar = (d/dx1 + i d/dx2)/2 on planar complex fields.
inline complexd dbar(const ComplexField2& f, int i, int j) {
    return 0.5 * (dx1(f, i, j) + complexd(0.0, 1.0) * dx2(f, i, j));
}

/// del = (d/dx1 - i d/dx2)/2.
inline complexd del(const ComplexField2& f, int i, int j) {
    return 0.5 * (dx1(f, i, j) - complexd(0.0, 1.0) * dx2(f, i, j));
}

// Trapezoid quadrature on the uniform grid: weight h^d, halved per boundary
// face the node lies on.

inline double trapezoid_weight(const Grid2& g, int i, int j) {
    double w = g.h() * g.h();
    if (i == 0 || i == g.nx() - 1) w *= 0.5;
    if (j == 0 || j == g.ny() - 1) w *= 0.5;
    return w;
}

inline double trapezoid_weight(const Grid3& g, int i, int j, int k) {
    double w = g.h() * g.h() * g.h();
    if (i == 0 || i == g.nx() - 1) w *= 0.5;
    if (j == 0 || j == g.ny() - 1) w *= 0.5;
    if (k == 0 || k == g.nz() - 1) w *= 0.5;
    return w;
}

template <typename F>
double integrate2(const Grid2& g, F&& node_value) {
    double s = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) s += trapezoid_weight(g, i, j) * node_value(i, j);
    return s;
}

template <typename F>
double integrate3(const Grid3& g, F&& node_value) {
    double s = 0.0;
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
                s += trapezoid_weight(g, i, j, k) * node_value(i, j, k);
    return s;
}

}  // namespace swlab
