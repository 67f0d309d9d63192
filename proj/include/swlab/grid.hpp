#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swlab {

using complexd = std::complex<double>;

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

/// Uniform planar grid centered on `center`, node (i,j) at
/// center + h*(i - (nx-1)/2, j - (ny-1)/2).  Row-major node order: i fastest.
class Grid2 {
public:
    Grid2(int nx, int ny, double h, complexd center = {0.0, 0.0})
        : nx_(nx), ny_(ny), h_(h), center_(center) {
        require(nx >= 16 && ny >= 16, "Grid2: node counts must be >= 16");
        require(std::isfinite(h) && h > 0.0, "Grid2: spacing must be finite and positive");
        require(std::isfinite(center.real()) && std::isfinite(center.imag()),
                "Grid2: center must be finite");
        covered_radius_ = h_ * static_cast<double>(std::min(nx_, ny_)) / 2.0;
        require(covered_radius_ >= 4.0, "Grid2: covered radius must be >= 4");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double h() const { return h_; }
    complexd center() const { return center_; }
    double covered_radius() const { return covered_radius_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

    double x1(int i) const { return center_.real() + h_ * (i - (nx_ - 1) / 2.0); }
    double x2(int j) const { return center_.imag() + h_ * (j - (ny_ - 1) / 2.0); }
    complexd z(int i, int j) const { return {x1(i), x2(j)}; }

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
    bool interior(int i, int j) const { return i > 0 && i < nx_ - 1 && j > 0 && j < ny_ - 1; }

    bool operator==(const Grid2& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && h_ == o.h_ && center_ == o.center_;
    }

private:
    int nx_, ny_;
    double h_;
    complexd center_;
    double covered_radius_;
};

/// Uniform spatial grid; the planar part behaves like Grid2, the x3 axis
/// spans [-L3, L3] with L3 = h*nz/2.  Node order: i fastest, then j, then k.
class Grid3 {
public:
    Grid3(int nx, int ny, int nz, double h, complexd center = {0.0, 0.0})
        : nx_(nx), ny_(ny), nz_(nz), h_(h), center_(center) {
        require(nx >= 16 && ny >= 16, "Grid3: planar node counts must be >= 16");
        require(nz >= 8, "Grid3: nz must be >= 8");
        require(std::isfinite(h) && h > 0.0, "Grid3: spacing must be finite and positive");
        covered_radius_ = h_ * static_cast<double>(std::min(nx_, ny_)) / 2.0;
        require(covered_radius_ >= 4.0, "Grid3: planar covered radius must be >= 4");
        l3_ = h_ * nz_ / 2.0;
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    double h() const { return h_; }
    complexd center() const { return center_; }
    double covered_radius() const { return covered_radius_; }
    double l3() const { return l3_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_ * nz_; }

    double x1(int i) const { return center_.real() + h_ * (i - (nx_ - 1) / 2.0); }
    double x2(int j) const { return center_.imag() + h_ * (j - (ny_ - 1) / 2.0); }
    double x3(int k) const { return h_ * (k - (nz_ - 1) / 2.0); }
    complexd z(int i, int j) const { return {x1(i), x2(j)}; }

    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
    }
    bool interior(int i, int j, int k) const {
        return i > 0 && i < nx_ - 1 && j > 0 && j < ny_ - 1 && k > 0 && k < nz_ - 1;
    }

    bool operator==(const Grid3& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_ && h_ == o.h_ && center_ == o.center_;
    }

private:
    int nx_, ny_, nz_;
    double h_;
    complexd center_;
    double covered_radius_;
    double l3_;
};

template <typename T>
struct FieldTraits;

template <>
struct FieldTraits<double> {
    static constexpr int components = 1;
    static bool finite(double v) { return std::isfinite(v); }
};
template <>
struct FieldTraits<complexd> {
    static constexpr int components = 2;
    static bool finite(const complexd& v) {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    }
};

/// Per-node values on an owning grid.  T is double or complexd; vector-valued
/// data (1-forms) is held as one Field per component.
template <typename GridT, typename T>
class Field {
public:
    explicit Field(const GridT& grid, T fill = T{})
        : grid_(grid), values_(grid.size(), fill) {}

    const GridT& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    T& operator[](std::size_t n) { return values_[n]; }
    const T& operator[](std::size_t n) const { return values_[n]; }

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    bool all_finite() const {
        for (const T& v : values_)
            if (!FieldTraits<T>::finite(v)) return false;
        return true;
    }

private:
    GridT grid_;
    std::vector<T> values_;
};

using ScalarField2 = Field<Grid2, double>;
using ComplexField2 = Field<Grid2, complexd>;
using ScalarField3 = Field<Grid3, double>;
using ComplexField3 = Field<Grid3, complexd>;

/// Planar 1-form: two real component fields.
struct OneForm2 {
    ScalarField2 c1, c2;
    explicit OneForm2(const Grid2& g) : c1(g), c2(g) {}
};

/// Spatial 1-form: three real component fields.
struct OneForm3 {
    ScalarField3 c1, c2, c3;
    explicit OneForm3(const Grid3& g) : c1(g), c2(g), c3(g) {}
};

}  // namespace swlab
