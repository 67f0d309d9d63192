#pragma once

#include <algorithm>
#include <cmath>

#include "swlab/grid.hpp"

namespace swlab {

// All transition bands use the quintic smoothstep, so every profile is C^2
// with derivative bounded by ~2/scale.

inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return std::clamp(t * t * t * (10.0 + t * (-15.0 + 6.0 * t)), 0.0, 1.0);
}

inline double smoothstep5_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double u = t * (1.0 - t);
    return 30.0 * u * u;
}

/// Radial cutoff: 1 on |x| <= R, 0 on |x| >= 2R.
struct ChiCutoff {
    double R;
    double operator()(double r) const { return 1.0 - smoothstep5((std::abs(r) - R) / R); }
    double deriv(double r) const {
        return -smoothstep5_deriv((std::abs(r) - R) / R) / R * (r < 0.0 ? -1.0 : 1.0);
    }
};

/// One-sided cutoff: 0 on (-inf, -d], 1 on [d, inf).
struct LambdaCutoff {
    double d;
    double operator()(double s) const { return smoothstep5((s + d) / (2.0 * d)); }
    double deriv(double s) const { return smoothstep5_deriv((s + d) / (2.0 * d)) / (2.0 * d); }
};

/// Even plateau cutoff: 1 on |s| < R, 0 on |s| > 2R.
struct LambdaPrimeCutoff {
    double R;
    double operator()(double s) const { return 1.0 - smoothstep5((std::abs(s) - R) / R); }
    double deriv(double s) const {
        return -smoothstep5_deriv((std::abs(s) - R) / R) / R * (s < 0.0 ? -1.0 : 1.0);
    }
};

enum class CutoffKind { Radial, OneSided, EvenPlateau };

/// Tagged cutoff profile; `scale` is R for the radial/even kinds and d for the
/// one-sided kind.
struct CutoffProfile {
    CutoffKind kind;
    double scale;

    double operator()(double x) const {
        switch (kind) {
            case CutoffKind::Radial: return ChiCutoff{scale}(x);
            case CutoffKind::OneSided: return LambdaCutoff{scale}(x);
            case CutoffKind::EvenPlateau: return LambdaPrimeCutoff{scale}(x);
        }
        return 0.0;
    }
    double deriv(double x) const {
        switch (kind) {
            case CutoffKind::Radial: return ChiCutoff{scale}.deriv(x);
            case CutoffKind::OneSided: return LambdaCutoff{scale}.deriv(x);
            case CutoffKind::EvenPlateau: return LambdaPrimeCutoff{scale}.deriv(x);
        }
        return 0.0;
    }
};

inline CutoffProfile chi_cutoff(double R) {
    require(R > 0.0, "chi cutoff: scale must be positive");
    return {CutoffKind::Radial, R};
}
inline CutoffProfile lambda_cutoff(double d) {
    require(d > 0.0, "lambda cutoff: scale must be positive");
    return {CutoffKind::OneSided, d};
}
inline CutoffProfile lambda_prime_cutoff(double R) {
    require(R > 0.0, "lambda' cutoff: scale must be positive");
    return {CutoffKind::EvenPlateau, R};
}

/// Which coordinate feeds the weight function on a grid.
enum class WeightAxis { X1, X2, X3, Radial };

/// Polynomial weight: sigma(f) = lambda'_R(f) + (1 - lambda'_R(f)) |f|/R,
/// so sigma = 1 on |f| <= R and |f|/R beyond 2R, always >= 1.
struct WeightSpec {
    double epsilon = 0.0;
    double R = 1.0;
    WeightAxis axis = WeightAxis::X3;

    WeightSpec() = default;
    WeightSpec(double eps, double scale, WeightAxis ax = WeightAxis::X3)
        : epsilon(eps), R(scale), axis(ax) {
        require(eps >= 0.0 && eps < 1.5, "WeightSpec: epsilon must lie in [0, 3/2)");
        require(scale > 0.0, "WeightSpec: R must be positive");
    }

    double sigma(double f) const {
        const double lp = LambdaPrimeCutoff{R}(f);
        return lp + (1.0 - lp) * std::abs(f) / R;
    }

    double sigma_deriv(double f) const {
        const double lp = LambdaPrimeCutoff{R}(f);
        const double dlp = LambdaPrimeCutoff{R}.deriv(f);
        const double sgn = (f < 0.0) ? -1.0 : 1.0;
        return dlp * (1.0 - std::abs(f) / R) + (1.0 - lp) * sgn / R;
    }

    double sigma_pow_eps(double f) const { return std::pow(sigma(f), epsilon); }

    double f_of(const Grid2& g, int i, int j) const {
        switch (axis) {
            case WeightAxis::X1: return g.x1(i);
            case WeightAxis::X2: return g.x2(j);
            case WeightAxis::Radial: return std::abs(g.z(i, j));
            case WeightAxis::X3: break;
        }
        throw std::invalid_argument("WeightSpec: X3 axis is not defined on a planar grid");
    }

    double f_of(const Grid3& g, int i, int j, int k) const {
        switch (axis) {
            case WeightAxis::X1: return g.x1(i);
            case WeightAxis::X2: return g.x2(j);
            case WeightAxis::X3: return g.x3(k);
            case WeightAxis::Radial: return std::abs(g.z(i, j));
        }
        return 0.0;
    }
};

}  // namespace swlab
