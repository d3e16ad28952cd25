#pragma once

// Standard-normal primitives and exact interval probabilities for
// independent Gaussian coordinates. Everything that computes a power
// function analytically bottoms out here.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "compnull/error.hpp"

namespace compnull {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open interval (lo, hi) on the extended real line.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    constexpr bool valid() const noexcept { return !(lo > hi) && lo == lo && hi == hi; }
    constexpr bool contains(double x) const noexcept { return lo < x && x < hi; }
    constexpr bool empty() const noexcept { return !(lo < hi); }

    friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

/// Phi(x). Uses erfc on the tail side so both tails keep relative accuracy.
inline double std_normal_cdf(double x) noexcept {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// 1 - Phi(x) without cancellation.
inline double std_normal_sf(double x) noexcept { return std_normal_cdf(-x); }

inline double std_normal_pdf(double x) noexcept {
    constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

namespace detail {

// Wichura's AS241 (PPND16) for the lower half, p in (0, 0.5].
inline double ppnd16_lower(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = std::sqrt(-std::log(p));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return -x;
}

} // namespace detail

/// Phi^{-1}(p). Rational approximation plus one Newton step against the cdf.
inline double std_normal_quantile(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw InvalidArgument("std_normal_quantile: p must lie in [0,1], got " + std::to_string(p));
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    if (p == 0.5) return 0.0;
    // Work in the lower tail; 1 - p is exact for p >= 0.5.
    const bool upper = p > 0.5;
    const double lower_p = upper ? 1.0 - p : p;
    double x = detail::ppnd16_lower(lower_p);
    const double dens = std_normal_pdf(x);
    if (dens > 0.0) x -= (std_normal_cdf(x) - lower_p) / dens;
    return upper ? -x : x;
}

/// Pr{Z in (lo, hi)} for Z ~ N(mu, 1).
inline double gaussian_interval_prob(const Interval& iv, double mu) noexcept {
    if (iv.empty()) return 0.0;
    const double lo = iv.lo - mu;
    const double hi = iv.hi - mu;
    double p;
    if (lo >= 0.0)
        p = std_normal_sf(lo) - std_normal_sf(hi);
    else
        p = std_normal_cdf(hi) - std_normal_cdf(lo);
    return std::clamp(p, 0.0, 1.0);
}

/// Pr{|Z| in (lo, hi)} for Z ~ N(mu, 1), 0 <= lo <= hi.
inline double folded_interval_prob(const Interval& iv, double mu) {
    if (!(iv.lo >= 0.0))
        throw InvalidArgument("folded_interval_prob: interval must lie in [0, inf)");
    const double p = gaussian_interval_prob(iv, mu) + gaussian_interval_prob({-iv.hi, -iv.lo}, mu);
    return std::clamp(p, 0.0, 1.0);
}

/// Two-sided normal p-value 2(1 - Phi(|z|)).
inline double two_sided_pvalue(double z) noexcept {
    return std::min(1.0, 2.0 * std_normal_sf(std::fabs(z)));
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) : nodes(n), weights(n) {
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-16) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    /// Integrate f over [a, b].
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
        return s * half;
    }
};

} // namespace compnull
