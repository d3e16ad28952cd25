#pragma once

// Closed-form tests of H0: delta_x * delta_y = 0.
//
// The minimax region tiles each axis at the quantiles a_k = Phi^{-1}(k alpha / 2)
// and rejects on the diagonal and antidiagonal squares (a_{k-1}, a_k)^2 and
// (a_{k-1}, a_k) x (-a_k, -a_{k-1}). Given Zx in any strip, Zy lands in the two
// matching y-intervals with probability exactly alpha when delta_y = 0.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "compnull/error.hpp"
#include "compnull/regions.hpp"
#include "compnull/statmath.hpp"

namespace compnull {

inline constexpr double kUnitFractionTol = 1e-9;

struct AlphaSpec {
    double alpha = 0.05;
    bool unit_fraction = true;
    /// 1/alpha for unit fractions, floor(1/alpha) otherwise.
    long K = 20;

    static AlphaSpec from(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw InvalidArgument("alpha must lie in (0,1), got " + std::to_string(alpha));
        const double inv = 1.0 / alpha;
        const double nearest = std::round(inv);
        AlphaSpec s;
        s.alpha = alpha;
        s.unit_fraction = std::fabs(inv - nearest) <= kUnitFractionTol;
        s.K = s.unit_fraction ? static_cast<long>(nearest) : static_cast<long>(std::floor(inv));
        return s;
    }
};

/// Region symmetric under negation of either coordinate and under swapping
/// them, generated by nonnegative breakpoints 0 = e_0 < e_1 < ... < e_N.
/// Each interval I = (e_{k-1}, e_k) contributes I x I, I x -I, -I x I, -I x -I.
/// Repeated breakpoints (zero-width intervals) are skipped.
inline RejectionRegion2D build_diagonal_region(double alpha, RegionKind kind, std::span<const double> positive_breaks) {
    std::vector<WeightedRect> cells;
    cells.reserve(4 * positive_breaks.size());
    for (std::size_t k = 1; k < positive_breaks.size(); ++k) {
        const Interval pos{positive_breaks[k - 1], positive_breaks[k]};
        if (pos.empty()) continue;
        const Interval neg{-pos.hi, -pos.lo};
        cells.push_back({neg, neg, 1.0});
        cells.push_back({neg, pos, 1.0});
        cells.push_back({pos, neg, 1.0});
        cells.push_back({pos, pos, 1.0});
    }
    return RejectionRegion2D(alpha, kind, std::move(cells));
}

/// Nonnegative minimax breakpoints a_K = 0 < a_{K+1} < ... < a_{2K} = +inf.
inline std::vector<double> minimax_breakpoints(const AlphaSpec& a) {
    if (!a.unit_fraction)
        throw InvalidArgument("the minimax region needs 1/alpha to be an integer (alpha=" + std::to_string(a.alpha) +
                              "); use build_extended_region for other levels");
    std::vector<double> pts(static_cast<std::size_t>(a.K + 1));
    pts[0] = 0.0;
    // a_{K+j} = -Phi^{-1}((K-j)/(2K)), evaluated in the lower tail.
    for (long j = 1; j <= a.K; ++j)
        pts[static_cast<std::size_t>(j)] =
            -std_normal_quantile(static_cast<double>(a.K - j) / static_cast<double>(2 * a.K));
    return pts;
}

inline RejectionRegion2D build_minimax_region(const AlphaSpec& a) {
    const auto pts = minimax_breakpoints(a);
    return build_diagonal_region(a.alpha, RegionKind::minimax, pts);
}

inline RejectionRegion2D build_minimax_region(double alpha) { return build_minimax_region(AlphaSpec::from(alpha)); }

/// Nonnegative breakpoints of the extended region for any alpha in (0,1):
/// 0, b_0, b_1, ..., b_{K-1}, +inf with b_k = Phi^{-1}{1 - (K - k) alpha / 2}
/// and K = floor(1/alpha). Every interval past b_0 has two-sided mass alpha;
/// the central interval (0, b_0) carries the remaining 1 - K alpha.
inline std::vector<double> extended_breakpoints(const AlphaSpec& a) {
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(a.K + 2));
    pts.push_back(0.0);
    for (long k = 0; k < a.K; ++k) {
        // Upper tail (K - k) alpha / 2, exact ratio for unit fractions.
        const double tail = a.unit_fraction ? static_cast<double>(a.K - k) / static_cast<double>(2 * a.K)
                                            : static_cast<double>(a.K - k) * a.alpha / 2.0;
        pts.push_back(0.0 - std_normal_quantile(tail));
    }
    pts.push_back(kInf);
    return pts;
}

inline RejectionRegion2D build_extended_region(double alpha) {
    const auto a = AlphaSpec::from(alpha);
    const auto pts = extended_breakpoints(a);
    return build_diagonal_region(alpha, RegionKind::extended, pts);
}

/// Type-1 error of the extended region at the origin, where it is smallest.
inline double origin_type1(double alpha) {
    const auto a = AlphaSpec::from(alpha);
    const double k = static_cast<double>(a.K);
    const double rest = a.unit_fraction ? 0.0 : 1.0 - k * alpha;
    return k * alpha * alpha + rest * rest;
}

/// Two-sided critical value Phi^{-1}(1 - alpha/2).
inline double js_threshold(double alpha) { return -std_normal_quantile(alpha / 2.0); }

/// Joint-significance region: reject when |Zx| and |Zy| both reach the threshold.
inline RejectionRegion2D build_js_region(double alpha) {
    (void)AlphaSpec::from(alpha);
    OutsideRule rule;
    rule.type = OutsideRule::Type::joint_significance;
    rule.threshold = js_threshold(alpha);
    return RejectionRegion2D(alpha, RegionKind::joint_significance, {}, rule);
}

struct TestDecision {
    bool reject = false;
    double p_value = 1.0;
};

/// Joint-significance (intersection-union) test. Rejects on strict
/// exceedance; the p-value is the larger of the two Wald p-values.
inline TestDecision js_test(const TestStatisticPair& z, double alpha) {
    const double t = js_threshold(AlphaSpec::from(alpha).alpha);
    return {std::fabs(z.zx) > t && std::fabs(z.zy) > t,
            std::max(two_sided_pvalue(z.zx), two_sided_pvalue(z.zy))};
}

struct SobelResult {
    double z = 0.0;
    double p_value = 1.0;
    /// Both estimates were zero; z is reported as 0 and p as 1.
    bool degenerate = false;
};

/// Delta-method (Sobel) statistic sqrt(n) dx dy / sqrt(dy^2 s_x^2 + dx^2 s_y^2).
inline SobelResult sobel_test(const Provenance& p) {
    const double dx = p.delta_x_hat, dy = p.delta_y_hat;
    const double denom = std::sqrt(dy * dy * p.s_x * p.s_x + dx * dx * p.s_y * p.s_y);
    if (!(denom > 0.0)) return {0.0, 1.0, true};
    const double z = std::sqrt(p.n) * dx * dy / denom;
    return {z, two_sided_pvalue(z), false};
}

inline bool sobel_rejects(const SobelResult& s, double alpha) { return std::fabs(s.z) > js_threshold(alpha); }

} // namespace compnull
