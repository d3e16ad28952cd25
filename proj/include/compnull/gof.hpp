#pragma once

// Kolmogorov-Smirnov statistics and the DKW envelope, used to check
// simulated distributions against references.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "compnull/error.hpp"

namespace compnull {

/// Pr{K > lambda} for the Kolmogorov distribution.
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample KS test of `sample` against a continuous cdf.
inline KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw InvalidArgument("ks_one_sample: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double rn = std::sqrt(n);
    return {d, kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)};
}

/// Two-sample KS test.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::fabs(i / na - j / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d)};
}

/// One-sided DKW half-width: Pr{sup (F_n - F) > eps} <= exp(-2 n eps^2) = 1 - confidence.
inline double dkw_epsilon(std::size_t n, double confidence) {
    return std::sqrt(std::log(1.0 / (1.0 - confidence)) / (2.0 * static_cast<double>(n)));
}

} // namespace compnull
