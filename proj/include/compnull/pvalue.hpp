#pragma once

// Generalized p-values and multiplicity adjustments.
//
// The extended-minimax p-value is the Lebesgue measure of the levels alpha at
// which the level-alpha extended region does not contain z,
//     p = int_0^1 1{z not in R_alpha} d alpha,
// approximated by a midpoint sum over `resolution` levels.

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "compnull/closed_form.hpp"
#include "compnull/error.hpp"
#include "compnull/regions.hpp"

namespace compnull {

enum class PvalueMethod { extended_minimax, js, sobel };

struct PvalueResult {
    double p = 1.0;
    int resolution = 0;
    PvalueMethod method = PvalueMethod::extended_minimax;
};

inline constexpr int kDefaultPvalueResolution = 10000;

/// Extended regions at alpha_j = (j - 1/2) / resolution, built once and
/// shared read-only.
class ExtendedRegionFamily {
public:
    explicit ExtendedRegionFamily(int resolution) : resolution_(resolution) {
        if (resolution < 1) throw InvalidArgument("p-value resolution must be positive");
        regions_.reserve(static_cast<std::size_t>(resolution));
        for (int j = 1; j <= resolution; ++j) regions_.push_back(build_extended_region(level(j)));
    }

    int resolution() const noexcept { return resolution_; }
    double level(int j) const noexcept { return (j - 0.5) / resolution_; }
    const RejectionRegion2D& region(int j) const { return regions_.at(static_cast<std::size_t>(j - 1)); }

    PvalueResult pvalue(double zx, double zy) const noexcept {
        long accept = 0;
        for (const auto& r : regions_)
            if (!r.find_cell(zx, zy)) ++accept;
        return {static_cast<double>(accept) / resolution_, resolution_, PvalueMethod::extended_minimax};
    }

private:
    int resolution_;
    std::vector<RejectionRegion2D> regions_;
};

/// Process-wide memo of region families keyed by resolution.
inline std::shared_ptr<const ExtendedRegionFamily> extended_family(int resolution) {
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const ExtendedRegionFamily>> memo;
    std::lock_guard lock(mu);
    auto& slot = memo[resolution];
    if (!slot) slot = std::make_shared<const ExtendedRegionFamily>(resolution);
    return slot;
}

inline PvalueResult minimax_pvalue(const TestStatisticPair& z, int resolution = kDefaultPvalueResolution) {
    if (resolution < 100) throw InvalidArgument("minimax_pvalue: resolution must be at least 100");
    return extended_family(resolution)->pvalue(z.zx, z.zy);
}

/// Joint-significance p-value max(p_x, p_y).
inline PvalueResult js_pvalue(const TestStatisticPair& z) {
    return {std::max(two_sided_pvalue(z.zx), two_sided_pvalue(z.zy)), 0, PvalueMethod::js};
}

/// The joint-significance p-value integrated on the same midpoint grid as
/// minimax_pvalue: the fraction of levels alpha_j at which JS does not reject.
inline PvalueResult js_pvalue_on_grid(const TestStatisticPair& z, int resolution) {
    const double p = js_pvalue(z).p;
    // JS rejects at level a iff p < a, so it accepts for alpha_j <= p.
    const double count = std::clamp(std::floor(p * resolution + 0.5), 0.0, static_cast<double>(resolution));
    return {count / resolution, resolution, PvalueMethod::js};
}

namespace detail {

inline void check_pvalues(std::span<const double> p, double level, const char* what) {
    if (p.empty()) throw InvalidArgument(std::string(what) + ": no p-values given");
    if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument(std::string(what) + ": level must lie in [0,1]");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw InvalidArgument(std::string(what) + ": p-value " + std::to_string(i) + " is outside [0,1]");
}

} // namespace detail

/// Reject H_i when p_i <= alpha / n.
inline std::vector<bool> bonferroni(std::span<const double> pvals, double alpha_fwer) {
    detail::check_pvalues(pvals, alpha_fwer, "bonferroni");
    const double cut = alpha_fwer / static_cast<double>(pvals.size());
    std::vector<bool> out(pvals.size());
    for (std::size_t i = 0; i < pvals.size(); ++i) out[i] = pvals[i] <= cut;
    return out;
}

/// Benjamini-Hochberg step-up at FDR level q.
inline std::vector<bool> benjamini_hochberg(std::span<const double> pvals, double q) {
    detail::check_pvalues(pvals, q, "benjamini_hochberg");
    const std::size_t n = pvals.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    double cutoff = -1.0;
    for (std::size_t k = n; k >= 1; --k) {
        if (pvals[order[k - 1]] <= static_cast<double>(k) * q / static_cast<double>(n)) {
            cutoff = pvals[order[k - 1]];
            break;
        }
    }
    std::vector<bool> out(n, false);
    if (cutoff < 0.0) return out;
    for (std::size_t i = 0; i < n; ++i) out[i] = pvals[i] <= cutoff;
    return out;
}

} // namespace compnull
