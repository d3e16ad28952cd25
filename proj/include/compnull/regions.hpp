#pragma once

// Rejection regions in the (Zx, Zy) plane: finite unions of open
// axis-aligned rectangles carrying a rejection probability, optionally
// completed by a joint-significance rule outside a bounding box.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "compnull/error.hpp"
#include "compnull/statmath.hpp"

namespace compnull {

struct WeightedRect {
    Interval x;
    Interval y;
    double p = 1.0;

    friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

enum class RegionKind { minimax, extended, joint_significance, bayes, custom };

inline std::string_view to_string(RegionKind k) {
    switch (k) {
    case RegionKind::minimax: return "minimax";
    case RegionKind::extended: return "extended";
    case RegionKind::joint_significance: return "joint_significance";
    case RegionKind::bayes: return "bayes";
    case RegionKind::custom: return "custom";
    }
    return "custom";
}

inline std::optional<RegionKind> region_kind_from_string(std::string_view s) {
    for (auto k : {RegionKind::minimax, RegionKind::extended, RegionKind::joint_significance,
                   RegionKind::bayes, RegionKind::custom})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// Closed box [x.lo, x.hi] x [y.lo, y.hi].
struct Box {
    Interval x;
    Interval y;

    bool contains_closed(double zx, double zy) const noexcept {
        return x.lo <= zx && zx <= x.hi && y.lo <= zy && zy <= y.hi;
    }
    friend bool operator==(const Box&, const Box&) = default;
};

/// Rule applied to points that are not inside `box`: reject when both
/// |zx| and |zy| reach `threshold`. With no box the rule applies everywhere.
struct OutsideRule {
    enum class Type { none, joint_significance };
    Type type = Type::none;
    double threshold = 0.0;
    std::optional<Box> box;

    friend bool operator==(const OutsideRule&, const OutsideRule&) = default;
};

/// Raw estimates behind a statistic pair. s_x, s_y are asymptotic standard
/// deviations, so the standard error of delta_x_hat is s_x / sqrt(n).
struct Provenance {
    double delta_x_hat = 0.0;
    double delta_y_hat = 0.0;
    double s_x = 1.0;
    double s_y = 1.0;
    double n = 1.0;
};

/// Standardized statistic pair (Zx, Zy).
struct TestStatisticPair {
    double zx = 0.0;
    double zy = 0.0;
    std::optional<Provenance> provenance;
};

class RejectionRegion2D {
public:
    RejectionRegion2D(double alpha, RegionKind kind, std::vector<WeightedRect> cells,
                      OutsideRule outside = {})
        : alpha_(alpha), kind_(kind), cells_(std::move(cells)), outside_(std::move(outside)) {
        validate_and_index();
    }

    double alpha() const noexcept { return alpha_; }
    RegionKind kind() const noexcept { return kind_; }
    std::span<const WeightedRect> cells() const noexcept { return cells_; }
    const OutsideRule& outside_rule() const noexcept { return outside_; }

    /// Bounding box of the cells; empty intervals when there are no cells.
    Box bounding_box() const noexcept { return bbox_; }

    /// Index of the cell whose interior contains z, if any.
    std::optional<std::size_t> find_cell(double zx, double zy) const noexcept {
        if (slab_edges_.size() < 2) return std::nullopt;
        auto it = std::upper_bound(slab_edges_.begin(), slab_edges_.end(), zx);
        if (it == slab_edges_.begin() || it == slab_edges_.end()) return std::nullopt;
        std::size_t s = static_cast<std::size_t>(it - slab_edges_.begin()) - 1;
        if (auto c = find_in_slab(s, zx, zy)) return c;
        // zx sits exactly on a slab edge; a cell straddling the edge may still hold it.
        if (slab_edges_[s] == zx && s > 0) return find_in_slab(s - 1, zx, zy);
        return std::nullopt;
    }

    /// Rejection probability M(z) of the (possibly randomized) test at z.
    double rejection_prob_at_point(const TestStatisticPair& z) const noexcept {
        return rejection_prob_at_point(z.zx, z.zy);
    }

    double rejection_prob_at_point(double zx, double zy) const noexcept {
        if (auto c = find_cell(zx, zy)) return cells_[*c].p;
        if (outside_fires(zx, zy)) return 1.0;
        return 0.0;
    }

    /// Realize the randomized test with an externally drawn uniform u in [0,1).
    bool rejects(double zx, double zy, double u) const noexcept {
        return u < rejection_prob_at_point(zx, zy);
    }

    /// Pr{reject} for (Zx, Zy) ~ N(delta, I).
    double analytic_power(double delta_x, double delta_y) const noexcept {
        double power = 0.0;
        for (const auto& c : cells_) {
            if (c.p == 0.0) continue;
            power += c.p * gaussian_interval_prob(c.x, delta_x) * gaussian_interval_prob(c.y, delta_y);
        }
        power += outside_mass(delta_x, delta_y);
        return std::clamp(power, 0.0, 1.0);
    }

    /// Mass of the outside-rule region under N(delta, I).
    double outside_mass(double delta_x, double delta_y) const noexcept {
        if (outside_.type == OutsideRule::Type::none) return 0.0;
        const double t = outside_.threshold;
        const auto tails = [t](double mu) {
            return gaussian_interval_prob({-kInf, -t}, mu) + gaussian_interval_prob({t, kInf}, mu);
        };
        double mass = tails(delta_x) * tails(delta_y);
        if (outside_.box) {
            const auto clipped = [t](const Interval& b, double mu) {
                double p = 0.0;
                if (b.lo < -t) p += gaussian_interval_prob({b.lo, std::min(b.hi, -t)}, mu);
                if (b.hi > t) p += gaussian_interval_prob({std::max(b.lo, t), b.hi}, mu);
                return p;
            };
            mass -= clipped(outside_.box->x, delta_x) * clipped(outside_.box->y, delta_y);
        }
        return std::max(mass, 0.0);
    }

private:
    bool outside_fires(double zx, double zy) const noexcept {
        if (outside_.type != OutsideRule::Type::joint_significance) return false;
        if (outside_.box && outside_.box->contains_closed(zx, zy)) return false;
        return std::fabs(zx) > outside_.threshold && std::fabs(zy) > outside_.threshold;
    }

    std::optional<std::size_t> find_in_slab(std::size_t s, double zx, double zy) const noexcept {
        const auto first = slab_cells_.begin() + static_cast<std::ptrdiff_t>(slab_start_[s]);
        const auto last = slab_cells_.begin() + static_cast<std::ptrdiff_t>(slab_start_[s + 1]);
        // Cells in a slab are sorted by y.lo and disjoint in y.
        auto it = std::partition_point(first, last, [&](std::uint32_t id) { return cells_[id].y.lo < zy; });
        if (it == first) return std::nullopt;
        const auto& c = cells_[*(it - 1)];
        if (c.y.contains(zy) && c.x.contains(zx)) return *(it - 1);
        return std::nullopt;
    }

    void validate_and_index() {
        if (!(alpha_ > 0.0 && alpha_ < 1.0))
            throw ValidationError("region: alpha must lie in (0,1)");
        if (kind_ == RegionKind::joint_significance &&
            (!cells_.empty() || outside_.type != OutsideRule::Type::joint_significance))
            throw ValidationError("region: joint_significance regions carry no cells and a joint_significance outside rule");
        if (outside_.type == OutsideRule::Type::joint_significance && !(outside_.threshold >= 0.0))
            throw ValidationError("region: outside_rule.threshold must be nonnegative");
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const auto& c = cells_[i];
            if (!c.x.valid() || !c.y.valid())
                throw ValidationError("region: cells[" + std::to_string(i) + "] has an invalid interval");
            if (!(c.p >= 0.0 && c.p <= 1.0))
                throw ValidationError("region: cells[" + std::to_string(i) + "].p must lie in [0,1]");
        }
        std::erase_if(cells_, [](const WeightedRect& c) { return c.x.empty() || c.y.empty(); });

        bbox_ = {{kInf, -kInf}, {kInf, -kInf}};
        for (const auto& c : cells_) {
            bbox_.x.lo = std::min(bbox_.x.lo, c.x.lo);
            bbox_.x.hi = std::max(bbox_.x.hi, c.x.hi);
            bbox_.y.lo = std::min(bbox_.y.lo, c.y.lo);
            bbox_.y.hi = std::max(bbox_.y.hi, c.y.hi);
        }
        if (cells_.empty()) return;

        slab_edges_.reserve(2 * cells_.size());
        for (const auto& c : cells_) {
            slab_edges_.push_back(c.x.lo);
            slab_edges_.push_back(c.x.hi);
        }
        std::sort(slab_edges_.begin(), slab_edges_.end());
        slab_edges_.erase(std::unique(slab_edges_.begin(), slab_edges_.end()), slab_edges_.end());

        const std::size_t nslabs = slab_edges_.size() - 1;
        const auto edge_index = [&](double v) {
            return static_cast<std::size_t>(std::lower_bound(slab_edges_.begin(), slab_edges_.end(), v) -
                                            slab_edges_.begin());
        };
        std::vector<std::uint32_t> counts(nslabs + 1, 0);
        for (const auto& c : cells_)
            for (std::size_t s = edge_index(c.x.lo); s < edge_index(c.x.hi); ++s) ++counts[s + 1];
        std::partial_sum(counts.begin(), counts.end(), counts.begin());
        slab_start_.assign(counts.begin(), counts.end());
        slab_cells_.resize(slab_start_.back());
        std::vector<std::uint32_t> fill(slab_start_.begin(), slab_start_.end() - 1);
        for (std::uint32_t id = 0; id < cells_.size(); ++id)
            for (std::size_t s = edge_index(cells_[id].x.lo); s < edge_index(cells_[id].x.hi); ++s)
                slab_cells_[fill[s]++] = id;

        for (std::size_t s = 0; s < nslabs; ++s) {
            auto first = slab_cells_.begin() + static_cast<std::ptrdiff_t>(slab_start_[s]);
            auto last = slab_cells_.begin() + static_cast<std::ptrdiff_t>(slab_start_[s + 1]);
            std::sort(first, last, [&](std::uint32_t a, std::uint32_t b) { return cells_[a].y.lo < cells_[b].y.lo; });
            for (auto it = first; it + 1 < last; ++it)
                if (cells_[*it].y.hi > cells_[*(it + 1)].y.lo)
                    throw ValidationError("region: cells " + std::to_string(*it) + " and " +
                                          std::to_string(*(it + 1)) + " overlap");
        }
    }

    double alpha_;
    RegionKind kind_;
    std::vector<WeightedRect> cells_;
    OutsideRule outside_;
    Box bbox_;

    std::vector<double> slab_edges_;
    std::vector<std::uint32_t> slab_start_;
    std::vector<std::uint32_t> slab_cells_;
};

/// Free-function spellings of the region queries.
inline double rejection_prob_at_point(const RejectionRegion2D& r, const TestStatisticPair& z) {
    return r.rejection_prob_at_point(z);
}

inline double analytic_power(const RejectionRegion2D& r, double delta_x, double delta_y) {
    return r.analytic_power(delta_x, delta_y);
}

} // namespace compnull
