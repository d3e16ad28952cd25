#pragma once

// Similar tests of H0: d1 * d2 * d3 = 0 built from Latin squares.
//
// With c_k = Phi^{-1}{(1 + k alpha) / 2} each folded interval (c_{k-1}, c_k)
// has mass alpha under a centered coordinate. The test rejects when
// (|Z1|, |Z2|, |Z3|) lies in (c_{i-1}, c_i) x (c_{j-1}, c_j) x (c_{A_ij - 1}, c_{A_ij});
// the Latin property makes the conditional rejection probability alpha
// whenever any one coordinate is centered.

#include <algorithm>
#include <array>
#include <numeric>
#include <string>
#include <vector>

#include "compnull/closed_form.hpp"
#include "compnull/error.hpp"
#include "compnull/statmath.hpp"

namespace compnull {

class LatinSquare {
public:
    /// `rows[i][j]` holds the symbol in row i, column j (symbols 1..K).
    explicit LatinSquare(std::vector<std::vector<int>> rows) : K_(static_cast<int>(rows.size())) {
        if (K_ < 1) throw InvalidArgument("Latin square must have order at least 1");
        grid_.reserve(static_cast<std::size_t>(K_) * K_);
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != K_) throw InvalidArgument("Latin square must be square");
            grid_.insert(grid_.end(), r.begin(), r.end());
        }
        validate();
    }

    LatinSquare(int K, std::vector<int> row_major) : K_(K), grid_(std::move(row_major)) {
        if (K_ < 1 || grid_.size() != static_cast<std::size_t>(K_) * K_)
            throw InvalidArgument("Latin square: expected K*K symbols");
        validate();
    }

    int order() const noexcept { return K_; }
    /// Symbol at 1-based row i and column j.
    int at(int i, int j) const { return grid_[static_cast<std::size_t>((i - 1) * K_ + (j - 1))]; }
    const std::vector<int>& row_major() const noexcept { return grid_; }

    std::vector<std::vector<int>> rows() const {
        std::vector<std::vector<int>> out(static_cast<std::size_t>(K_));
        for (int i = 0; i < K_; ++i) out[i].assign(grid_.begin() + i * K_, grid_.begin() + (i + 1) * K_);
        return out;
    }

    friend bool operator==(const LatinSquare&, const LatinSquare&) = default;

private:
    void validate() const {
        for (int i = 0; i < K_; ++i) {
            std::vector<char> row_seen(static_cast<std::size_t>(K_), 0), col_seen(static_cast<std::size_t>(K_), 0);
            for (int j = 0; j < K_; ++j) {
                const int r = grid_[static_cast<std::size_t>(i * K_ + j)];
                const int c = grid_[static_cast<std::size_t>(j * K_ + i)];
                if (r < 1 || r > K_ || c < 1 || c > K_)
                    throw InvalidArgument("Latin square: symbols must lie in 1.." + std::to_string(K_));
                if (row_seen[r - 1]++) throw InvalidArgument("Latin square: row " + std::to_string(i + 1) + " repeats a symbol");
                if (col_seen[c - 1]++)
                    throw InvalidArgument("Latin square: column " + std::to_string(i + 1) + " repeats a symbol");
            }
        }
    }

    int K_;
    std::vector<int> grid_;
};

/// A_ij = ((i + j - 2) mod K) + 1.
inline LatinSquare cyclic_latin(int K) {
    if (K < 1) throw InvalidArgument("cyclic_latin: K must be positive");
    std::vector<int> g(static_cast<std::size_t>(K) * K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) g[static_cast<std::size_t>(i * K + j)] = (i + j) % K + 1;
    return LatinSquare(K, std::move(g));
}

/// Permutation of the (row, column, symbol) coordinates of the orthogonal array.
using TriplePerm = std::array<int, 3>;

inline constexpr std::array<TriplePerm, 6> kAllTriplePerms{
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

/// Conjugate whose triples are (t[perm[0]], t[perm[1]], t[perm[2]]) for every
/// triple t = (i, j, A_ij) of `a`.
inline LatinSquare conjugate(const LatinSquare& a, const TriplePerm& perm) {
    std::array<int, 3> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != TriplePerm{0, 1, 2}) throw InvalidArgument("conjugate: not a permutation of (0,1,2)");
    const int K = a.order();
    std::vector<int> g(static_cast<std::size_t>(K) * K, 0);
    for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j) {
            const std::array<int, 3> t{i, j, a.at(i, j)};
            g[static_cast<std::size_t>((t[perm[0]] - 1) * K + (t[perm[1]] - 1))] = t[perm[2]];
        }
    return LatinSquare(K, std::move(g));
}

inline bool is_totally_symmetric(const LatinSquare& a) {
    return std::all_of(kAllTriplePerms.begin(), kAllTriplePerms.end(),
                       [&](const TriplePerm& p) { return conjugate(a, p) == a; });
}

/// Relabelling of rows, columns and symbols; entry v of each map sends v+1 to map[v].
struct Isotopism {
    std::vector<int> rows;
    std::vector<int> cols;
    std::vector<int> symbols;
};

struct NormalizedSquare {
    LatinSquare square;
    Isotopism applied;
};

/// Relabel symbols so that A_KK = K, which puts the box (c_{K-1}, inf)^3 in
/// the region and makes the test consistent.
inline NormalizedSquare normalize_corner(const LatinSquare& a) {
    const int K = a.order();
    Isotopism iso;
    iso.rows.resize(static_cast<std::size_t>(K));
    iso.cols.resize(static_cast<std::size_t>(K));
    iso.symbols.resize(static_cast<std::size_t>(K));
    std::iota(iso.rows.begin(), iso.rows.end(), 1);
    std::iota(iso.cols.begin(), iso.cols.end(), 1);
    std::iota(iso.symbols.begin(), iso.symbols.end(), 1);
    const int corner = a.at(K, K);
    if (corner == K) return {a, iso};
    std::swap(iso.symbols[corner - 1], iso.symbols[K - 1]);
    std::vector<int> g = a.row_major();
    for (int& s : g) s = iso.symbols[s - 1];
    return {LatinSquare(K, std::move(g)), iso};
}

using Box3 = std::array<Interval, 3>;

class RejectionRegion3D {
public:
    RejectionRegion3D(double alpha, std::vector<Box3> boxes) : alpha_(alpha), boxes_(std::move(boxes)) {
        for (const auto& b : boxes_)
            for (const auto& iv : b)
                if (!iv.valid() || iv.lo < 0.0) throw ValidationError("3D region boxes must lie in the nonnegative octant");
    }

    double alpha() const noexcept { return alpha_; }
    const std::vector<Box3>& boxes() const noexcept { return boxes_; }

    /// Whether (|z1|, |z2|, |z3|) lies in an open box.
    bool rejects(double z1, double z2, double z3) const noexcept {
        const double a1 = std::fabs(z1), a2 = std::fabs(z2), a3 = std::fabs(z3);
        return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box3& b) {
            return b[0].contains(a1) && b[1].contains(a2) && b[2].contains(a3);
        });
    }

    /// Pr{reject} for Z ~ N(delta, I_3).
    double analytic_power(double d1, double d2, double d3) const {
        double s = 0.0;
        for (const auto& b : boxes_)
            s += folded_interval_prob(b[0], d1) * folded_interval_prob(b[1], d2) * folded_interval_prob(b[2], d3);
        return std::clamp(s, 0.0, 1.0);
    }

private:
    double alpha_;
    std::vector<Box3> boxes_;
};

/// c_0 = 0 < c_1 < ... < c_K = +inf with two-sided mass alpha per interval.
inline std::vector<double> latin_breakpoints(int K) {
    std::vector<double> c(static_cast<std::size_t>(K + 1));
    for (int k = 0; k <= K; ++k)
        c[k] = 0.0 - std_normal_quantile(static_cast<double>(K - k) / static_cast<double>(2 * K));
    return c;
}

inline RejectionRegion3D build_latin_region(const LatinSquare& a, double alpha) {
    const auto spec = AlphaSpec::from(alpha);
    if (!spec.unit_fraction || spec.K != a.order())
        throw InvalidArgument("build_latin_region: alpha must equal 1/" + std::to_string(a.order()));
    const int K = a.order();
    const auto c = latin_breakpoints(K);
    std::vector<Box3> boxes;
    boxes.reserve(static_cast<std::size_t>(K) * K);
    for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j) {
            const int s = a.at(i, j);
            boxes.push_back({Interval{c[i - 1], c[i]}, Interval{c[j - 1], c[j]}, Interval{c[s - 1], c[s]}});
        }
    return RejectionRegion3D(alpha, std::move(boxes));
}

inline double analytic_power3(const RejectionRegion3D& r, double d1, double d2, double d3) {
    return r.analytic_power(d1, d2, d3);
}

} // namespace compnull
