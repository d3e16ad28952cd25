#pragma once

// Approximately Bayes-risk-optimal test via linear programming.
//
// Inside the box B = [-b, b]^2 the test rejects with probability m_r on each
// cell r of a 2m x 2m grid; outside B it coincides with the joint
// significance test. Under 0-1 loss and a prior that puts no mass on the null,
// the Bayes risk restricted to B is sum_r (1 - m_r) * Pr_Lambda{Z in r}, which
// is linear in m_r. Type-1 error is enforced at the points of a grid on the
// two null axes that extends to +-2b.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "compnull/closed_form.hpp"
#include "compnull/error.hpp"
#include "compnull/regions.hpp"
#include "compnull/simplex.hpp"
#include "compnull/statmath.hpp"

namespace compnull {

/// Constraint coefficients below this are dropped from the sparse rows.
/// With at most a few tens of thousands of cells the discarded mass is < 1e-13.
inline constexpr double kLpDropTol = 1e-18;

struct LpProblem {
    double alpha = 0.05;
    int m = 65;
    /// Half-width of B.
    double b = 0.0;
    double prior_sd = 2.0;
    /// Cell shells in row-major order: index = ix * 2m + iy. All p are 0.
    std::vector<WeightedRect> cells;
    /// Pr_Lambda{Z in r}: the risk lost by accepting on r.
    Eigen::VectorXd objective;
    /// One row per null grid point: sum_r m_r Pr_delta{Z in r} <= rhs.
    Eigen::SparseMatrix<double, Eigen::RowMajor> constraints;
    Eigen::VectorXd rhs;
    std::vector<std::pair<double, double>> null_grid;
    /// Row r of the constraint matrix is the outer product of strip
    /// probabilities strip_x[r] (over ix) and strip_y[r] (over iy).
    Eigen::MatrixXd strip_x;
    Eigen::MatrixXd strip_y;

    int cells_per_side() const noexcept { return 2 * m; }
    std::size_t num_cells() const noexcept { return cells.size(); }
    double js_threshold() const { return compnull::js_threshold(alpha); }
    Box box() const noexcept { return {{-b, b}, {-b, b}}; }

    /// Joint-significance rule used outside B.
    OutsideRule outside_rule() const {
        OutsideRule r;
        r.type = OutsideRule::Type::joint_significance;
        r.threshold = js_threshold();
        r.box = box();
        return r;
    }
};

struct LpSolution {
    std::vector<double> m_r;
    /// Bayes risk restricted to B: sum_r (1 - m_r) * objective_r.
    double objective_value = 0.0;
    LpStatus solver_status = LpStatus::iteration_limit;
    double relative_gap = 0.0;
    long iterations = 0;
    long bound_flips = 0;
};

/// Probability Pr{Z in iv} averaged over delta ~ N(0, sd^2), by Gauss-Legendre
/// quadrature over delta in [-8 sd, 8 sd].
inline double prior_interval_prob(const Interval& iv, double sd, const GaussLegendre& rule, int panels = 1) {
    const double lo = -8.0 * sd, hi = 8.0 * sd;
    const double w = (hi - lo) / panels;
    double s = 0.0;
    for (int k = 0; k < panels; ++k)
        s += rule.integrate(
            [&](double d) { return gaussian_interval_prob(iv, d) * std_normal_pdf(d / sd) / sd; }, lo + k * w,
            lo + (k + 1) * w);
    return s;
}

/// Axis grid of the null constraints: spacing b/m out to +-2b (4m + 1 points).
inline std::vector<double> null_axis_grid(double b, int m) {
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(4 * m + 1));
    for (int i = -2 * m; i <= 2 * m; ++i) g.push_back(b * static_cast<double>(i) / m);
    return g;
}

inline LpProblem build_lp(double alpha, int m, double prior_sd = 2.0, int grid_points = 64) {
    (void)AlphaSpec::from(alpha);
    if (m < 4) throw InvalidArgument("build_lp: m must be at least 4");
    if (!(prior_sd > 0.0)) throw InvalidArgument("build_lp: prior_sd must be positive");
    if (grid_points < 2) throw InvalidArgument("build_lp: grid_points must be at least 2");

    LpProblem p;
    p.alpha = alpha;
    p.m = m;
    p.prior_sd = prior_sd;
    p.b = 2.0 * compnull::js_threshold(alpha);

    const int side = 2 * m;
    std::vector<Interval> strips(static_cast<std::size_t>(side));
    for (int i = 0; i < side; ++i)
        strips[i] = {p.b * static_cast<double>(i - m) / m, p.b * static_cast<double>(i + 1 - m) / m};

    p.cells.reserve(static_cast<std::size_t>(side) * side);
    for (int ix = 0; ix < side; ++ix)
        for (int iy = 0; iy < side; ++iy) p.cells.push_back({strips[ix], strips[iy], 0.0});

    // The prior is a product of two N(0, sd^2) coordinates, so each cell's
    // prior probability factors into two one-dimensional integrals.
    const GaussLegendre rule(grid_points);
    std::vector<double> strip_prior(static_cast<std::size_t>(side));
    for (int i = 0; i < side; ++i) strip_prior[i] = prior_interval_prob(strips[i], prior_sd, rule);
    p.objective.resize(static_cast<Eigen::Index>(side) * side);
    for (int ix = 0; ix < side; ++ix)
        for (int iy = 0; iy < side; ++iy) p.objective[ix * side + iy] = strip_prior[ix] * strip_prior[iy];

    const auto axis = null_axis_grid(p.b, m);
    for (double t : axis) p.null_grid.emplace_back(t, 0.0);
    for (double t : axis)
        if (t != 0.0) p.null_grid.emplace_back(0.0, t);

    const RejectionRegion2D outside(alpha, RegionKind::bayes, {}, p.outside_rule());
    const auto rows = static_cast<Eigen::Index>(p.null_grid.size());
    p.rhs.resize(rows);
    p.strip_x.resize(rows, side);
    p.strip_y.resize(rows, side);
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> px(static_cast<std::size_t>(side)), py(static_cast<std::size_t>(side));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto [dx, dy] = p.null_grid[static_cast<std::size_t>(r)];
        const double slack = alpha - outside.outside_mass(dx, dy);
        if (slack < 0.0)
            throw InvalidArgument("build_lp: infeasible at null point (" + std::to_string(dx) + ", " +
                                  std::to_string(dy) + "): the joint-significance mass outside B already exceeds alpha");
        p.rhs[r] = slack;
        for (int i = 0; i < side; ++i) {
            px[i] = gaussian_interval_prob(strips[i], dx);
            py[i] = gaussian_interval_prob(strips[i], dy);
            p.strip_x(r, i) = px[i];
            p.strip_y(r, i) = py[i];
        }
        for (int ix = 0; ix < side; ++ix)
            for (int iy = 0; iy < side; ++iy) {
                const double v = px[ix] * py[iy];
                if (v > kLpDropTol) trips.emplace_back(static_cast<int>(r), ix * side + iy, v);
            }
    }
    p.constraints.resize(rows, static_cast<Eigen::Index>(side) * side);
    p.constraints.setFromTriplets(trips.begin(), trips.end());
    p.constraints.makeCompressed();
    return p;
}

inline double lp_objective(const LpProblem& p, const std::vector<double>& m_r) {
    double s = 0.0;
    for (std::size_t r = 0; r < m_r.size(); ++r) s += (1.0 - m_r[r]) * p.objective[static_cast<Eigen::Index>(r)];
    return s;
}

/// out = A'w for the constraint matrix of `p`. Every null point lies on an
/// axis, so either its x or its y strip factor is the one at delta = 0 and
/// A'w collapses to two rank-one terms.
inline void lp_transpose_product(const LpProblem& p, const Eigen::VectorXd& w, Eigen::VectorXd& out) {
    const Eigen::Index side = p.cells_per_side();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(side), v = Eigen::VectorXd::Zero(side);
    Eigen::VectorXd q0;
    for (Eigen::Index r = 0; r < w.size(); ++r) {
        if (p.null_grid[static_cast<std::size_t>(r)].second == 0.0) {
            u.noalias() += w[r] * p.strip_x.row(r).transpose();
            if (q0.size() == 0) q0 = p.strip_y.row(r).transpose();
        } else {
            v.noalias() += w[r] * p.strip_y.row(r).transpose();
        }
    }
    out.resize(side * side);
    for (Eigen::Index ix = 0; ix < side; ++ix)
        for (Eigen::Index iy = 0; iy < side; ++iy) out[ix * side + iy] = u[ix] * q0[iy] + q0[ix] * v[iy];
}

inline LpSolution solve_lp(const LpProblem& p, SimplexOptions opt = {}) {
    if (!opt.transpose_product && p.strip_x.rows() == p.constraints.rows())
        opt.transpose_product = [&p](const Eigen::VectorXd& w, Eigen::VectorXd& out) { lp_transpose_product(p, w, out); };
    const Eigen::SparseMatrix<double> A = p.constraints;
    const Eigen::VectorXd cost = -p.objective;
    const Eigen::VectorXd upper = Eigen::VectorXd::Ones(p.objective.size());
    const auto res = solve_bounded_lp(A, p.rhs, cost, upper, opt);

    LpSolution s;
    s.solver_status = res.status;
    s.iterations = res.iterations;
    s.bound_flips = res.bound_flips;
    s.relative_gap = res.relative_gap;
    s.m_r.assign(res.x.data(), res.x.data() + res.x.size());
    s.objective_value = lp_objective(p, s.m_r);
    return s;
}

/// Rejection region from a solved program. Cells with m_r below 1e-9 are
/// dropped; with `derandomize` every fractional cell is dropped as well.
inline RejectionRegion2D assemble_bayes_region(const LpProblem& p, const LpSolution& s, bool derandomize = false) {
    if (s.solver_status != LpStatus::optimal)
        throw InvalidArgument("assemble_bayes_region: solution status is " + std::string(to_string(s.solver_status)));
    if (s.m_r.size() != p.cells.size()) throw InvalidArgument("assemble_bayes_region: solution size mismatch");
    constexpr double snap = 1e-9;
    std::vector<WeightedRect> cells;
    for (std::size_t r = 0; r < p.cells.size(); ++r) {
        double v = std::clamp(s.m_r[r], 0.0, 1.0);
        if (v < snap) continue;
        if (v > 1.0 - snap) v = 1.0;
        if (derandomize && v < 1.0) continue;
        cells.push_back({p.cells[r].x, p.cells[r].y, v});
    }
    return RejectionRegion2D(p.alpha, RegionKind::bayes, std::move(cells), p.outside_rule());
}

} // namespace compnull
