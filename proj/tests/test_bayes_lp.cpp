#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "compnull/bayes_lp.hpp"
#include "compnull/region_io.hpp"
#include "oracles.hpp"

using namespace compnull;

namespace {

const LpProblem& small_problem() {
    static const LpProblem p = build_lp(0.05, 16);
    return p;
}

const LpSolution& small_solution() {
    static const LpSolution s = solve_lp(small_problem());
    return s;
}

// m_r = 1 on cells whose closure lies in the joint-significance region.
std::vector<double> js_candidate(const LpProblem& p) {
    const double t = p.js_threshold();
    std::vector<double> m(p.num_cells(), 0.0);
    const auto outside = [t](const Interval& iv) { return iv.lo >= t || iv.hi <= -t; };
    for (std::size_t r = 0; r < p.num_cells(); ++r)
        if (outside(p.cells[r].x) && outside(p.cells[r].y)) m[r] = 1.0;
    return m;
}

} // namespace

TEST(BayesLp, Dimensions) {
    const auto p = build_lp(0.05, 65);
    EXPECT_EQ(p.num_cells(), 16900u);
    EXPECT_EQ(p.constraints.cols(), 16900);
    EXPECT_EQ(p.constraints.rows(), 8 * 65 + 1);
    EXPECT_NEAR(p.b, 2.0 * oracle::quantile(0.975), 1e-12);
}

TEST(BayesLp, CellProbabilitiesPartitionTheBox) {
    const auto& p = small_problem();
    for (Eigen::Index r : {Eigen::Index{0}, Eigen::Index{5}, p.constraints.rows() - 1}) {
        const auto [dx, dy] = p.null_grid[static_cast<std::size_t>(r)];
        const double box = (oracle::cdf(p.b - dx) - oracle::cdf(-p.b - dx)) * (oracle::cdf(p.b - dy) - oracle::cdf(-p.b - dy));
        EXPECT_NEAR(p.constraints.row(r).sum(), box, 1e-10) << dx << " " << dy;
    }
}

TEST(BayesLp, ObjectiveMatchesMarginalOfPrior) {
    // Z = delta + e with delta ~ N(0, sd^2): each coordinate is N(0, 1 + sd^2).
    const auto& p = small_problem();
    const double s = std::sqrt(1.0 + p.prior_sd * p.prior_sd);
    for (std::size_t r = 0; r < p.num_cells(); r += 37) {
        const auto& c = p.cells[r];
        const double ref = (oracle::cdf(c.x.hi / s) - oracle::cdf(c.x.lo / s)) * (oracle::cdf(c.y.hi / s) - oracle::cdf(c.y.lo / s));
        EXPECT_NEAR(p.objective[static_cast<Eigen::Index>(r)], ref, 1e-10 * ref + 1e-16);
    }
}

TEST(BayesLp, ObjectiveHasDihedralSymmetry) {
    const auto& p = small_problem();
    const int side = p.cells_per_side();
    for (int ix = 0; ix < side; ++ix)
        for (int iy = 0; iy < side; ++iy) {
            const double v = p.objective[ix * side + iy];
            EXPECT_NEAR(v, p.objective[iy * side + ix], 1e-15);
            EXPECT_NEAR(v, p.objective[(side - 1 - ix) * side + iy], 1e-15);
            EXPECT_NEAR(v, p.objective[ix * side + (side - 1 - iy)], 1e-15);
        }
}

TEST(BayesLp, TransposeProductMatchesSparseRows) {
    const auto& p = small_problem();
    Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(p.rhs.size(), -1.0, 2.0);
    Eigen::VectorXd fast;
    lp_transpose_product(p, w, fast);
    const Eigen::VectorXd ref = p.constraints.transpose() * w;
    EXPECT_LT((fast - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BayesLp, SolutionProperties) {
    const auto& p = small_problem();
    const auto& s = small_solution();
    ASSERT_EQ(s.solver_status, LpStatus::optimal);
    const Eigen::Map<const Eigen::VectorXd> m(s.m_r.data(), static_cast<Eigen::Index>(s.m_r.size()));
    const Eigen::VectorXd slack = p.rhs - p.constraints * m;
    EXPECT_GE(slack.minCoeff(), -1e-8);
    EXPECT_NEAR(s.objective_value, lp_objective(p, s.m_r), 1e-15);

    const auto cand = js_candidate(p);
    const Eigen::Map<const Eigen::VectorXd> mc(cand.data(), static_cast<Eigen::Index>(cand.size()));
    EXPECT_GE((p.rhs - p.constraints * mc).minCoeff(), 0.0);
    EXPECT_LE(s.objective_value, lp_objective(p, cand) + 1e-12);
    EXPECT_LT(s.objective_value, lp_objective(p, cand));

    std::size_t crisp = 0;
    for (double v : s.m_r) crisp += (v < 1e-6 || v > 1.0 - 1e-6) ? 1 : 0;
    EXPECT_GE(static_cast<double>(crisp), 0.95 * static_cast<double>(s.m_r.size()));
}

TEST(BayesLp, AssembledRegion) {
    const auto& p = small_problem();
    const auto& s = small_solution();
    const auto r = assemble_bayes_region(p, s);
    const auto d = assemble_bayes_region(p, s, true);
    for (auto [dx, dy] : p.null_grid) EXPECT_LE(analytic_power(r, dx, dy), p.alpha + 1e-6);
    EXPECT_GE(analytic_power(r, 0.0, 0.0), 0.04);
    for (double t : {0.0, 0.5, 1.5, 3.0, 6.0}) EXPECT_LE(analytic_power(d, t, t), analytic_power(r, t, t) + 1e-15);
    // The outside rule plus the cells reproduce the program's type-1 error.
    const Eigen::Map<const Eigen::VectorXd> m(s.m_r.data(), static_cast<Eigen::Index>(s.m_r.size()));
    const Eigen::VectorXd used = p.constraints * m;
    for (std::size_t g = 0; g < p.null_grid.size(); g += 7) {
        const auto [dx, dy] = p.null_grid[g];
        EXPECT_NEAR(analytic_power(r, dx, dy), used[static_cast<Eigen::Index>(g)] + (p.alpha - p.rhs[static_cast<Eigen::Index>(g)]), 1e-9);
    }
    EXPECT_NEAR(analytic_power(r, 2.0, -1.0), oracle::quadrature_power(r, 2.0, -1.0), 1e-7);
}

TEST(BayesLp, RejectsNonOptimalSolution) {
    LpSolution s = small_solution();
    s.solver_status = LpStatus::iteration_limit;
    EXPECT_THROW(assemble_bayes_region(small_problem(), s), InvalidArgument);
}

TEST(BayesLp, IterationLimitStatusIsReported) {
    SimplexOptions opt;
    opt.max_iterations = 5;
    EXPECT_EQ(solve_lp(small_problem(), opt).solver_status, LpStatus::iteration_limit);
}

TEST(BayesLp, ArgumentChecks) {
    EXPECT_THROW(build_lp(0.0, 16), InvalidArgument);
    EXPECT_THROW(build_lp(0.05, 2), InvalidArgument);
    EXPECT_THROW(build_lp(0.05, 16, -1.0), InvalidArgument);
}

TEST(BayesLp, ShippedRegionFile) {
    const std::string path = std::string(COMPNULL_DATA_DIR) + "/bayes_alpha0.05_m65.region.json";
    if (!std::ifstream(path)) GTEST_SKIP() << "missing " << path;
    const auto r = load_region(path);
    EXPECT_EQ(r.kind(), RegionKind::bayes);
    EXPECT_EQ(r.alpha(), 0.05);
    const double b = 2.0 * js_threshold(0.05);
    for (int i = -130; i <= 130; ++i) {
        EXPECT_LE(analytic_power(r, b * i / 65.0, 0.0), 0.05 + 1e-6);
        EXPECT_LE(analytic_power(r, 0.0, b * i / 65.0), 0.05 + 1e-6);
    }
    EXPECT_GE(analytic_power(r, 0.0, 0.0), 0.04);
}
