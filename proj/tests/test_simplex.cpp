#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "compnull/simplex.hpp"

using namespace compnull;

namespace {

Eigen::SparseMatrix<double> sparse(const Eigen::MatrixXd& d) { return d.sparseView(); }

// Best feasible point on a lattice of the box; a lower bound on what the
// solver must reach.
double brute_force_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                       const Eigen::VectorXd& u) {
    const int n = static_cast<int>(c.size());
    double best = std::numeric_limits<double>::infinity();
    const int steps = 60;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
        Eigen::VectorXd x(n);
        for (int j = 0; j < n; ++j) x[j] = u[j] * idx[j] / steps;
        if (((A * x - b).array() <= 1e-12).all()) best = std::min(best, c.dot(x));
        int k = 0;
        while (k < n && ++idx[k] > steps) idx[k++] = 0;
        if (k == n) break;
    }
    return best;
}

} // namespace

TEST(Simplex, TwoCellToy) {
    Eigen::MatrixXd A(1, 2);
    A << 0.5, 0.5;
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 0.05);
    Eigen::VectorXd c(2);
    c << -0.9, -0.1;
    const auto r = solve_bounded_lp(sparse(A), b, c, Eigen::VectorXd::Ones(2));
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.x[0], 0.1, 1e-12);
    EXPECT_NEAR(r.x[1], 0.0, 1e-12);
    EXPECT_NEAR(r.objective, -0.09, 1e-12);
    EXPECT_LT(std::fabs(r.relative_gap), 1e-12);
}

TEST(Simplex, BoundFlipOnly) {
    Eigen::MatrixXd A(1, 2);
    A << 1.0, 1.0;
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 10.0);
    Eigen::VectorXd c(2);
    c << -1.0, -2.0;
    const auto r = solve_bounded_lp(sparse(A), b, c, Eigen::VectorXd::Ones(2));
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_EQ(r.x[0], 1.0);
    EXPECT_EQ(r.x[1], 1.0);
}

TEST(Simplex, Infeasible) {
    // x1 + x2 <= -1 with x >= 0.
    Eigen::MatrixXd A(1, 2);
    A << 1.0, 1.0;
    const auto r = solve_bounded_lp(sparse(A), Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Ones(2),
                                    Eigen::VectorXd::Ones(2));
    EXPECT_EQ(r.status, LpStatus::infeasible);
}

TEST(Simplex, NegativeRhsFeasibleNeedsPhaseOne) {
    // -x1 - x2 <= -1 (x1 + x2 >= 1), minimize x1 + 3 x2.
    Eigen::MatrixXd A(1, 2);
    A << -1.0, -1.0;
    Eigen::VectorXd c(2);
    c << 1.0, 3.0;
    const auto r = solve_bounded_lp(sparse(A), Eigen::VectorXd::Constant(1, -1.0), c, Eigen::VectorXd::Ones(2));
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.x[0], 1.0, 1e-12);
    EXPECT_NEAR(r.x[1], 0.0, 1e-12);
}

TEST(Simplex, Unbounded) {
    Eigen::MatrixXd A(1, 2);
    A << 1.0, -1.0;
    Eigen::VectorXd c(2);
    c << 0.0, -1.0;
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity());
    EXPECT_EQ(solve_bounded_lp(sparse(A), Eigen::VectorXd::Ones(1), c, u).status, LpStatus::unbounded);
}

TEST(Simplex, IterationLimitIsReported) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    Eigen::MatrixXd A(6, 30);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = u(rng);
    SimplexOptions opt;
    opt.max_iterations = 1;
    const auto r = solve_bounded_lp(sparse(A), Eigen::VectorXd::Ones(6), -Eigen::VectorXd::Ones(30),
                                    Eigen::VectorXd::Ones(30), opt);
    EXPECT_EQ(r.status, LpStatus::iteration_limit);
}

TEST(Simplex, RandomSmallProblemsMatchGridSearch) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> coef(0, 4);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd A(2, 3);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = coef(rng);
        Eigen::VectorXd b(2), c(3);
        b << 2.0, 3.0;
        for (int j = 0; j < 3; ++j) c[j] = -1.0 - coef(rng);
        const Eigen::VectorXd up = Eigen::VectorXd::Ones(3);
        const auto r = solve_bounded_lp(sparse(A), b, c, up);
        ASSERT_EQ(r.status, LpStatus::optimal);
        EXPECT_TRUE(((A * r.x - b).array() <= 1e-10).all());
        // Grid search over multiples of 1/60 can only do worse than the optimum.
        EXPECT_LE(r.objective, brute_force_min(A, b, c, up) + 1e-12);
        EXPECT_LT(std::fabs(r.relative_gap), 1e-9);
    }
}

TEST(Simplex, FullPricingHookGivesSameOptimum) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd A(10, 200);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = u(rng);
    Eigen::VectorXd c(200);
    for (auto& v : c) v = -u(rng);
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(10, 5.0);
    const auto plain = solve_bounded_lp(sparse(A), b, c, Eigen::VectorXd::Ones(200));
    SimplexOptions opt;
    opt.transpose_product = [&](const Eigen::VectorXd& w, Eigen::VectorXd& out) { out = A.transpose() * w; };
    const auto hooked = solve_bounded_lp(sparse(A), b, c, Eigen::VectorXd::Ones(200), opt);
    ASSERT_EQ(plain.status, LpStatus::optimal);
    ASSERT_EQ(hooked.status, LpStatus::optimal);
    EXPECT_NEAR(plain.objective, hooked.objective, 1e-10);
}

TEST(Simplex, DimensionChecks) {
    Eigen::MatrixXd A(1, 2);
    A << 1.0, 1.0;
    EXPECT_THROW(solve_bounded_lp(sparse(A), Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)),
                 InvalidArgument);
    EXPECT_THROW(solve_bounded_lp(sparse(A), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(2), -Eigen::VectorXd::Ones(2)),
                 InvalidArgument);
}
