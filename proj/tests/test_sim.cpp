#include <cmath>
#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "compnull/gof.hpp"
#include "compnull/sim.hpp"
#include "oracles.hpp"

using namespace compnull;

TEST(Gof, KolmogorovTail) {
    EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
    // Tabulated 5% and 1% points of the limiting distribution.
    EXPECT_NEAR(kolmogorov_sf(1.3581), 0.05, 1e-4);
    EXPECT_NEAR(kolmogorov_sf(1.6276), 0.01, 1e-4);
}

TEST(Gof, KsDetectsShiftAndAcceptsTruth) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    std::vector<double> a(4000), b(4000);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng) + 0.2;
    EXPECT_GT(ks_one_sample(a, oracle::cdf).p_value, 0.01);
    EXPECT_LT(ks_one_sample(b, oracle::cdf).p_value, 1e-6);
    EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
    EXPECT_NEAR(dkw_epsilon(10000, 0.99), std::sqrt(std::log(100.0) / 20000.0), 1e-15);
}

TEST(Sim, NullRatesAndOracleAgreement) {
    SimSpec spec;
    spec.methods = {SimMethod::minimax, SimMethod::extended, SimMethod::js};
    spec.delta_grid = {{0.0, 0.0}, {0.3, 0.3}, {0.2, 0.0}};
    spec.reps = 40000;
    spec.seed = 3;
    const auto res = simulate_power(spec);
    ASSERT_EQ(res.rows.size(), 9u);
    const auto mm = build_minimax_region(0.05);
    const auto js = build_js_region(0.05);
    const double rn = std::sqrt(50.0);
    for (const auto& row : res.rows) {
        EXPECT_NEAR(row.mc_se, std::sqrt(row.reject_rate * (1 - row.reject_rate) / row.reps), 1e-15);
        const auto& r = row.method == SimMethod::js ? js : mm;
        const double exact = analytic_power(r, rn * row.delta_x, rn * row.delta_y);
        EXPECT_NEAR(row.reject_rate, exact, 4.0 * std::sqrt(exact * (1 - exact) / row.reps))
            << to_string(row.method) << " " << row.delta_x << " " << row.delta_y;
    }
}

TEST(Sim, DeterministicAcrossThreadCounts) {
    SimSpec spec;
    spec.methods = {SimMethod::minimax, SimMethod::sobel};
    spec.delta_grid = {{0.0, 0.0}, {0.1, 0.2}};
    spec.reps = 5000;
    spec.seed = 77;
    setenv("COMPOSITE_NULL_THREADS", "1", 1);
    const auto one = power_csv(simulate_power(spec));
    setenv("COMPOSITE_NULL_THREADS", "3", 1);
    const auto three = power_csv(simulate_power(spec));
    unsetenv("COMPOSITE_NULL_THREADS");
    EXPECT_EQ(one, three);
    EXPECT_EQ(one.substr(0, one.find('\n')), "delta_x,delta_y,method,alpha,n,reps,reject_rate,mc_se,seed");
    spec.seed = 78;
    EXPECT_NE(power_csv(simulate_power(spec)), one);
}

TEST(Sim, SpecValidation) {
    SimSpec spec;
    spec.reps = 0;
    EXPECT_THROW(simulate_power(spec), InvalidArgument);
    spec.reps = 10;
    spec.methods = {SimMethod::bayes};
    EXPECT_THROW(simulate_power(spec), InvalidArgument);
    spec.methods = {SimMethod::js};
    spec.delta_grid.clear();
    EXPECT_THROW(simulate_power(spec), InvalidArgument);
    spec.delta_grid = {{0.0, 0.0}};
    spec.alpha = 1.5;
    EXPECT_THROW(simulate_power(spec), InvalidArgument);
}

TEST(Sim, RandomizedCellsUseTheUniform) {
    // A region that rejects with probability 0.3 everywhere in the box.
    SimSpec spec;
    spec.methods = {SimMethod::bayes};
    spec.bayes_region = std::make_shared<const RejectionRegion2D>(
        0.3, RegionKind::bayes, std::vector<WeightedRect>{{{-kInf, kInf}, {-kInf, kInf}, 0.3}});
    spec.reps = 20000;
    const auto row = simulate_power(spec).rows.front();
    EXPECT_NEAR(row.reject_rate, 0.3, 4.0 * row.mc_se);
}

TEST(Sim, PvalueEcdf) {
    const auto e = simulate_pvalue_ecdf(2000, {0.0, 0.0}, 1000, 5);
    ASSERT_EQ(e.extended_minimax.size(), 2000u);
    const double eps = dkw_epsilon(2000, 0.99);
    for (double p = 0.01; p < 1.0; p += 0.01) {
        EXPECT_LE(ecdf_at(e.extended_minimax, p), p + eps);
        EXPECT_LE(ecdf_at(e.js, p), ecdf_at(e.extended_minimax, p) + 1.0 / 1000 + 1e-12);
    }
    for (const auto& d : e.draws) EXPECT_LE(d.p_extended, d.p_js_grid);
    const auto far = simulate_pvalue_ecdf(500, {5.0, 5.0}, 1000, 5);
    EXPECT_LT(far.extended_minimax[250], 0.01);
    const auto csv = ecdf_csv(far);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,p_value,ecdf");
}

TEST(Sim, SobelDensity) {
    const auto s = sample_sobel_density({0.0, 0.3}, 100, 4000, 9);
    ASSERT_EQ(s.size(), 2u);
    // Away from the origin the statistic approaches N(0,1) as n grows.
    const auto big = sample_sobel_density({0.3}, 3000, 4000, 9);
    EXPECT_GT(ks_one_sample(big[0].z, oracle::cdf).p_value, 0.01);
    EXPECT_LT(ks_one_sample(big[0].z, oracle::cdf).statistic, ks_one_sample(s[1].z, oracle::cdf).statistic);
    double var = 0.0;
    for (double v : s[0].z) var += v * v;
    EXPECT_LT(var / s[0].z.size(), 0.5);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n;
    std::vector<double> ref(4000);
    for (auto& v : ref) v = n(rng) * n(rng);
    EXPECT_GT(ks_two_sample(s[0].product, ref).p_value, 0.01);
    const auto csv = density_csv(s);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "delta_x,sample");
    EXPECT_THROW(sample_sobel_density({0.0}, 1, 10, 1), InvalidArgument);
}
