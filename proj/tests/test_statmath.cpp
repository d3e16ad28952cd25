#include <cmath>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "compnull/statmath.hpp"
#include "oracles.hpp"

using namespace compnull;

TEST(NormalCdf, FixedPoints) {
    EXPECT_EQ(std_normal_cdf(0.0), 0.5);
    EXPECT_EQ(std_normal_cdf(kInf), 1.0);
    EXPECT_EQ(std_normal_cdf(-kInf), 0.0);
    EXPECT_NEAR(std_normal_cdf(1.959963985), 0.975, 1e-9);
}

TEST(NormalCdf, AgreesWithErfcAcrossRange) {
    for (double x = -38.0; x <= 9.0; x += 0.0625) {
        const double ref = 0.5 * boost::math::erfc(-x / std::sqrt(2.0));
        EXPECT_NEAR(std_normal_cdf(x), ref, 1e-15 + 1e-14 * ref) << x;
    }
}

TEST(NormalCdf, SurvivalIsExactInUpperTail) {
    for (double x : {5.0, 10.0, 20.0, 30.0}) {
        const double ref = 0.5 * boost::math::erfc(x / std::sqrt(2.0));
        EXPECT_NEAR(std_normal_sf(x) / ref, 1.0, 1e-12) << x;
    }
}

TEST(NormalQuantile, FixedPoints) {
    EXPECT_EQ(std_normal_quantile(0.5), 0.0);
    EXPECT_EQ(std_normal_quantile(1.0), kInf);
    EXPECT_EQ(std_normal_quantile(0.0), -kInf);
    EXPECT_NEAR(std_normal_quantile(0.975), 1.959963985, 1e-9);
}

TEST(NormalQuantile, RejectsOutsideUnitInterval) {
    EXPECT_THROW(std_normal_quantile(-1e-12), InvalidArgument);
    EXPECT_THROW(std_normal_quantile(1.0 + 1e-12), InvalidArgument);
    EXPECT_THROW(std_normal_quantile(std::nan("")), InvalidArgument);
}

TEST(NormalQuantile, AgreesWithBoostOnLogGrid) {
    for (double e = -300.0; e < -0.31; e += 0.37) {
        const double p = std::pow(10.0, e);
        const double ref = oracle::quantile(p);
        EXPECT_NEAR(std_normal_quantile(p), ref, 1e-12 * std::fabs(ref)) << p;
        if (p > 1e-15) {
            EXPECT_NEAR(std_normal_quantile(1.0 - p), oracle::quantile(1.0 - p), 1e-9) << p;
        }
    }
}

TEST(NormalQuantile, InvertsCdf) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-30.0, 0.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng);
        EXPECT_NEAR(std_normal_quantile(std_normal_cdf(x)), x, 1e-9 * (1.0 + std::fabs(x)));
    }
}

TEST(IntervalProb, Examples) {
    EXPECT_EQ(gaussian_interval_prob({-kInf, kInf}, 3.7), 1.0);
    EXPECT_NEAR(gaussian_interval_prob({std_normal_quantile(0.025), std_normal_quantile(0.05)}, 0.0), 0.025, 1e-15);
    EXPECT_NEAR(gaussian_interval_prob({0.0, 1.959963985}, 0.0), oracle::cdf(1.959963985) - 0.5, 1e-15);
    EXPECT_NEAR(gaussian_interval_prob({0.0, 1.959963985}, 0.0), 0.475, 1e-9);
    EXPECT_EQ(gaussian_interval_prob({1.0, 1.0}, 0.0), 0.0);
}

TEST(IntervalProb, FarTailKeepsRelativeAccuracy) {
    const double p = gaussian_interval_prob({10.0, 11.0}, 0.0);
    const double ref = 0.5 * (boost::math::erfc(10.0 / std::sqrt(2.0)) - boost::math::erfc(11.0 / std::sqrt(2.0)));
    EXPECT_NEAR(p / ref, 1.0, 1e-12);
}

TEST(FoldedProb, Examples) {
    EXPECT_EQ(folded_interval_prob({0.0, kInf}, 0.0), 1.0);
    const double ref = (oracle::cdf(1.5) - oracle::cdf(0.5)) + (oracle::cdf(-1.5) - oracle::cdf(-2.5));
    EXPECT_NEAR(folded_interval_prob({1.0, 2.0}, 0.5), ref, 1e-14);
    EXPECT_NEAR(folded_interval_prob({1.0, 2.0}, 0.5), 0.3023, 1e-4);
    EXPECT_THROW(folded_interval_prob({-0.1, 1.0}, 0.0), InvalidArgument);
}

TEST(FoldedProb, EqualMassBands) {
    for (int K : {2, 5, 20}) {
        const double a = 1.0 / K;
        for (int k = 1; k <= K; ++k) {
            const Interval iv{std_normal_quantile((1.0 + (k - 1) * a) / 2.0), std_normal_quantile(std::min(1.0, (1.0 + k * a) / 2.0))};
            EXPECT_NEAR(folded_interval_prob(iv, 0.0), a, 1e-14) << K << " " << k;
        }
    }
}

TEST(TwoSidedPvalue, Values) {
    EXPECT_EQ(two_sided_pvalue(0.0), 1.0);
    EXPECT_NEAR(two_sided_pvalue(-3.0), 2.0 * (1.0 - oracle::cdf(3.0)), 1e-15);
}

TEST(GaussLegendreRule, IntegratesPolynomialsExactly) {
    const GaussLegendre rule(16);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    EXPECT_NEAR(wsum, 2.0, 1e-14);
    // Degree 31 is the limit for 16 nodes.
    EXPECT_NEAR(rule.integrate([](double x) { return std::pow(x, 30); }, -1.0, 1.0), 2.0 / 31.0, 1e-14);
    EXPECT_NEAR(rule.integrate([](double x) { return std::exp(x); }, 0.0, 2.0), std::exp(2.0) - 1.0, 1e-13);
}
