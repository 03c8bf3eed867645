#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "covrec/oracle.hpp"
#include "covrec/spectral.hpp"
#include "support.hpp"

using namespace covrec;
using covrec::testing::random_body;

TEST(CovariogramBruteforce, SquareShift) {
    const auto e = oracle::covariogram_bruteforce(unit_box(), {0.25, 0}, 1000000, 5);
    EXPECT_LE(std::abs(e.value - 0.75), 3.0 * e.standard_error);
    EXPECT_GT(e.standard_error, 0.0);
}

TEST(CovariogramBruteforce, OutsideDifferenceBody) {
    const auto e = oracle::covariogram_bruteforce(covrec::testing::pentagon(), {0.99, 0.99}, 100000, 6);
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.standard_error, 0.0);
}

TEST(CovariogramBruteforce, OriginIsArea) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Polygon p = random_body(s);
        const auto e = oracle::covariogram_bruteforce(p, {0, 0}, 100000, s);
        EXPECT_LE(std::abs(e.value - area(p)), 3.0 * e.standard_error + 1e-15) << s;
    }
}

TEST(FtQuadrature, SquareAndOrigin) {
    const auto q = oracle::ft_quadrature(unit_box(), {std::numbers::pi, 0});
    EXPECT_TRUE(q.accurate);
    EXPECT_NEAR(q.value.real(), 2.0 / std::numbers::pi, 1e-12);
    EXPECT_NEAR(q.value.imag(), 0.0, 1e-12);
    const Polygon p = random_body(3);
    EXPECT_NEAR(std::abs(oracle::ft_quadrature(p, {0, 0}).value - area(p)), 0.0, 1e-14);
}

TEST(FtQuadrature, CrossValidatesIndicatorFt) {
    const Polygon p = random_polygon(5, 77);
    const auto q = oracle::ft_quadrature(p, {7, -3});
    EXPECT_TRUE(q.accurate);
    EXPECT_LE(std::abs(q.value - indicator_ft(p, {7, -3})), 1e-8);
}

TEST(FtQuadrature, FlagsInsufficientNodes) {
    // Four nodes per band cannot resolve an oscillation of 300 across it.
    EXPECT_FALSE(oracle::ft_quadrature(random_polygon(6, 5), {5, 300}, 4).accurate);
}

TEST(HausdorffBruteforce, IdenticalBodies) {
    EXPECT_EQ(oracle::hausdorff_bruteforce(random_body(4), random_body(4), 10000), 0.0);
}

TEST(HausdorffBruteforce, ScaledSquare) {
    EXPECT_NEAR(oracle::hausdorff_bruteforce(unit_box(), unit_box().scaled(1.2), 1000000), 0.1 * std::sqrt(2.0), 1e-5);
}

TEST(HausdorffBruteforce, SandwichesExactDistance) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const Polygon p = random_body(s), q = random_body(s + 100);
        const double lo = oracle::hausdorff_bruteforce(p, q, 10000);
        const double d = hausdorff_distance(p, q);
        EXPECT_LE(lo, d + 1e-12) << s;
        EXPECT_LE(d, lo + oracle::hausdorff_gap(p, q, 10000)) << s;
    }
}

TEST(Contains, ConvexMembership) {
    const Polygon box = unit_box();
    const auto& v = box.vertices();
    EXPECT_TRUE(oracle::contains(v, {0, 0}));
    EXPECT_TRUE(oracle::contains(v, {0.5, 0.1}));
    EXPECT_FALSE(oracle::contains(v, {0.5 + 1e-9, 0}));
    EXPECT_FALSE(oracle::contains({{0, 0}, {1, 0}}, {0.5, 0}));
}
