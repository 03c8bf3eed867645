#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "covrec/covariogram.hpp"
#include "covrec/oracle.hpp"
#include "support.hpp"

using namespace covrec;
using covrec::testing::random_body;
using covrec::testing::stream;

namespace {

double square_closed_form(Vec2 x) { return std::max(0.0, 1 - std::abs(x.x)) * std::max(0.0, 1 - std::abs(x.y)); }

double diameter(const Polygon& p) {
    double d = 0.0;
    for (const Vec2& a : p.vertices()) {
        for (const Vec2& b : p.vertices()) d = std::max(d, norm(a - b));
    }
    return d;
}

// Distance from o to the boundary of an o-symmetric polygon along u.
double radial(const Polygon& d, Vec2 u) {
    const auto& v = d.vertices();
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e = v[(i + 1) % v.size()] - v[i];
        const Vec2 n{e.y, -e.x};
        const double c = dot(n, v[i]);
        if (dot(n, u) > 0.0) r = std::min(r, c / dot(n, u));
    }
    return r;
}

Vec2 random_point_in(const Polygon& d, CounterStream& rng) {
    for (;;) {
        const Vec2 x{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
        if (oracle::contains(d.vertices(), x)) return x;
    }
}

}  // namespace

TEST(CovariogramAt, SquareClosedForm) {
    EXPECT_EQ(covariogram_at(unit_box(), {0.25, 0}), 0.75);
    auto rng = stream(10);
    for (int i = 0; i < 200; ++i) {
        const Vec2 x{2.4 * rng.uniform() - 1.2, 2.4 * rng.uniform() - 1.2};
        EXPECT_NEAR(covariogram_at(unit_box(), x), square_closed_form(x), 1e-15);
    }
}

TEST(CovariogramAt, OriginIsArea) {
    for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(covariogram_at(random_body(s), {0, 0}), area(random_body(s)));
}

TEST(CovariogramAt, RandomHexagonMatchesMonteCarlo) {
    auto rng = stream(11);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Polygon p = random_polygon(6, s);
        const Vec2 x = random_point_in(difference_body(p), rng);
        const auto mc = oracle::covariogram_bruteforce(p, x, 1000000, s + 1);
        EXPECT_LE(std::abs(covariogram_at(p, x) - mc.value), 3.0 * mc.standard_error) << "seed " << s;
    }
}

TEST(CovariogramGrid, SquareAtCoarsestLevel) {
    const SampleGrid g = covariogram_grid(unit_box(), 1);
    ASSERT_EQ(g.size(), 9u);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.values[i], i == g.center() ? 1.0 : 0.0);
}

TEST(CovariogramGrid, SquareQuarterShift) { EXPECT_EQ(covariogram_grid(unit_box(), 4).at(1, 0), 0.75); }

TEST(CovariogramGrid, AgreesWithPointwiseEvaluation) {
    const Polygon p = covrec::testing::pentagon();
    const SampleGrid g = covariogram_grid(p, 8);
    ASSERT_EQ(g.size(), 289u);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(g.values[i], covariogram_at(p, g.sites[i]));
        EXPECT_EQ(g.values[i], g.values[g.negated(i)]);
        EXPECT_EQ(g.sites[g.negated(i)].x, -g.sites[i].x);
    }
}

TEST(CovariogramGrid, RejectsBodiesOutsideBox) {
    EXPECT_THROW(covariogram_grid(unit_box().translated({1e-9, 0}), 4), BodyOutOfBox);
    EXPECT_NO_THROW(covariogram_grid(unit_box().translated({1e-13, 0}), 4));
}

TEST(CovariogramProperties, Evenness) {
    auto rng = stream(12);
    for (int i = 0; i < 500; ++i) {
        const Polygon p = random_body(std::uint64_t(i));
        const Vec2 x{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
        EXPECT_NEAR(covariogram_at(p, x), covariogram_at(p, -x), 1e-12);
    }
}

TEST(CovariogramProperties, LipschitzBounds) {
    auto rng = stream(13);
    for (int i = 0; i < 1000; ++i) {
        const Polygon p = random_body(std::uint64_t(i % 50));
        const Vec2 x{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
        const Vec2 y = x + Vec2{0.2 * rng.uniform() - 0.1, 0.2 * rng.uniform() - 0.1};
        const double diff = std::abs(covariogram_at(p, x) - covariogram_at(p, y));
        EXPECT_LE(diff, std::sqrt(2.0) * norm(x - y) + 1e-12);
        // max_u b_P(u) is the diameter.
        EXPECT_LE(diff, diameter(p) * norm(x - y) + 1e-12);
    }
}

TEST(CovariogramProperties, SquareRootMidpointConcavity) {
    auto rng = stream(14);
    for (int i = 0; i < 200; ++i) {
        const Polygon p = random_body(std::uint64_t(i));
        const Polygon d = difference_body(p);
        const Vec2 x = random_point_in(d, rng), y = random_point_in(d, rng);
        const double m = std::sqrt(covariogram_at(p, (x + y) * 0.5));
        EXPECT_GE(m, 0.5 * (std::sqrt(covariogram_at(p, x)) + std::sqrt(covariogram_at(p, y))) - 1e-10);
    }
}

TEST(CovariogramProperties, SupportIsInteriorOfDifferenceBody) {
    auto rng = stream(15);
    for (int i = 0; i < 1000; ++i) {
        const Polygon p = random_body(std::uint64_t(i % 100));
        const Polygon d = difference_body(p);
        const Vec2 u = covrec::testing::random_direction(rng).vec();
        const double r = radial(d, u);
        EXPECT_EQ(covariogram_at(p, u * (r * (1 + 1e-9))), 0.0);
        EXPECT_EQ(covariogram_at(p, u * r), 0.0);
        EXPECT_GT(covariogram_at(p, u * (r * (1 - 1e-3))), 0.0);
    }
}

TEST(CovariogramProperties, DifferenceQuotientSandwich) {
    auto rng = stream(16);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Polygon p = random_body(s);
        const double r = covrec::testing::inradius_at_origin(p);
        ASSERT_GT(r, 0.0);
        for (int i = 0; i < 100; ++i) {
            const Direction u = covrec::testing::random_direction(rng);
            const double t = 2.0 * r * (0.01 + 0.99 * rng.uniform());
            const double q = (area(p) - covariogram_at(p, u.vec() * t)) / t;
            const double b = brightness(p, u);
            EXPECT_GE(q, (1.0 - t / (2.0 * r)) * b - 1e-10);
            EXPECT_LE(q, b + 1e-10);
        }
    }
}
