#pragma once

// Shared fixtures for the test suites.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "covrec/bodies.hpp"
#include "covrec/covariogram.hpp"
#include "covrec/detail/parallel.hpp"
#include "covrec/geometry.hpp"
#include "covrec/random.hpp"

namespace covrec::testing {

/// Random convex body in C0 with 3..12 vertices, one per seed.
inline Polygon random_body(std::uint64_t seed) { return random_polygon(3 + int(seed % 10), seed + 1000); }

inline Polygon pentagon() { return regular_polygon(5, 0.48); }

inline Polygon triangle() { return Polygon::from_vertices({{0, 0}, {1, 0}, {0, 1}}); }

/// Stream for test-side randomness, keyed by a per-test label.
inline CounterStream stream(std::uint64_t label) { return CounterStream(derive_key(0x7e57, {label})); }

inline Direction random_direction(CounterStream& rng) {
    return Direction::from_angle(2.0 * std::numbers::pi * rng.uniform());
}

/// Radius of the largest disk centred at the origin inside P.
inline double inradius_at_origin(const Polygon& p) {
    const auto& v = p.vertices();
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e = v[(i + 1) % v.size()] - v[i];
        r = std::min(r, cross(e, -v[i]) / norm(e));
    }
    return r;
}

/// Fourier transform of g_P over 2C0 by tensor Gauss-Legendre quadrature,
/// `cells` cells per axis with three nodes each. g_P is sampled once and
/// reused for every frequency; the kernel exp(-i xi . x) separates per axis.
inline std::vector<std::complex<double>> covariogram_ft_quadrature(const Polygon& p, const std::vector<Vec2>& xis,
                                                                  int cells = 400) {
    const double t[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double h = 2.0 / cells;
    std::vector<double> x, wx;
    for (int c = 0; c < cells; ++c) {
        for (int j = 0; j < 3; ++j) {
            x.push_back(-1.0 + (c + 0.5) * h + 0.5 * h * t[j]);
            wx.push_back(0.5 * h * w[j]);
        }
    }
    const std::size_t n = x.size();
    std::vector<double> g(n * n);  // g[b * n + a] = g_P(x_a, x_b)
    covrec::detail::parallel_for(n, [&](std::size_t b) {
        for (std::size_t a = 0; a < n; ++a) g[b * n + a] = covariogram_at(p, {x[a], x[b]});
    });
    std::vector<std::complex<double>> out;
    for (const Vec2& xi : xis) {
        std::vector<std::complex<double>> ex(n), ey(n);
        for (std::size_t a = 0; a < n; ++a) {
            ex[a] = wx[a] * std::exp(std::complex<double>(0.0, -xi.x * x[a]));
            ey[a] = wx[a] * std::exp(std::complex<double>(0.0, -xi.y * x[a]));
        }
        std::complex<double> total;
        for (std::size_t b = 0; b < n; ++b) {
            std::complex<double> row;
            for (std::size_t a = 0; a < n; ++a) row += g[b * n + a] * ex[a];
            total += ey[b] * row;
        }
        out.push_back(total);
    }
    return out;
}

}  // namespace covrec::testing
