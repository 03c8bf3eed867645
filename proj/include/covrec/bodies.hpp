#pragma once

// Test bodies inside the unit box, each with its centroid at the origin.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "covrec/covariogram.hpp"
#include "covrec/errors.hpp"
#include "covrec/geometry.hpp"
#include "covrec/random.hpp"

namespace covrec {

namespace detail {

inline Polygon placed(std::vector<Vec2> v) {
    Polygon p = centered(Polygon::from_vertices(std::move(v)));
    require_in_unit_box(p);
    return p;
}

}  // namespace detail

/// C0 itself.
inline Polygon square_body() { return unit_box(); }

/// Regular m-gon with circumradius r and a vertex at angle pi/2.
inline Polygon regular_polygon(int m, double r = 0.48) {
    if (m < 3) throw ConfigurationError("regular polygon needs m >= 3");
    if (!(r > 0.0)) throw ConfigurationError("circumradius must be > 0");
    std::vector<Vec2> v;
    for (int i = 0; i < m; ++i) {
        const double t = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * i / m;
        v.push_back({r * std::cos(t), r * std::sin(t)});
    }
    return detail::placed(std::move(v));
}

/// Inscribed polygon of the ellipse with semi-axes a, b.
inline Polygon ellipse_polygon(double a, double b, int segments = 64) {
    if (segments < 3) throw ConfigurationError("ellipse needs at least 3 segments");
    if (!(a > 0.0 && b > 0.0)) throw ConfigurationError("ellipse semi-axes must be > 0");
    std::vector<Vec2> v;
    for (int i = 0; i < segments; ++i) {
        const double t = 2.0 * std::numbers::pi * i / segments;
        v.push_back({a * std::cos(t), b * std::sin(t)});
    }
    return detail::placed(std::move(v));
}

/// `n` points at random angles on a randomly stretched and rotated ellipse,
/// so every point is a vertex; the result is centered and, if needed, shrunk
/// to fit in 0.98 C0.
inline Polygon random_polygon(int n, std::uint64_t seed) {
    if (n < 3) throw ConfigurationError("random polygon needs at least 3 vertices");
    CounterStream rng(derive_key(seed, {0x626f6479ULL, std::uint64_t(n)}));
    const double a = 0.25 + 0.2 * rng.uniform();
    const double b = 0.25 + 0.2 * rng.uniform();
    const double rot = 2.0 * std::numbers::pi * rng.uniform();
    std::vector<double> t(static_cast<std::size_t>(n));
    // Stratified angles keep vertices apart, so none is merged away.
    for (int i = 0; i < n; ++i) t[std::size_t(i)] = 2.0 * std::numbers::pi * (i + 0.1 + 0.8 * rng.uniform()) / n;
    std::vector<Vec2> v;
    for (double s : t) {
        const Vec2 e{a * std::cos(s), b * std::sin(s)};
        v.push_back({e.x * std::cos(rot) - e.y * std::sin(rot), e.x * std::sin(rot) + e.y * std::cos(rot)});
    }
    Polygon p = centered(Polygon::from_vertices(std::move(v)));
    double reach = 0.0;
    for (const Vec2& q : p.vertices()) reach = std::max({reach, std::abs(q.x), std::abs(q.y)});
    if (reach > 0.49) p = p.scaled(0.49 / reach);
    require_in_unit_box(p);
    return p;
}

}  // namespace covrec
