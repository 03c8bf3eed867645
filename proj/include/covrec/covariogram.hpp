#pragma once

// Covariogram g_P(x) = area(P ∩ (P + x)) and its samples on the lattice
// 2C0 ∩ (1/k)Z^2.

#include <cmath>
#include <string>
#include <vector>

#include "covrec/detail/parallel.hpp"
#include "covrec/errors.hpp"
#include "covrec/geometry.hpp"

namespace covrec {

/// Samples on 2C0 ∩ (1/k)Z^2, row-major in (x2, x1): the site with lattice
/// coordinates (j1, j2), |j1|, |j2| <= k, has index (j2 + k)(2k + 1) + (j1 + k).
/// The site -x of index i has index size() - 1 - i.
struct SampleGrid {
    int k = 0;
    std::vector<Vec2> sites;
    std::vector<double> values;

    static SampleGrid lattice(int k) {
        if (k < 1) throw ConfigurationError("lattice refinement k must be positive");
        SampleGrid g;
        g.k = k;
        const int side = 2 * k + 1;
        g.sites.reserve(static_cast<std::size_t>(side) * side);
        for (int j2 = -k; j2 <= k; ++j2) {
            for (int j1 = -k; j1 <= k; ++j1) g.sites.push_back({double(j1) / k, double(j2) / k});
        }
        g.values.assign(g.sites.size(), 0.0);
        return g;
    }

    int side() const { return 2 * k + 1; }
    std::size_t size() const { return sites.size(); }
    std::size_t center() const { return sites.size() / 2; }
    std::size_t negated(std::size_t i) const { return sites.size() - 1 - i; }
    std::size_t index(int j1, int j2) const {
        return static_cast<std::size_t>((j2 + k) * side() + (j1 + k));
    }
    double at(int j1, int j2) const { return values[index(j1, j2)]; }
};

inline void require_in_unit_box(const Polygon& p) {
    for (const Vec2& v : p.vertices()) {
        if (std::abs(v.x) > 0.5 + 1e-12 || std::abs(v.y) > 0.5 + 1e-12) {
            throw BodyOutOfBox("vertex (" + std::to_string(v.x) + ", " + std::to_string(v.y) +
                               ") lies outside C0");
        }
    }
}

namespace detail {

// True when x is outside the interior of DP. The facet normals of DP are the
// edge normals of P and their negatives, and h_DP(u) = h_P(u) + h_P(-u).
inline bool outside_difference_body(const Polygon& p, Vec2 x) {
    const auto& v = p.vertices();
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e = v[(i + 1) % n] - v[i];
        const Vec2 nrm{e.y, -e.x};
        double lo = dot(nrm, v[0]);
        double hi = lo;
        for (const Vec2& w : v) {
            const double d = dot(nrm, w);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (std::abs(dot(nrm, x)) >= hi - lo) return true;
    }
    return false;
}

}  // namespace detail

/// g_P(x). Exactly 0 outside int(DP); evaluated as g_P(-x) whenever x is
/// lexicographically negative so that g_P(x) == g_P(-x) bit for bit.
inline double covariogram_at(const Polygon& p, Vec2 x) {
    if (p.is_degenerate()) return 0.0;
    if (x.x < 0.0 || (x.x == 0.0 && x.y < 0.0)) x = -x;
    if (x.x == 0.0 && x.y == 0.0) return area(p);
    if (detail::outside_difference_body(p, x)) return 0.0;
    const double a = area(intersect_convex(p, p.translated(x)));
    return a > 0.0 ? a : 0.0;
}

/// g_P at every site of 2C0 ∩ (1/k)Z^2; requires P ⊂ C0.
inline SampleGrid covariogram_grid(const Polygon& p, int k) {
    require_in_unit_box(p);
    SampleGrid g = SampleGrid::lattice(k);
    const std::size_t half = g.center();
    detail::parallel_for(half + 1, [&](std::size_t i) { g.values[i] = covariogram_at(p, g.sites[i]); });
    for (std::size_t i = 0; i < half; ++i) g.values[g.negated(i)] = g.values[i];
    return g;
}

}  // namespace covrec
