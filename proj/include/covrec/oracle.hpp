#pragma once

// Brute-force references for testing. Nothing here calls the geometry,
// covariogram or spectral kernels; a polygon is only read as a vertex list.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "covrec/geometry.hpp"
#include "covrec/random.hpp"

namespace covrec::oracle {

/// Point-in-polygon for a counterclockwise convex chain, boundary included.
inline bool contains(const std::vector<Vec2>& v, Vec2 p) {
    const std::size_t n = v.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = v[i];
        const Vec2 b = v[(i + 1) % n];
        if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0) return false;
    }
    return true;
}

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

/// Monte-Carlo area of P ∩ (P + x): uniform points in the bounding box of P,
/// counted when z ∈ P and z - x ∈ P.
inline Estimate covariogram_bruteforce(const Polygon& p, Vec2 x, std::size_t n_samples, std::uint64_t seed = 1) {
    const auto& v = p.vertices();
    if (v.size() < 3) return {};
    double x0 = v[0].x, x1 = v[0].x, y0 = v[0].y, y1 = v[0].y;
    for (const Vec2& q : v) {
        x0 = std::min(x0, q.x);
        x1 = std::max(x1, q.x);
        y0 = std::min(y0, q.y);
        y1 = std::max(y1, q.y);
    }
    const double box = (x1 - x0) * (y1 - y0);
    CounterStream rng(derive_key(seed, {0x6d63ULL}));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const Vec2 z{x0 + (x1 - x0) * rng.uniform(), y0 + (y1 - y0) * rng.uniform()};
        if (contains(v, z) && contains(v, z - x)) ++hits;
    }
    const double f = double(hits) / double(n_samples);
    return {box * f, box * std::sqrt(f * (1.0 - f) / double(n_samples))};
}

struct Quadrature {
    std::complex<double> value;
    double disagreement = 0.0;  // between n and 2n nodes per band
    bool accurate = true;       // disagreement <= 1e-8
};

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(std::size_t(n), 0.0);
    w.assign(std::size_t(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0, p1 = t;
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        x[std::size_t(i)] = -t;
        x[std::size_t(n - 1 - i)] = t;
        w[std::size_t(i)] = w[std::size_t(n - 1 - i)] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

// Chord [a, b] of the polygon on the horizontal line at height y.
inline bool chord(const std::vector<Vec2>& v, double y, double& a, double& b) {
    a = std::numeric_limits<double>::infinity();
    b = -a;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = v[i];
        const Vec2 q = v[(i + 1) % n];
        if ((p.y - y) * (q.y - y) > 0.0 || p.y == q.y) continue;
        const double x = p.x + (q.x - p.x) * (y - p.y) / (q.y - p.y);
        a = std::min(a, x);
        b = std::max(b, x);
    }
    return a <= b;
}

// ∫_a^b exp(-i s x) dx.
inline std::complex<double> line_integral(double s, double a, double b) {
    const double len = b - a;
    if (std::abs(s * len) < 1e-4) {
        const double m = 0.5 * (a + b);
        const double u = s * len / 2.0;
        return std::exp(std::complex<double>(0.0, -s * m)) * len * (1.0 - u * u / 6.0 + u * u * u * u / 120.0);
    }
    return (std::exp(std::complex<double>(0.0, -s * a)) - std::exp(std::complex<double>(0.0, -s * b))) /
           std::complex<double>(0.0, s);
}

inline std::complex<double> banded_quadrature(const std::vector<Vec2>& v, Vec2 xi, int nodes) {
    std::vector<double> ys;
    for (const Vec2& q : v) ys.push_back(q.y);
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::vector<double> gx, gw;
    gauss_legendre(nodes, gx, gw);
    std::complex<double> total;
    for (std::size_t band = 0; band + 1 < ys.size(); ++band) {
        const double lo = ys[band], hi = ys[band + 1];
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (int i = 0; i < nodes; ++i) {
            const double y = mid + half * gx[std::size_t(i)];
            double a = 0.0, b = 0.0;
            if (!chord(v, y, a, b)) continue;
            total += half * gw[std::size_t(i)] * std::exp(std::complex<double>(0.0, -xi.y * y)) *
                     line_integral(xi.x, a, b);
        }
    }
    return total;
}

}  // namespace detail

/// ∫_P exp(-i xi . x) dx: the x-integral along each horizontal chord in closed
/// form, the y-integral by Gauss-Legendre on each band between vertex heights
/// (where the chord ends are linear, so the integrand is smooth). Repeated
/// with doubled nodes as an accuracy check.
inline Quadrature ft_quadrature(const Polygon& p, Vec2 xi, int n_nodes = 64) {
    const auto& v = p.vertices();
    Quadrature q;
    q.value = detail::banded_quadrature(v, xi, 2 * n_nodes);
    q.disagreement = std::abs(q.value - detail::banded_quadrature(v, xi, n_nodes));
    q.accurate = q.disagreement <= 1e-8;
    return q;
}

/// max over n_dirs equally spaced directions of |h_P(u) - h_Q(u)|. A lower
/// bound on the Hausdorff distance, short of it by at most
/// hausdorff_gap(P, Q, n_dirs).
inline double hausdorff_bruteforce(const Polygon& p, const Polygon& q, std::size_t n_dirs) {
    auto h = [](const std::vector<Vec2>& v, double c, double s) {
        double m = -std::numeric_limits<double>::infinity();
        for (const Vec2& a : v) m = std::max(m, c * a.x + s * a.y);
        return m;
    };
    double best = 0.0;
    for (std::size_t i = 0; i < n_dirs; ++i) {
        const double t = 2.0 * std::numbers::pi * double(i) / double(n_dirs);
        const double c = std::cos(t), s = std::sin(t);
        best = std::max(best, std::abs(h(p.vertices(), c, s) - h(q.vertices(), c, s)));
    }
    return best;
}

/// Lipschitz gap of the sampled maximum: support functions of bodies within
/// radius R of the origin are R-Lipschitz in the angle, so the difference
/// moves by at most 2R per radian, over half the sampling step.
inline double hausdorff_gap(const Polygon& p, const Polygon& q, std::size_t n_dirs) {
    double r = 0.0;
    for (const auto* poly : {&p, &q}) {
        for (const Vec2& a : poly->vertices()) r = std::max(r, std::hypot(a.x, a.y));
    }
    return 2.0 * r * std::numbers::pi / double(n_dirs);
}

}  // namespace covrec::oracle
