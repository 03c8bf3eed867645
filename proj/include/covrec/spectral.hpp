#pragma once

// Fourier transform of polygon indicators and the square partial sums that
// turn squared-modulus samples back into covariogram values.

#include <Eigen/Dense>

#include <cmath>
#include <array>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "covrec/covariogram.hpp"
#include "covrec/errors.hpp"
#include "covrec/geometry.hpp"

namespace covrec {

/// Frequencies z = j / k^gamma for lattice points j with |j1|, |j2| <= k.
///
/// Only the half lattice {o} ∪ Z_k(+) is stored, where Z_k(+) holds the points
/// whose first nonzero coordinate is positive, in lexicographic order of
/// (j1, j2). Index 0 is the origin and i = 1..I' are the points of Z_k(+); a
/// negative index -i denotes the site -z_i.
struct FrequencyGrid {
    int k = 0;
    double gamma = 0.0;
    std::vector<std::array<int, 2>> lattice;  // half-lattice integer coordinates
    std::vector<Vec2> half_sites;

    static FrequencyGrid make(int k, double gamma) {
        if (k < 1) throw ConfigurationError("frequency grid needs k >= 1");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigurationError("frequency grid needs 0 < gamma < 1");
        FrequencyGrid g;
        g.k = k;
        g.gamma = gamma;
        const double step = std::pow(double(k), -gamma);
        g.lattice.push_back({0, 0});
        for (int j2 = 1; j2 <= k; ++j2) g.lattice.push_back({0, j2});
        for (int j1 = 1; j1 <= k; ++j1) {
            for (int j2 = -k; j2 <= k; ++j2) g.lattice.push_back({j1, j2});
        }
        g.half_sites.reserve(g.lattice.size());
        for (const auto& j : g.lattice) g.half_sites.push_back({j[0] * step, j[1] * step});
        return g;
    }

    /// I' = ((2k + 1)^2 - 1) / 2.
    int half_count() const { return static_cast<int>(half_sites.size()) - 1; }
    std::size_t full_size() const { return 2 * half_sites.size() - 1; }
    Vec2 site(int i) const { return i >= 0 ? half_sites[std::size_t(i)] : -half_sites[std::size_t(-i)]; }
    /// 1 / (2 pi k^gamma)^2.
    double normalization() const {
        const double l = 2.0 * std::numbers::pi * std::pow(double(k), gamma);
        return 1.0 / (l * l);
    }
};

namespace detail {

// sin(y) / y with a four-term Taylor expansion near the removable singularity.
inline double sinc(double y) {
    if (std::abs(y) < 1e-4) {
        const double y2 = y * y;
        return 1.0 - y2 / 6.0 + y2 * y2 / 120.0 - y2 * y2 * y2 / 5040.0;
    }
    return std::sin(y) / y;
}

// Power series of the transform for |xi| * max|v| small, using the moments
// of a triangle fan: the integral of l^n over a triangle with values a, b, c of
// the linear form l at its corners is 2 A h_n(a, b, c) n! / (n + 2)!, and the
// n-th term of exp(-i l) carries (-i)^n / n!.
inline std::complex<double> indicator_ft_series(const Polygon& p, Vec2 xi) {
    constexpr int kTerms = 12;
    const auto& v = p.vertices();
    std::array<double, kTerms> moment{};  // sum over triangles of 2A h_n / (n + 2)!
    const double la = dot(xi, v[0]);
    for (std::size_t t = 1; t + 1 < v.size(); ++t) {
        const double twice_area = cross(v[t] - v[0], v[t + 1] - v[0]);
        const double lb = dot(xi, v[t]);
        const double lc = dot(xi, v[t + 1]);
        for (int n = 0; n < kTerms; ++n) {
            double h = 0.0;
            double ap = 1.0;
            for (int pa = 0; pa <= n; ++pa) {
                double hbc = 0.0;
                double bq = 1.0;
                for (int q = 0; q <= n - pa; ++q) {
                    hbc += bq * std::pow(lc, n - pa - q);
                    bq *= lb;
                }
                h += ap * hbc;
                ap *= la;
            }
            double fact = 1.0;
            for (int f = 2; f <= n + 2; ++f) fact *= f;
            moment[std::size_t(n)] += twice_area * h / fact;
        }
    }
    std::complex<double> sum = 0.0;
    std::complex<double> phase = 1.0;  // (-i)^n
    for (int n = 0; n < kTerms; ++n) {
        sum += phase * moment[std::size_t(n)];
        phase *= std::complex<double>(0.0, -1.0);
    }
    return sum;
}

}  // namespace detail

/// Integral over P of exp(-i xi . x), by the divergence theorem: each edge e
/// with midpoint m contributes (xi . nu_e) exp(-i xi . m) sinc(xi . e / 2), with
/// nu_e the outward normal scaled by the edge length, and the sum is scaled by
/// i / |xi|^2.
inline std::complex<double> indicator_ft(const Polygon& p, Vec2 xi) {
    if (p.is_degenerate()) return 0.0;
    const double r2 = dot(xi, xi);
    if (r2 == 0.0) return area(p);
    double radius = 0.0;
    for (const Vec2& v : p.vertices()) radius = std::max(radius, norm(v));
    if (std::sqrt(r2) * radius < 1e-2) return detail::indicator_ft_series(p, xi);

    const auto& v = p.vertices();
    std::complex<double> sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i];
        const Vec2 e = v[(i + 1) % v.size()] - a;
        const double flux = xi.x * e.y - xi.y * e.x;
        if (flux == 0.0) continue;
        const double phase = -dot(xi, a + e * 0.5);
        sum += flux * detail::sinc(0.5 * dot(xi, e)) * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return sum * std::complex<double>(0.0, 1.0 / r2);
}

/// |1_P^(xi)|^2, which equals the Fourier transform of g_P at xi. Squaring the
/// modulus (rather than summing squared parts) makes it bit-identical to the
/// product of two exact modulus samples.
inline double squared_modulus(const Polygon& p, Vec2 xi) {
    const double m = std::abs(indicator_ft(p, xi));
    return m * m;
}

/// Extends half-lattice values to the full index range -I'..I' by evenness;
/// entry i + I' holds index i.
inline std::vector<double> extend_even(std::span<const double> half) {
    if (half.empty()) throw ShapeError("empty half-lattice payload");
    const std::size_t h = half.size() - 1;
    std::vector<double> full(2 * h + 1);
    for (std::size_t i = 0; i <= h; ++i) {
        full[h + i] = half[i];
        full[h - i] = half[i];
    }
    return full;
}

/// The square partial sum (2 pi k^gamma)^-2 sum_j cos(z_j . x) values[j] over
/// j = -I'..I'. `values` is laid out as in extend_even.
inline double synthesize_partial_sum(const FrequencyGrid& grid, std::span<const double> values, Vec2 x) {
    if (values.size() != grid.full_size()) {
        throw ShapeError("partial sum expects " + std::to_string(grid.full_size()) + " values, got " +
                         std::to_string(values.size()));
    }
    const int h = grid.half_count();
    double s = 0.0;
    for (int i = -h; i <= h; ++i) s += std::cos(dot(grid.site(i), x)) * values[std::size_t(i + h)];
    return s * grid.normalization();
}

/// Evaluates the partial sum at every lattice site x = j / k of 2C0, where
/// z . x = (j_z . j_x) / k^(1 + gamma). The cosine separates per axis, so the
/// whole grid is C^T V C - S^T V S for the full lattice value array V.
inline SampleGrid synthesize_on_lattice(const FrequencyGrid& grid, std::span<const double> half_values) {
    if (half_values.size() != grid.half_sites.size()) {
        throw ShapeError("half-lattice payload has " + std::to_string(half_values.size()) + " values, expected " +
                         std::to_string(grid.half_sites.size()));
    }
    const int k = grid.k;
    const int side = 2 * k + 1;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(side, side);  // v(j1 + k, j2 + k)
    for (std::size_t i = 0; i < grid.lattice.size(); ++i) {
        const auto& j = grid.lattice[i];
        v(j[0] + k, j[1] + k) = half_values[i];
        v(-j[0] + k, -j[1] + k) = half_values[i];
    }
    const double theta = std::pow(double(k), -(1.0 + grid.gamma));
    Eigen::MatrixXd c(side, side);
    Eigen::MatrixXd s(side, side);
    for (int a = -k; a <= k; ++a) {
        for (int b = -k; b <= k; ++b) {
            const double t = double(a) * double(b) * theta;
            c(a + k, b + k) = std::cos(t);
            s(a + k, b + k) = std::sin(t);
        }
    }
    const Eigen::MatrixXd m = c.transpose() * v * c - s.transpose() * v * s;  // m(p1 + k, p2 + k)
    SampleGrid out = SampleGrid::lattice(k);
    const double norm_factor = grid.normalization();
    for (int p2 = -k; p2 <= k; ++p2) {
        for (int p1 = -k; p1 <= k; ++p1) out.values[out.index(p1, p2)] = m(p1 + k, p2 + k) * norm_factor;
    }
    return out;
}

/// Exact squared-modulus samples of P on the half lattice.
inline std::vector<double> exact_half_spectrum(const Polygon& p, const FrequencyGrid& grid) {
    std::vector<double> out(grid.half_sites.size());
    detail::parallel_for(out.size(), [&](std::size_t i) { out[i] = squared_modulus(p, grid.half_sites[i]); });
    return out;
}

/// Largest deviation, over the lattice sites of 2C0, between the partial sum of
/// the exact squared-modulus samples and the covariogram: the deterministic
/// truncation error of the Fourier synthesis.
inline double synthesis_residual(const Polygon& p, int k, double gamma) {
    require_in_unit_box(p);
    const FrequencyGrid grid = FrequencyGrid::make(k, gamma);
    const SampleGrid synth = synthesize_on_lattice(grid, exact_half_spectrum(p, grid));
    const SampleGrid exact = covariogram_grid(p, k);
    double r = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) r = std::max(r, std::abs(synth.values[i] - exact.values[i]));
    return r;
}

}  // namespace covrec
