#pragma once

// First-stage estimators: brightness from covariogram differences, the
// Gasser-Mueller kernel smoother with its threshold hull, and the front ends
// that turn Fourier samples into covariogram estimates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "covrec/covariogram.hpp"
#include "covrec/errors.hpp"
#include "covrec/geometry.hpp"
#include "covrec/measurement.hpp"
#include "covrec/spectral.hpp"

namespace covrec {

enum class KernelKind { uniform_box, product_epanechnikov };

inline std::string to_string(KernelKind k) {
    return k == KernelKind::uniform_box ? "uniform_box" : "product_epanechnikov";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "uniform_box" || s == "box") return KernelKind::uniform_box;
    if (s == "product_epanechnikov" || s == "epanechnikov") return KernelKind::product_epanechnikov;
    throw ConfigurationError("unknown kernel '" + s + "'");
}

/// A product kernel phi on C0 with bandwidth epsilon and threshold delta.
/// Each factor is a density on [-1/2, 1/2]; its CDF gives the cell integrals
/// of the kernel estimator in closed form.
class KernelSpec {
public:
    KernelSpec(KernelKind kind, double epsilon, double delta) : kind_(kind), epsilon_(epsilon), delta_(delta) {
        if (!(epsilon > 0.0)) throw ConfigurationError("kernel bandwidth must be > 0");
        if (!(delta > 0.0)) throw ConfigurationError("kernel threshold must be > 0");
        // Composite Simpson is exact for the piecewise polynomials used here.
        constexpr int n = 2000;
        double s = density(-0.5) + density(0.5);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * density(-0.5 + double(i) / n);
        const double mass = s / (3.0 * n);
        if (std::abs(mass * mass - 1.0) > 1e-10) throw ConfigurationError("kernel does not integrate to 1");
    }

    /// eps_k = k^-alpha and delta_k = k^-(1/2 - 6 alpha)/4, the rate-optimal
    /// planar schedule; needs 0 < alpha < 1/12.
    static KernelSpec rate_schedule(int k, double alpha, KernelKind kind = KernelKind::uniform_box) {
        if (!(alpha > 0.0 && alpha < 1.0 / 12.0)) {
            throw ConfigurationError("rate schedule needs 0 < alpha < 1/12, got " + std::to_string(alpha));
        }
        const double kk = double(k);
        return {kind, std::pow(kk, -alpha), std::pow(kk, -(0.5 - 6.0 * alpha) / 4.0)};
    }

    /// eps_k = k^-alpha and delta_k = k^-(1 - alpha) log k, for noise with
    /// exponentially decaying tails.
    static KernelSpec bernstein_schedule(int k, double alpha, KernelKind kind = KernelKind::uniform_box) {
        if (!(alpha > 0.0 && alpha < 1.0 / 12.0)) {
            throw ConfigurationError("Bernstein schedule needs 0 < alpha < 1/12, got " + std::to_string(alpha));
        }
        if (k < 2) throw ConfigurationError("Bernstein schedule needs k >= 2");
        const double kk = double(k);
        return {kind, std::pow(kk, -alpha), std::pow(kk, -(1.0 - alpha)) * std::log(kk)};
    }

    KernelKind kind() const { return kind_; }
    double epsilon() const { return epsilon_; }
    double delta() const { return delta_; }

    /// One-dimensional factor of phi.
    double density(double t) const {
        if (t < -0.5 || t > 0.5) return 0.0;
        return kind_ == KernelKind::uniform_box ? 1.0 : 1.5 * (1.0 - 4.0 * t * t);
    }

    /// Its CDF.
    double cdf(double t) const {
        if (t <= -0.5) return 0.0;
        if (t >= 0.5) return 1.0;
        if (kind_ == KernelKind::uniform_box) return t + 0.5;
        return 1.5 * (t - 4.0 * t * t * t / 3.0) + 0.5;
    }

    /// phi(x) as a function on the plane.
    double phi(Vec2 x) const { return density(x.x) * density(x.y); }

    /// Integral over [c - h/2, c + h/2] of eps^-1 f((x - z) / eps) dz.
    double cell_weight(double x, double c, double h) const {
        return cdf((x - c + 0.5 * h) / epsilon_) - cdf((x - c - 0.5 * h) / epsilon_);
    }

private:
    KernelKind kind_;
    double epsilon_;
    double delta_;
};

struct BrightnessSample {
    Direction direction;
    double value = 0.0;
};

/// Views a cov_grid measurement set as a sample grid.
inline SampleGrid as_sample_grid(const MeasurementSet& ms) {
    ms.require(Design::cov_grid);
    SampleGrid g = SampleGrid::lattice(ms.k);
    g.values = ms.values;
    return g;
}

/// y_i = k^-2 sum_j k (M1_ij - M2_ij): the sample mean of the difference
/// quotients at o and u_i / k.
inline std::vector<BrightnessSample> brightness_from_cov_diffs(const MeasurementSet& ms) {
    ms.require(Design::cov_blaschke);
    const std::size_t reps = ms.repetitions();
    std::vector<BrightnessSample> out;
    out.reserve(ms.directions.size());
    for (std::size_t i = 0; i < ms.directions.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < reps; ++j) s += ms.blaschke_value(i, j, 0) - ms.blaschke_value(i, j, 1);
        out.push_back({ms.directions[i], double(ms.k) * s / double(reps)});
    }
    return out;
}

namespace detail {

// w(a, j) = integral over the cell of site j of the kernel factor centred at
// the evaluation coordinate a; rows are evaluation points, columns sites.
inline Eigen::MatrixXd kernel_weights(const KernelSpec& spec, int k, const std::vector<double>& points) {
    const int side = 2 * k + 1;
    const double h = 1.0 / k;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(Eigen::Index(points.size()), side);
    for (std::size_t a = 0; a < points.size(); ++a) {
        for (int j = -k; j <= k; ++j) w(Eigen::Index(a), j + k) = spec.cell_weight(points[a], double(j) * h, h);
    }
    return w;
}

// values as a matrix m(j2 + k, j1 + k).
inline Eigen::MatrixXd grid_matrix(const SampleGrid& g) {
    const int side = g.side();
    Eigen::MatrixXd m(side, side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) m(r, c) = g.values[std::size_t(r * side + c)];
    }
    return m;
}

}  // namespace detail

/// g_k(x) = sum_i M_i * integral over the cell of x_i of phi_eps(x - z) dz.
inline double kernel_estimate_at(const SampleGrid& g, const KernelSpec& spec, Vec2 x) {
    const int k = g.k;
    const double h = 1.0 / k;
    std::vector<double> w1(std::size_t(g.side())), w2(std::size_t(g.side()));
    for (int j = -k; j <= k; ++j) {
        w1[std::size_t(j + k)] = spec.cell_weight(x.x, double(j) * h, h);
        w2[std::size_t(j + k)] = spec.cell_weight(x.y, double(j) * h, h);
    }
    double s = 0.0;
    for (int j2 = -k; j2 <= k; ++j2) {
        const double b = w2[std::size_t(j2 + k)];
        if (b == 0.0) continue;
        double row = 0.0;
        for (int j1 = -k; j1 <= k; ++j1) row += w1[std::size_t(j1 + k)] * g.at(j1, j2);
        s += b * row;
    }
    return s;
}

inline double kernel_estimate_at(const MeasurementSet& ms, const KernelSpec& spec, Vec2 x) {
    return kernel_estimate_at(as_sample_grid(ms), spec, x);
}

/// g_k at every site of the measurement grid.
inline SampleGrid kernel_estimate_grid(const SampleGrid& g, const KernelSpec& spec) {
    std::vector<double> coords;
    for (int j = -g.k; j <= g.k; ++j) coords.push_back(double(j) / g.k);
    const Eigen::MatrixXd w = detail::kernel_weights(spec, g.k, coords);
    const Eigen::MatrixXd s = w * detail::grid_matrix(g) * w.transpose();
    SampleGrid out = SampleGrid::lattice(g.k);
    const int side = g.side();
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) out.values[std::size_t(r * side + c)] = s(r, c);
    }
    return out;
}

/// Q_k = (conv S_k - conv S_k) / 2 with S_k = {x_i : g_k(x_i) >= delta_k}.
/// Empty S_k gives the empty polygon.
inline Polygon threshold_difference_hull(const SampleGrid& g, const KernelSpec& spec) {
    const SampleGrid est = kernel_estimate_grid(g, spec);
    std::vector<Vec2> s;
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (est.values[i] >= spec.delta()) s.push_back(est.sites[i]);
    }
    if (s.empty()) return {};
    const Polygon hull = convex_hull(s);
    const auto& v = hull.empty() ? s : hull.vertices();
    std::vector<Vec2> d;
    d.reserve(v.size() * v.size());
    for (const Vec2& a : v) {
        for (const Vec2& b : v) d.push_back((a - b) * 0.5);
    }
    return convex_hull(std::move(d));
}

inline Polygon threshold_difference_hull(const MeasurementSet& ms, const KernelSpec& spec) {
    return threshold_difference_hull(as_sample_grid(ms), spec);
}

inline FrequencyGrid frequency_grid_of(const MeasurementSet& ms) {
    ms.require(Design::mod2);
    return FrequencyGrid::make(ms.k, *ms.gamma);
}

/// M_k(x_i) = (2 pi k^gamma)^-2 sum_j cos(z_j . x_i) g_j at every site of the
/// covariogram grid, with the samples extended evenly to negative indices.
inline SampleGrid phase_grid_estimates(const MeasurementSet& ms) {
    return synthesize_on_lattice(frequency_grid_of(ms), ms.values);
}

/// Per-site product of the two modulus copies: a mod2 set with the same
/// metadata.
inline MeasurementSet combine_mod_pairs(const MeasurementSet& ms) {
    ms.require(Design::mod_pair);
    MeasurementSet out{Design::mod2, ms.k, ms.gamma, {}, ms.noise, ms.seed, {}};
    out.values.resize(ms.values.size() / 2);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = ms.values[2 * i] * ms.values[2 * i + 1];
    return out;
}

/// y_i = (M_k(o) - M_k(h u_i)) / h from the synthesized covariogram.
inline std::vector<BrightnessSample> brightness_from_synthesis(const MeasurementSet& ms, double h,
                                                               const std::vector<Direction>& directions) {
    if (!(h > 0.0)) throw ConfigurationError("difference step h_k must be > 0");
    const FrequencyGrid grid = frequency_grid_of(ms);
    const std::vector<double> full = extend_even(ms.values);
    const double m0 = synthesize_partial_sum(grid, full, {0.0, 0.0});
    std::vector<BrightnessSample> out;
    out.reserve(directions.size());
    for (const Direction& u : directions) {
        out.push_back({u, (m0 - synthesize_partial_sum(grid, full, u.vec() * h)) / h});
    }
    return out;
}

}  // namespace covrec
