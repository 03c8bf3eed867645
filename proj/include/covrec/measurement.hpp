#pragma once

// Simulated measurement designs with reproducible, zero-mean noise.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covrec/covariogram.hpp"
#include "covrec/errors.hpp"
#include "covrec/geometry.hpp"
#include "covrec/random.hpp"
#include "covrec/spectral.hpp"

namespace covrec {

enum class NoiseKind { none, gaussian, poisson, poisson_gaussian };

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::none: return "none";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::poisson: return "poisson";
        case NoiseKind::poisson_gaussian: return "poisson_gaussian";
    }
    return "none";
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "none") return NoiseKind::none;
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "poisson") return NoiseKind::poisson;
    if (s == "poisson_gaussian" || s == "poisson-gaussian") return NoiseKind::poisson_gaussian;
    throw ConfigurationError("unknown noise kind '" + s + "'");
}

/// Additive noise. Poisson counts are recentered, N = Pois(s v) / s - v, so
/// every kind has zero mean for a true value v >= 0.
struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double sigma = 0.0;    // Gaussian standard deviation
    double scale = 1e4;    // Poisson counts per unit value

    static NoiseModel none() { return {}; }
    static NoiseModel gaussian(double sigma) { return {NoiseKind::gaussian, sigma, 1e4}; }
    static NoiseModel poisson(double scale = 1e4) { return {NoiseKind::poisson, 0.0, scale}; }
    static NoiseModel poisson_gaussian(double scale, double sigma) {
        return {NoiseKind::poisson_gaussian, sigma, scale};
    }

    void validate() const {
        if (!(sigma >= 0.0)) throw ConfigurationError("noise sigma must be >= 0");
        if (!(scale > 0.0)) throw ConfigurationError("Poisson scale must be > 0");
    }

    bool is_none() const { return kind == NoiseKind::none || (kind == NoiseKind::gaussian && sigma == 0.0); }

    /// One noise draw for a measurement whose true value is `value`.
    double sample(double value, CounterStream& rng) const {
        double n = 0.0;
        if (kind == NoiseKind::poisson || kind == NoiseKind::poisson_gaussian) {
            const double v = std::max(value, 0.0);
            n += double(rng.poisson(scale * v)) / scale - v;
        }
        if ((kind == NoiseKind::gaussian || kind == NoiseKind::poisson_gaussian) && sigma > 0.0) {
            n += sigma * rng.normal();
        }
        return n;
    }

    double variance(double value) const {
        double var = 0.0;
        if (kind == NoiseKind::gaussian || kind == NoiseKind::poisson_gaussian) var += sigma * sigma;
        if (kind == NoiseKind::poisson || kind == NoiseKind::poisson_gaussian) var += std::max(value, 0.0) / scale;
        return var;
    }

    bool operator==(const NoiseModel&) const = default;
};

enum class Design : std::uint64_t { cov_grid = 1, cov_blaschke = 2, mod2 = 3, mod_pair = 4 };

inline std::string to_string(Design d) {
    switch (d) {
        case Design::cov_grid: return "cov_grid";
        case Design::cov_blaschke: return "cov_blaschke";
        case Design::mod2: return "mod2";
        case Design::mod_pair: return "mod_pair";
    }
    return "cov_grid";
}

inline Design design_from_string(const std::string& s) {
    if (s == "cov_grid" || s == "cov-grid") return Design::cov_grid;
    if (s == "cov_blaschke" || s == "cov-blaschke") return Design::cov_blaschke;
    if (s == "mod2") return Design::mod2;
    if (s == "mod_pair" || s == "mod") return Design::mod_pair;
    throw ConfigurationError("unknown measurement design '" + s + "'");
}

/// A batch of noisy measurements and the metadata needed to interpret it.
///
/// Payload layouts:
///   cov_grid     (2k+1)^2 values in SampleGrid order;
///   cov_blaschke index ((i * k^2) + j) * 2 + m for direction i, repetition j,
///                probe m (0: origin, 1: u_i / k);
///   mod2         one value per half-lattice site of FrequencyGrid(k, gamma);
///   mod_pair     index 2 * site + r, copies r = 0, 1 of the modulus.
struct MeasurementSet {
    Design design = Design::cov_grid;
    int k = 0;
    std::optional<double> gamma;
    std::vector<Direction> directions;
    NoiseModel noise;
    std::uint64_t seed = 0;
    std::vector<double> values;

    std::size_t repetitions() const { return static_cast<std::size_t>(k) * static_cast<std::size_t>(k); }

    std::size_t expected_size() const {
        const std::size_t side = 2 * static_cast<std::size_t>(k) + 1;
        switch (design) {
            case Design::cov_grid: return side * side;
            case Design::cov_blaschke: return directions.size() * repetitions() * 2;
            case Design::mod2: return (side * side - 1) / 2 + 1;
            case Design::mod_pair: return 2 * ((side * side - 1) / 2 + 1);
        }
        return 0;
    }

    void validate() const {
        if (k < 1) throw ShapeError("measurement set has k < 1");
        if ((design == Design::mod2 || design == Design::mod_pair) && !gamma) {
            throw ShapeError(to_string(design) + " measurement set lacks gamma");
        }
        if (design == Design::cov_blaschke && directions.size() < 2) {
            throw ShapeError("cov_blaschke measurement set needs at least two directions");
        }
        if (values.size() != expected_size()) {
            throw ShapeError(to_string(design) + " payload has " + std::to_string(values.size()) +
                             " values, expected " + std::to_string(expected_size()));
        }
    }

    void require(Design d) const {
        if (design != d) {
            throw ShapeError("expected a " + to_string(d) + " measurement set, got " + to_string(design));
        }
        validate();
    }

    double blaschke_value(std::size_t dir, std::size_t rep, int probe) const {
        return values[(dir * repetitions() + rep) * 2 + std::size_t(probe)];
    }
};

namespace detail {

inline CounterStream site_stream(std::uint64_t seed, Design d, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    return CounterStream(derive_key(seed, {static_cast<std::uint64_t>(d), a, b, c}));
}

inline void require_spanning(const std::vector<Direction>& dirs) {
    if (dirs.size() < 2) throw ConfigurationError("need at least two directions");
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t j = i + 1; j < dirs.size(); ++j) {
            if (std::abs(cross(dirs[i].vec(), dirs[j].vec())) < 1e-12) {
                throw ConfigurationError("directions " + std::to_string(i) + " and " + std::to_string(j) +
                                         " are parallel");
            }
        }
    }
}

}  // namespace detail

/// M_i = g_P(x_i) + N_i on 2C0 ∩ (1/k)Z^2.
inline MeasurementSet gen_cov_grid(const Polygon& p, int k, const NoiseModel& noise, std::uint64_t seed) {
    noise.validate();
    const SampleGrid g = covariogram_grid(p, k);
    MeasurementSet ms{Design::cov_grid, k, std::nullopt, {}, noise, seed, g.values};
    if (!noise.is_none()) {
        for (std::size_t i = 0; i < ms.values.size(); ++i) {
            auto rng = detail::site_stream(seed, Design::cov_grid, i);
            ms.values[i] += noise.sample(g.values[i], rng);
        }
    }
    return ms;
}

/// k^2 repeated probes of g_P at o and at u_i / k for every direction u_i.
inline MeasurementSet gen_cov_blaschke(const Polygon& p, int k, const std::vector<Direction>& directions,
                                       const NoiseModel& noise, std::uint64_t seed) {
    if (k < 1) throw ConfigurationError("k must be positive");
    require_in_unit_box(p);
    detail::require_spanning(directions);
    noise.validate();
    MeasurementSet ms{Design::cov_blaschke, k, std::nullopt, directions, noise, seed, {}};
    const std::size_t reps = ms.repetitions();
    ms.values.resize(directions.size() * reps * 2);
    const double g0 = covariogram_at(p, {0.0, 0.0});
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const double gi = covariogram_at(p, directions[i].vec() / double(k));
        for (std::size_t j = 0; j < reps; ++j) {
            for (int m = 0; m < 2; ++m) {
                const double truth = m == 0 ? g0 : gi;
                double v = truth;
                if (!noise.is_none()) {
                    auto rng = detail::site_stream(seed, Design::cov_blaschke, i, j, std::uint64_t(m));
                    v += noise.sample(truth, rng);
                }
                ms.values[(i * reps + j) * 2 + std::size_t(m)] = v;
            }
        }
    }
    return ms;
}

/// Noisy |1_P^(z)|^2 at the half-lattice frequencies {o} ∪ (1/k^gamma) Z_k(+).
inline MeasurementSet gen_mod2(const Polygon& p, int k, double gamma, const NoiseModel& noise,
                               std::uint64_t seed) {
    require_in_unit_box(p);
    noise.validate();
    const FrequencyGrid grid = FrequencyGrid::make(k, gamma);
    MeasurementSet ms{Design::mod2, k, gamma, {}, noise, seed, exact_half_spectrum(p, grid)};
    if (!noise.is_none()) {
        for (std::size_t i = 0; i < ms.values.size(); ++i) {
            auto rng = detail::site_stream(seed, Design::mod2, i);
            ms.values[i] += noise.sample(ms.values[i], rng);
        }
    }
    return ms;
}

/// Two independent noisy samples of |1_P^(z)| per half-lattice frequency.
inline MeasurementSet gen_mod_pair(const Polygon& p, int k, double gamma, const NoiseModel& noise,
                                   std::uint64_t seed) {
    require_in_unit_box(p);
    noise.validate();
    const FrequencyGrid grid = FrequencyGrid::make(k, gamma);
    MeasurementSet ms{Design::mod_pair, k, gamma, {}, noise, seed, {}};
    ms.values.resize(2 * grid.half_sites.size());
    for (std::size_t i = 0; i < grid.half_sites.size(); ++i) {
        const double modulus = std::abs(indicator_ft(p, grid.half_sites[i]));
        for (std::uint64_t r = 0; r < 2; ++r) {
            double v = modulus;
            if (!noise.is_none()) {
                auto rng = detail::site_stream(seed, Design::mod_pair, i, r);
                v += noise.sample(modulus, rng);
            }
            ms.values[2 * i + r] = v;
        }
    }
    return ms;
}

}  // namespace covrec
