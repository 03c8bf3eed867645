#pragma once

// Counter-based random streams. A stream is a pure function of its key, so
// every (seed, design, site, repetition, copy) tuple sees the same numbers on
// every platform and under every evaluation order.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace covrec {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives a stream key from a seed and a list of integer labels.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t key = splitmix64(seed);
    for (std::uint64_t l : labels) key = splitmix64(key ^ splitmix64(l + 0x632BE59BD9B4E019ULL));
    return key;
}

class CounterStream {
public:
    explicit CounterStream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by Box-Muller, one pair of uniforms per draw.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Poisson(mean): multiplication method for small means, Hoermann's PTRS
    /// transformed rejection otherwise.
    std::int64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 12.0) {
            const double limit = std::exp(-mean);
            std::int64_t k = 0;
            double prod = uniform();
            while (prod > limit) {
                ++k;
                prod *= uniform();
            }
            return k;
        }
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::abs(u);
            const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
                -mean + k * loglam - std::lgamma(k + 1.0)) {
                return static_cast<std::int64_t>(k);
            }
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace covrec
