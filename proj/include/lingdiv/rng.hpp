#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lingdiv/common.hpp"

namespace lingdiv {

// Deterministic sampling built on the raw mt19937_64 stream. The standard
// distributions are not bit-portable across library implementations, so
// every transform from engine output to sample lives here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased bound via rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Marsaglia-Tsang; the shape<1 branch boosts to shape+1 and rescales.
    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            double u = uniform01();
            if (u < 1e-300) u = 1e-300;
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    // Index into a cumulative-weight table (weights need not be normalized).
    std::size_t pick_cumulative(std::span<const double> cumulative) {
        const double total = cumulative.back();
        const double r = uniform01() * total;
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cumulative[mid] <= r)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

private:
    std::mt19937_64 engine_;
};

inline std::vector<double> cumulative_weights(std::span<const double> weights) {
    std::vector<double> cum(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cum[i] = acc;
    }
    return cum;
}

// Stream seed for an independent (seed, key) substream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    return splitmix64(seed ^ fnv1a64(key));
}

} // namespace lingdiv
