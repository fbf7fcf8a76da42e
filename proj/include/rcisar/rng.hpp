#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "rcisar/common.hpp"

namespace rcisar {

/// Deterministic RNG used everywhere in the simulator. All distributions are
/// generated from explicit formulas on top of mt19937_64 so that a given seed
/// produces the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t raw() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + uniform() * (b - a); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (cosine branch only; one draw per pair
    /// of uniforms keeps the stream layout obvious).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    /// Circular complex Gaussian with E|n|^2 = power; one Box-Muller pair
    /// feeds both quadratures.
    cd circular_gaussian(double power) {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-std::log(u1) * power);
        return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
    }

    /// Binomial(n, p) as a sum of Bernoulli trials; n stays small here.
    int binomial(int n, double p) {
        int c = 0;
        for (int i = 0; i < n; ++i) c += bernoulli(p) ? 1 : 0;
        return c;
    }

private:
    std::mt19937_64 gen_;
};

/// Fixed seed-splitting scheme: master seed -> named stream -> per-frame seed.
/// FNV-1a over the stream tag, then splitmix64 mixing. No OS entropy anywhere.
inline uint64_t derive_seed(uint64_t master, std::string_view stream, uint64_t index = 0) {
    uint64_t h = 1469598103934665603ull;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    uint64_t z = master ^ h ^ (index * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull);
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace rcisar
