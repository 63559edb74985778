#pragma once

// Seeded random streams.
//
// Every consumer derives its own stream from (master seed, stream id) so that
// results do not depend on how work is spread over threads. Variates are
// produced from raw 64-bit engine output with fixed formulas, which keeps them
// identical across standard-library implementations.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace spaced {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t seed = splitmix64(master);
    for (auto component : path) seed = splitmix64(seed ^ splitmix64(component + 0x632BE59BD9B4E019ULL));
    return seed;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= limit) return x % bound;
        }
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    double normal() {
        // Box-Muller; one value per call keeps the stream position predictable.
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace spaced
