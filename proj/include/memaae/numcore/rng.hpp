#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace memaae::nc {

// Seeded generator with platform-independent derived distributions.
//
// std::mt19937_64 fixes the raw bit stream, but the standard library
// distributions are implementation-defined, so uniforms and normals are
// derived here by hand: uniform = top 53 bits scaled to [0,1), normal =
// Box-Muller on two uniforms (the sine branch is discarded).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace memaae::nc
