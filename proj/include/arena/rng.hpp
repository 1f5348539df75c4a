// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace arena {

/// Portable xorshift64* generator.
///
/// Seeding runs the user seed through one splitmix64 step so that seed 0 and
/// nearby seeds yield well-separated, non-zero states. Every consumer in the
/// project (patch sampling, oracle detector, weight init, synthetic scenes)
/// draws from this generator so results are reproducible across platforms.
///
///   state' = state ^ (state >> 12); state' ^= state' << 25; state' ^= state' >> 27
///   output = state' * 0x2545F4914F6CDD1D
class Xorshift64Star {
public:
    using result_type = std::uint64_t;

    explicit Xorshift64Star(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        state_ = z != 0 ? z : 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_ = 0;
};

}  // namespace arena
