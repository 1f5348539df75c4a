// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "arena/core.hpp"
#include "arena/rng.hpp"

namespace arena {

struct PpsConfig {
    double sampling_rate = 0.9;   // p, in (0, 1]
    std::uint32_t diff_threshold = 200;  // F
    int margin = 1;               // m, in patches
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Deterministic uniform subset of `region` of size ceil(p * |region|).
PoISet random_sample(const PoISet& region, double rate, Xorshift64Star& rng);

/// Sampling region before the random draw: expanded previous boxes plus
/// every patch whose greyscale difference sum exceeds F.
PoISet sampling_region(const Frame& prev, const Frame& curr, std::span<const BBox> prev_boxes,
                       const PatchGrid& grid, const PpsConfig& cfg);

/// Probability-based patch sampling for the current frame.
PoISet sample_pois(const Frame& prev, const Frame& curr, std::span<const BBox> prev_boxes,
                   const PatchGrid& grid, const PpsConfig& cfg, Xorshift64Star& rng);

/// ceil(rate * n), tolerant of representation error in rate * n.
std::size_t sample_count(std::size_t n, double rate);

}  // namespace arena
