// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "arena/core.hpp"
#include "arena/rng.hpp"

namespace arena::test {

inline Frame random_frame(std::uint64_t id, int w, int h, int c, Xorshift64Star& rng) {
    Frame f(id, w, h, c);
    for (auto& px : f.pixels) px = static_cast<std::uint8_t>(rng.below(256));
    return f;
}

inline Frame random_frame(std::uint64_t id, int w, int h, int c, std::uint64_t seed) {
    Xorshift64Star rng(seed);
    return random_frame(id, w, h, c, rng);
}

}  // namespace arena::test
