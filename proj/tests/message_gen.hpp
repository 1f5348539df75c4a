// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "arena/message.hpp"
#include "arena/rng.hpp"

namespace arena::test {

/// Random well-formed message of any type.
inline Message random_message(Xorshift64Star& rng) {
    auto u16 = [&] { return static_cast<std::uint16_t>(rng.below(65536)); };
    auto f32 = [&] { return static_cast<float>(rng.uniform(-1e4, 1e4)); };
    switch (rng.below(5)) {
        case 0:
            return HelloMsg{u16(), u16(), static_cast<std::uint8_t>(rng.below(256)), u16(), rng.next()};
        case 1: {
            KeyframeMsg k{rng.next(), static_cast<std::uint16_t>(1 + rng.below(24)),
                          static_cast<std::uint16_t>(1 + rng.below(24)), static_cast<std::uint8_t>(rng.below(2) ? 3 : 1), {}};
            k.pixels.resize(static_cast<std::size_t>(k.width) * k.height * k.channels);
            for (auto& p : k.pixels) p = static_cast<std::uint8_t>(rng.below(256));
            return k;
        }
        case 2: {
            NonKeyframeMsg n{rng.next(), {}, {}};
            const auto count = rng.below(6);
            const auto block = 1 + rng.below(40);
            for (std::uint64_t i = 0; i < count; ++i) {
                n.indices.push_back(static_cast<std::uint32_t>(rng.next()));
                std::vector<std::uint8_t> b(block);
                for (auto& p : b) p = static_cast<std::uint8_t>(rng.below(256));
                n.patches.push_back(std::move(b));
            }
            return n;
        }
        case 3: {
            ResultMsg r{rng.next(), {}};
            const auto count = rng.below(6);
            for (std::uint64_t i = 0; i < count; ++i) r.detections.push_back({f32(), f32(), f32(), f32(), f32(), u16()});
            return r;
        }
        default:
            return ByeMsg{};
    }
}

}  // namespace arena::test
