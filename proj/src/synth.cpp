// SPDX-License-Identifier: Apache-2.0
#include "arena/synth.hpp"

#include "arena/rng.hpp"

namespace arena {
namespace {

// Advances one axis by v with reflection inside [0, limit].
void bounce(int& pos, int& v, int limit) {
    pos += v;
    for (int guard = 0; guard < 4 && (pos < 0 || pos > limit); ++guard) {
        if (pos < 0) pos = -pos;
        if (pos > limit) pos = 2 * limit - pos;
        v = -v;
    }
    if (pos < 0 || pos > limit) pos = pos < 0 ? 0 : limit;
}

}  // namespace

SynthSequence synth_sequence(const SynthSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0 || spec.frames < 0) throw InvalidArgument("invalid synthetic frame size");
    if (spec.channels != 1 && spec.channels != 3) throw InvalidArgument("synthetic channels must be 1 or 3");
    for (const auto& o : spec.objects) {
        if (o.w <= 0 || o.h <= 0 || o.w > spec.width || o.h > spec.height)
            throw InvalidArgument("synthetic object larger than the frame");
        if (o.x < 0 || o.y < 0 || o.x + o.w > spec.width || o.y + o.h > spec.height)
            throw InvalidArgument("synthetic object starts outside the frame");
    }

    Xorshift64Star rng(spec.seed);
    const std::size_t plane = static_cast<std::size_t>(spec.width) * spec.height * spec.channels;
    std::vector<std::uint8_t> background(plane);
    for (auto& v : background)
        v = spec.flat_background ? *spec.flat_background : static_cast<std::uint8_t>(rng.below(256));

    std::vector<std::vector<std::uint8_t>> textures;
    for (const auto& o : spec.objects) {
        std::vector<std::uint8_t> t(static_cast<std::size_t>(o.w) * o.h * spec.channels);
        for (auto& v : t) v = static_cast<std::uint8_t>(rng.below(256));
        textures.push_back(std::move(t));
    }

    std::vector<SynthObject> state = spec.objects;
    SynthSequence seq;
    seq.frames.reserve(static_cast<std::size_t>(spec.frames));
    for (int f = 0; f < spec.frames; ++f) {
        const std::uint64_t id = spec.start_id + static_cast<std::uint64_t>(f);
        Frame frame(id, spec.width, spec.height, spec.channels, background);
        for (std::size_t k = 0; k < state.size(); ++k) {
            const auto& o = state[k];
            for (int y = 0; y < o.h; ++y) {
                const std::size_t dst = (static_cast<std::size_t>(o.y + y) * spec.width + o.x) * spec.channels;
                const std::size_t src = static_cast<std::size_t>(y) * o.w * spec.channels;
                std::copy_n(textures[k].begin() + static_cast<std::ptrdiff_t>(src),
                            static_cast<std::size_t>(o.w) * spec.channels,
                            frame.pixels.begin() + static_cast<std::ptrdiff_t>(dst));
            }
            seq.annotations.add(id, GroundTruth{BBox{double(o.x), double(o.y), double(o.x + o.w), double(o.y + o.h)},
                                                o.class_id});
        }
        seq.frames.push_back(std::move(frame));
        for (auto& o : state) {
            bounce(o.x, o.vx, spec.width - o.w);
            bounce(o.y, o.vy, spec.height - o.h);
        }
    }
    return seq;
}

}  // namespace arena
