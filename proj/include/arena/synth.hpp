// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arena/core.hpp"
#include "arena/evaluation.hpp"

namespace arena {

struct SynthObject {
    int x = 0, y = 0;      // top-left at frame 0
    int w = 16, h = 16;
    int vx = 0, vy = 0;    // pixels per frame, reflected at the frame border
    int class_id = 1;
};

struct SynthSpec {
    int width = 64;
    int height = 64;
    int channels = 3;
    int frames = 10;
    std::uint64_t start_id = 1;
    std::uint64_t seed = 0;
    /// Uniform background at this level instead of seeded noise.
    std::optional<std::uint8_t> flat_background;
    std::vector<SynthObject> objects;
};

struct SynthSequence {
    std::vector<Frame> frames;
    AnnotationStore annotations;
};

/// Textured background with textured moving rectangles; GT boxes are
/// (x, y, x + w, y + h) for every frame.
SynthSequence synth_sequence(const SynthSpec& spec);

}  // namespace arena
