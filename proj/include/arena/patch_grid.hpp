// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arena/core.hpp"

namespace arena {

/// Grid-aligned pixel rectangle, half-open: [x1, x2) x [y1, y2).
struct GridRect {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool contains(const GridRect& o) const {
        return x1 <= o.x1 && y1 <= o.y1 && o.x2 <= x2 && o.y2 <= y2;
    }
    friend bool operator==(const GridRect&, const GridRect&) = default;
};

struct PatchDiffMap {
    PatchGrid grid;
    std::vector<std::uint32_t> sums;
};

/// One block per patch, P*P*C bytes each, row-major within the patch.
using PatchBlock = std::vector<std::uint8_t>;

std::vector<PatchBlock> patchify(const Frame& frame, const PatchGrid& grid);

/// Extracts only the listed patches, in the order given.
std::vector<PatchBlock> extract_patches(const Frame& frame, const PatchGrid& grid,
                                        std::span<const int> indices);

/// Inverse of patchify.
Frame unpatchify(const std::vector<PatchBlock>& blocks, const PatchGrid& grid, int channels,
                 std::uint64_t frame_id = 0);

/// Snaps a box outward onto the grid. The max edges always advance one full
/// patch past floor(x2 / P), even when x2 already sits on a grid line.
GridRect bbox_to_poi(const BBox& b, int patch_size);

/// Moves every edge outward by `margin` patches, clamped to the frame.
GridRect expand_poi(const GridRect& r, int margin, int frame_w, int frame_h, int patch_size);

/// Patches whose area intersects the interior of `r`.
PoISet rect_to_indices(const GridRect& r, const PatchGrid& grid);

/// Per-patch sum of absolute greyscale differences.
PatchDiffMap patch_pixel_diff(const GreyFrame& prev, const GreyFrame& curr, const PatchGrid& grid);

}  // namespace arena
