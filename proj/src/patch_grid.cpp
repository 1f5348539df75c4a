// SPDX-License-Identifier: Apache-2.0
#include "arena/patch_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace arena {
namespace {

void check_dims(int w, int h, const PatchGrid& grid) {
    if (w != grid.frame_width() || h != grid.frame_height())
        throw InvalidArgument("frame dimensions do not match the patch grid");
}

void copy_patch(const Frame& frame, const PatchGrid& grid, int index, std::uint8_t* out) {
    const int p = grid.patch_size();
    const std::size_t row_bytes = static_cast<std::size_t>(p) * frame.channels;
    const int x0 = grid.col_of(index) * p;
    const int y0 = grid.row_of(index) * p;
    for (int y = 0; y < p; ++y) {
        const std::size_t src = (static_cast<std::size_t>(y0 + y) * frame.width + x0) * frame.channels;
        std::memcpy(out + y * row_bytes, frame.pixels.data() + src, row_bytes);
    }
}

}  // namespace

std::vector<PatchBlock> patchify(const Frame& frame, const PatchGrid& grid) {
    check_dims(frame.width, frame.height, grid);
    std::vector<int> all(static_cast<std::size_t>(grid.count()));
    for (int i = 0; i < grid.count(); ++i) all[static_cast<std::size_t>(i)] = i;
    return extract_patches(frame, grid, all);
}

std::vector<PatchBlock> extract_patches(const Frame& frame, const PatchGrid& grid,
                                        std::span<const int> indices) {
    check_dims(frame.width, frame.height, grid);
    const std::size_t block = static_cast<std::size_t>(grid.patch_size()) * grid.patch_size() * frame.channels;
    std::vector<PatchBlock> out;
    out.reserve(indices.size());
    for (int idx : indices) {
        if (idx < 0 || idx >= grid.count()) throw InvalidArgument("patch index out of range");
        PatchBlock b(block);
        copy_patch(frame, grid, idx, b.data());
        out.push_back(std::move(b));
    }
    return out;
}

Frame unpatchify(const std::vector<PatchBlock>& blocks, const PatchGrid& grid, int channels,
                 std::uint64_t frame_id) {
    if (blocks.size() != static_cast<std::size_t>(grid.count()))
        throw InvalidArgument("block count does not match the patch grid");
    Frame frame(frame_id, grid.frame_width(), grid.frame_height(), channels);
    const int p = grid.patch_size();
    const std::size_t row_bytes = static_cast<std::size_t>(p) * channels;
    for (int i = 0; i < grid.count(); ++i) {
        const auto& b = blocks[static_cast<std::size_t>(i)];
        if (b.size() != row_bytes * p) throw InvalidArgument("patch block size mismatch");
        const int x0 = grid.col_of(i) * p;
        const int y0 = grid.row_of(i) * p;
        for (int y = 0; y < p; ++y) {
            const std::size_t dst = (static_cast<std::size_t>(y0 + y) * frame.width + x0) * channels;
            std::memcpy(frame.pixels.data() + dst, b.data() + y * row_bytes, row_bytes);
        }
    }
    return frame;
}

GridRect bbox_to_poi(const BBox& b, int patch_size) {
    const double p = patch_size;
    auto snap = [p](double v) { return static_cast<int>(std::floor(v / p)); };
    return GridRect{snap(b.x1) * patch_size, snap(b.y1) * patch_size,
                    (snap(b.x2) + 1) * patch_size, (snap(b.y2) + 1) * patch_size};
}

GridRect expand_poi(const GridRect& r, int margin, int frame_w, int frame_h, int patch_size) {
    const int d = margin * patch_size;
    return GridRect{std::clamp(r.x1 - d, 0, frame_w), std::clamp(r.y1 - d, 0, frame_h),
                    std::clamp(r.x2 + d, 0, frame_w), std::clamp(r.y2 + d, 0, frame_h)};
}

PoISet rect_to_indices(const GridRect& r, const PatchGrid& grid) {
    const int p = grid.patch_size();
    const int c0 = std::max(0, r.x1 / p);
    const int r0 = std::max(0, r.y1 / p);
    // Ceiling division: a patch counts when it overlaps the open interior.
    const int c1 = std::min(grid.cols(), (std::max(r.x2, 0) + p - 1) / p);
    const int r1 = std::min(grid.rows(), (std::max(r.y2, 0) + p - 1) / p);
    std::vector<int> idx;
    for (int row = r0; row < r1; ++row)
        for (int col = c0; col < c1; ++col) idx.push_back(grid.index_of(row, col));
    return PoISet(grid, std::move(idx));
}

PatchDiffMap patch_pixel_diff(const GreyFrame& prev, const GreyFrame& curr, const PatchGrid& grid) {
    check_dims(prev.width, prev.height, grid);
    check_dims(curr.width, curr.height, grid);
    PatchDiffMap out{grid, std::vector<std::uint32_t>(static_cast<std::size_t>(grid.count()), 0)};
    const int p = grid.patch_size();
    for (int y = 0; y < curr.height; ++y) {
        const int row = y / p;
        for (int x = 0; x < curr.width; ++x) {
            const int d = std::abs(static_cast<int>(curr.at(x, y)) - static_cast<int>(prev.at(x, y)));
            out.sums[static_cast<std::size_t>(grid.index_of(row, x / p))] += static_cast<std::uint32_t>(d);
        }
    }
    return out;
}

}  // namespace arena
