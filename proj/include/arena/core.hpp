// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace arena {

/// Raised when a value violates the invariants of its domain type.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An 8-bit raster, row-major, channels interleaved.
struct Frame {
    std::uint64_t frame_id = 0;
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Frame() = default;
    Frame(std::uint64_t id, int w, int h, int c);
    Frame(std::uint64_t id, int w, int h, int c, std::vector<std::uint8_t> data);

    std::size_t byte_size() const { return pixels.size(); }
    std::uint8_t at(int x, int y, int ch = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + ch];
    }
    /// Throws InvalidArgument unless dimensions and buffer size agree.
    void validate() const;

    friend bool operator==(const Frame&, const Frame&) = default;
};

struct GreyFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const GreyFrame&, const GreyFrame&) = default;
};

struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    bool valid() const;

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
    BBox bbox;
    double score = 1.0;
    int class_id = 1;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Square-patch tiling of a frame. Patch i sits at row i / cols, column i % cols.
class PatchGrid {
public:
    PatchGrid() = default;
    PatchGrid(int frame_width, int frame_height, int patch_size);

    int patch_size() const { return patch_; }
    int cols() const { return cols_; }
    int rows() const { return rows_; }
    int count() const { return rows_ * cols_; }
    int frame_width() const { return cols_ * patch_; }
    int frame_height() const { return rows_ * patch_; }

    int row_of(int index) const { return index / cols_; }
    int col_of(int index) const { return index % cols_; }
    int index_of(int row, int col) const { return row * cols_ + col; }

    friend bool operator==(const PatchGrid&, const PatchGrid&) = default;

private:
    int patch_ = 16;
    int cols_ = 0;
    int rows_ = 0;
};

/// Sorted, duplicate-free subset of patch indices of a grid.
class PoISet {
public:
    PoISet() = default;
    /// Sorts and deduplicates; throws if any index falls outside the grid.
    PoISet(PatchGrid grid, std::vector<int> indices);

    static PoISet all(const PatchGrid& grid);

    const PatchGrid& grid() const { return grid_; }
    const std::vector<int>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    bool contains(int index) const;
    double proportion() const;

    friend bool operator==(const PoISet&, const PoISet&) = default;

private:
    PatchGrid grid_;
    std::vector<int> indices_;
};

/// BT.601 luma with round-half-up; single-channel frames pass through.
GreyFrame to_grayscale(const Frame& frame);

/// Intersection over union; zero when the union has no area.
double iou(const BBox& a, const BBox& b);

}  // namespace arena
