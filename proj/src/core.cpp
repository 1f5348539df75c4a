// SPDX-License-Identifier: Apache-2.0
#include "arena/core.hpp"

#include <algorithm>
#include <cmath>

namespace arena {

Frame::Frame(std::uint64_t id, int w, int h, int c)
    : frame_id(id), width(w), height(h), channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, 0) {
    validate();
}

Frame::Frame(std::uint64_t id, int w, int h, int c, std::vector<std::uint8_t> data)
    : frame_id(id), width(w), height(h), channels(c), pixels(std::move(data)) {
    validate();
}

void Frame::validate() const {
    if (width <= 0 || height <= 0) throw InvalidArgument("frame dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidArgument("frame channels must be 1 or 3");
    if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
        throw InvalidArgument("frame pixel buffer does not match width*height*channels");
}

bool BBox::valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 <= x2 && y1 <= y2;
}

PatchGrid::PatchGrid(int frame_width, int frame_height, int patch_size) : patch_(patch_size) {
    if (patch_size <= 0) throw InvalidArgument("patch size must be positive");
    if (frame_width <= 0 || frame_height <= 0) throw InvalidArgument("frame dimensions must be positive");
    if (frame_width % patch_size != 0 || frame_height % patch_size != 0)
        throw InvalidArgument("frame dimensions must be divisible by the patch size");
    cols_ = frame_width / patch_size;
    rows_ = frame_height / patch_size;
}

PoISet::PoISet(PatchGrid grid, std::vector<int> indices) : grid_(grid), indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    if (!indices_.empty() && (indices_.front() < 0 || indices_.back() >= grid_.count()))
        throw InvalidArgument("patch index out of range");
}

PoISet PoISet::all(const PatchGrid& grid) {
    std::vector<int> idx(static_cast<std::size_t>(grid.count()));
    for (int i = 0; i < grid.count(); ++i) idx[static_cast<std::size_t>(i)] = i;
    return PoISet(grid, std::move(idx));
}

bool PoISet::contains(int index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
}

double PoISet::proportion() const {
    return grid_.count() == 0 ? 0.0 : static_cast<double>(indices_.size()) / grid_.count();
}

GreyFrame to_grayscale(const Frame& frame) {
    GreyFrame out{frame.width, frame.height, {}};
    if (frame.channels == 1) {
        out.pixels = frame.pixels;
        return out;
    }
    const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
    out.pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned r = frame.pixels[3 * i];
        const unsigned g = frame.pixels[3 * i + 1];
        const unsigned b = frame.pixels[3 * i + 2];
        // Integer form of round(0.299R + 0.587G + 0.114B), exact half-up.
        const unsigned luma = (299 * r + 587 * g + 114 * b + 500) / 1000;
        out.pixels[i] = static_cast<std::uint8_t>(std::min(luma, 255u));
    }
    return out;
}

double iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return inter / uni;
}

}  // namespace arena
