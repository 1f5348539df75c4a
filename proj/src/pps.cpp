// SPDX-License-Identifier: Apache-2.0
#include "arena/pps.hpp"

#include <algorithm>
#include <cmath>

#include "arena/patch_grid.hpp"

namespace arena {

void PpsConfig::validate() const {
    if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) throw InvalidArgument("sampling rate must be in (0, 1]");
    if (margin < 0) throw InvalidArgument("margin must be non-negative");
}

std::size_t sample_count(std::size_t n, double rate) {
    // 0.171 * 1000 evaluates to 171.00000000000003; snap before the ceiling.
    const double exact = rate * static_cast<double>(n);
    const double snapped = std::round(exact);
    const double v = std::abs(exact - snapped) < 1e-9 ? snapped : std::ceil(exact);
    return std::min(n, static_cast<std::size_t>(v));
}

PoISet random_sample(const PoISet& region, double rate, Xorshift64Star& rng) {
    std::vector<int> pool = region.indices();
    const std::size_t k = sample_count(pool.size(), rate);
    // Partial Fisher-Yates over the sorted region.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return PoISet(region.grid(), std::move(pool));
}

PoISet sampling_region(const Frame& prev, const Frame& curr, std::span<const BBox> prev_boxes,
                       const PatchGrid& grid, const PpsConfig& cfg) {
    std::vector<bool> in_region(static_cast<std::size_t>(grid.count()), false);
    for (const BBox& b : prev_boxes) {
        if (!b.valid()) throw InvalidArgument("invalid bounding box");
        const GridRect r = expand_poi(bbox_to_poi(b, grid.patch_size()), cfg.margin, grid.frame_width(),
                                      grid.frame_height(), grid.patch_size());
        const PoISet covered = rect_to_indices(r, grid);
        for (int i : covered.indices()) in_region[static_cast<std::size_t>(i)] = true;
    }
    const PatchDiffMap diff = patch_pixel_diff(to_grayscale(prev), to_grayscale(curr), grid);
    std::vector<int> idx;
    for (int i = 0; i < grid.count(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (in_region[u] || diff.sums[u] > cfg.diff_threshold) idx.push_back(i);
    }
    return PoISet(grid, std::move(idx));
}

PoISet sample_pois(const Frame& prev, const Frame& curr, std::span<const BBox> prev_boxes,
                   const PatchGrid& grid, const PpsConfig& cfg, Xorshift64Star& rng) {
    cfg.validate();
    return random_sample(sampling_region(prev, curr, prev_boxes, grid, cfg), cfg.sampling_rate, rng);
}

}  // namespace arena
