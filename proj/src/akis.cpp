// SPDX-License-Identifier: Apache-2.0
#include "arena/akis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace arena {

double FlowVector::magnitude() const { return std::hypot(static_cast<double>(dx), static_cast<double>(dy)); }

void AkisConfig::validate() const {
    if (k_lower < 1 || k_lower > k_upper) throw InvalidArgument("AKIS bounds must satisfy 1 <= k_lower <= k_upper");
    if (block_size <= 0) throw InvalidArgument("flow block size must be positive");
    if (search_radius < 0) throw InvalidArgument("flow search radius must be non-negative");
    if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
}

namespace {

std::uint64_t block_sad(const GreyFrame& a, const GreyFrame& b, int ax, int ay, int bx, int by, int size,
                        std::uint64_t bound) {
    std::uint64_t sad = 0;
    for (int y = 0; y < size; ++y) {
        const std::uint8_t* ra = &a.pixels[static_cast<std::size_t>(ay + y) * a.width + ax];
        const std::uint8_t* rb = &b.pixels[static_cast<std::size_t>(by + y) * b.width + bx];
        for (int x = 0; x < size; ++x) sad += static_cast<std::uint64_t>(std::abs(int(ra[x]) - int(rb[x])));
        if (sad > bound) return sad;
    }
    return sad;
}

// Lexicographic tie-break key: (|v|^2, dy, dx).
bool better_tie(int dx, int dy, const FlowVector& cur) {
    const int m = dx * dx + dy * dy;
    const int mc = cur.dx * cur.dx + cur.dy * cur.dy;
    if (m != mc) return m < mc;
    if (dy != cur.dy) return dy < cur.dy;
    return dx < cur.dx;
}

}  // namespace

FlowField BlockMatchingFlow::estimate(const GreyFrame& a, const GreyFrame& b, const AkisConfig& cfg) const {
    if (a.width != b.width || a.height != b.height) throw InvalidArgument("flow frames differ in size");
    const int bs = cfg.block_size;
    if (bs <= 0 || a.width % bs != 0 || a.height % bs != 0)
        throw InvalidArgument("frame dimensions must be divisible by the flow block size");
    FlowField field{bs, a.height / bs, a.width / bs, {}};
    field.vectors.resize(static_cast<std::size_t>(field.rows * field.cols));
    const int r = cfg.search_radius;
    for (int row = 0; row < field.rows; ++row) {
        for (int col = 0; col < field.cols; ++col) {
            const int x0 = col * bs;
            const int y0 = row * bs;
            FlowVector best{};
            std::uint64_t best_sad = block_sad(a, b, x0, y0, x0, y0, bs, std::numeric_limits<std::uint64_t>::max());
            for (int dy = -r; dy <= r; ++dy) {
                const int by = y0 + dy;
                if (by < 0 || by + bs > b.height) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int bx = x0 + dx;
                    if (bx < 0 || bx + bs > b.width) continue;
                    const std::uint64_t sad = block_sad(a, b, x0, y0, bx, by, bs, best_sad);
                    if (sad < best_sad || (sad == best_sad && better_tie(dx, dy, best))) {
                        best_sad = sad;
                        best = FlowVector{dx, dy};
                    }
                }
            }
            field.vectors[static_cast<std::size_t>(row * field.cols + col)] = best;
        }
    }
    return field;
}

FlowField estimate_flow(const GreyFrame& a, const GreyFrame& b, const AkisConfig& cfg) {
    return BlockMatchingFlow{}.estimate(a, b, cfg);
}

std::vector<bool> box_mask(const FlowField& flow, std::span<const BBox> boxes) {
    std::vector<bool> mask(static_cast<std::size_t>(flow.rows * flow.cols), false);
    const double bs = flow.block_size;
    for (const BBox& b : boxes) {
        if (!b.valid() || b.area() <= 0) continue;
        // Block [c*bs, (c+1)*bs) intersects the open box (x1, x2) when c*bs < x2 and (c+1)*bs > x1.
        const int c0 = std::max(0, static_cast<int>(std::floor(b.x1 / bs)));
        const int r0 = std::max(0, static_cast<int>(std::floor(b.y1 / bs)));
        const int c1 = std::min(flow.cols, static_cast<int>(std::ceil(b.x2 / bs)));
        const int r1 = std::min(flow.rows, static_cast<int>(std::ceil(b.y2 / bs)));
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) mask[static_cast<std::size_t>(r * flow.cols + c)] = true;
    }
    return mask;
}

double mean_box_flow(const FlowField& flow, std::span<const BBox> boxes) {
    const std::vector<bool> mask = box_mask(flow, boxes);
    const double block_area = static_cast<double>(flow.block_size) * flow.block_size;
    double v_sum = 0.0;
    double area = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        v_sum += flow.vectors[i].magnitude() * block_area;
        area += block_area;
    }
    if (area == 0.0) return -1.0;
    return v_sum / area;
}

int step_interval(double mean_flow, int k_r, const AkisConfig& cfg) {
    if (mean_flow < cfg.beta && k_r < cfg.k_upper) return k_r + 1;
    if (mean_flow > cfg.beta && k_r > cfg.k_lower) return k_r - 1;
    return k_r;
}

int next_interval(const FlowField& flow, std::span<const BBox> key_boxes, int k_r, const AkisConfig& cfg) {
    cfg.validate();
    if (k_r < cfg.k_lower || k_r > cfg.k_upper) throw InvalidArgument("current interval outside AKIS bounds");
    const double mean = mean_box_flow(flow, key_boxes);
    if (mean < 0) return k_r;  // nothing masked: no motion evidence
    return step_interval(mean, k_r, cfg);
}

}  // namespace arena
