// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "arena/core.hpp"

namespace arena {

struct FlowVector {
    int dx = 0;
    int dy = 0;
    double magnitude() const;
    friend bool operator==(const FlowVector&, const FlowVector&) = default;
};

/// Per-block displacement field.
struct FlowField {
    int block_size = 8;
    int rows = 0;
    int cols = 0;
    std::vector<FlowVector> vectors;

    const FlowVector& at(int row, int col) const { return vectors[static_cast<std::size_t>(row * cols + col)]; }
};

struct AkisConfig {
    double beta = 10.0;
    int k_lower = 1;
    int k_upper = 15;
    int block_size = 8;
    int search_radius = 8;

    void validate() const;
};

/// Dense motion estimate between two frames.
class FlowEstimator {
public:
    virtual ~FlowEstimator() = default;
    virtual FlowField estimate(const GreyFrame& a, const GreyFrame& b, const AkisConfig& cfg) const = 0;
};

/// Exhaustive integer block matching (SAD). Candidates must lie fully inside
/// the frame. Ties go to the smallest magnitude, then smallest dy, then dx.
class BlockMatchingFlow final : public FlowEstimator {
public:
    FlowField estimate(const GreyFrame& a, const GreyFrame& b, const AkisConfig& cfg) const override;
};

FlowField estimate_flow(const GreyFrame& a, const GreyFrame& b, const AkisConfig& cfg);

/// Mask of blocks intersecting the union of boxes.
std::vector<bool> box_mask(const FlowField& flow, std::span<const BBox> boxes);

/// Area-weighted mean flow magnitude over the masked blocks, in pixels.
/// Returns a negative value when no block is masked.
double mean_box_flow(const FlowField& flow, std::span<const BBox> boxes);

/// Interval update given a precomputed mean flow magnitude.
int step_interval(double mean_flow, int k_r, const AkisConfig& cfg);

/// Adaptive keyframe interval switching: K_{r+1} from the flow between the
/// keyframe and the last frame of interval r.
int next_interval(const FlowField& flow, std::span<const BBox> key_boxes, int k_r, const AkisConfig& cfg);

}  // namespace arena
