// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arena/core.hpp"
#include "arena/rng.hpp"
#include "arena/vit_engine.hpp"

namespace arena {

struct GroundTruth {
    BBox bbox;
    int class_id = 1;
    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Ground-truth boxes keyed by frame id.
class AnnotationStore {
public:
    void add(std::uint64_t frame_id, GroundTruth gt);
    const std::vector<GroundTruth>& boxes(std::uint64_t frame_id) const;
    bool contains(std::uint64_t frame_id) const { return frames_.count(frame_id) != 0; }
    std::size_t frame_count() const { return frames_.size(); }
    std::size_t box_count() const;
    const std::map<std::uint64_t, std::vector<GroundTruth>>& frames() const { return frames_; }

    friend bool operator==(const AnnotationStore&, const AnnotationStore&) = default;

private:
    std::map<std::uint64_t, std::vector<GroundTruth>> frames_;
};

struct OracleConfig {
    double drop_rate = 0.0;  // [0, 1)
    double jitter = 0.0;     // pixels
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Detector stand-in returning degraded ground truth with score 1.
std::vector<Detection> oracle_detect(std::uint64_t frame_id, const AnnotationStore& store, const OracleConfig& cfg,
                                     Xorshift64Star& rng);

/// Objectness per patch-grid cell: logistic(f3 . w + b). Shape probes only.
FeatureMap head_predict(const FeaturePyramid& pyr, const Engine& engine);

/// One patch-sized box per cell scoring above `threshold`.
std::vector<Detection> head_detections(const FeatureMap& objectness, int patch_size, double threshold = 0.5);

using DetectionsByFrame = std::map<std::uint64_t, std::vector<Detection>>;

/// All-points-interpolated AP at IoU 0.5, averaged over classes with ground truth.
double map_at_50(const DetectionsByFrame& dets, const AnnotationStore& store);

/// Fraction of ground-truth boxes matched at IoU >= 0.5.
double recall_at_50(const DetectionsByFrame& dets, const AnnotationStore& store);

enum class Phase { Keyframe, NonKeyframe };

std::string to_string(Phase p);

/// Per-frame cost accounting; durations in microseconds.
struct CostRecord {
    std::uint64_t frame_id = 0;
    Phase phase = Phase::Keyframe;
    std::uint64_t bytes_sent = 0;
    std::uint64_t patches_sent = 0;
    std::int64_t t_preprocess_us = 0;
    std::int64_t t_transmit_us = 0;
    std::int64_t t_infer_us = 0;

    friend bool operator==(const CostRecord&, const CostRecord&) = default;
};

struct PhaseBandwidth {
    std::uint64_t frames = 0;
    std::uint64_t bytes = 0;
    double normalized = 0.0;
};

struct BandwidthSummary {
    std::uint64_t frames = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t full_frame_bytes = 0;
    double normalized = 0.0;
    PhaseBandwidth keyframe;
    PhaseBandwidth nonkeyframe;
};

/// Normalized bandwidth: sum(bytes) / (frames * full_frame_bytes), overall and per phase.
BandwidthSummary bandwidth_report(const std::vector<CostRecord>& records, std::uint64_t full_frame_bytes);

}  // namespace arena
