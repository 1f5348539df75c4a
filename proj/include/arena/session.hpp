// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arena/akis.hpp"
#include "arena/core.hpp"
#include "arena/evaluation.hpp"
#include "arena/message.hpp"
#include "arena/pps.hpp"
#include "arena/rng.hpp"
#include "arena/vit_engine.hpp"

namespace arena {

struct CameraConfig {
    PpsConfig pps;
    AkisConfig akis;
    /// When set, AKIS is pinned to this interval (k_lower = k_upper = K).
    std::optional<int> fixed_interval;
    /// Interval of the first keyframe cycle; defaults to akis.k_lower.
    std::optional<int> initial_interval;

    AkisConfig effective_akis() const;
};

/// One interval boundary: the keyframe `frame_id` opens an interval of length `interval`.
struct IntervalEvent {
    std::uint64_t frame_id = 0;
    int interval = 0;
    double mean_flow = -1.0;  // negative when no AKIS evaluation happened (first or resync)
    friend bool operator==(const IntervalEvent&, const IntervalEvent&) = default;
};

struct CameraStep {
    Message message;
    Phase phase = Phase::Keyframe;
    PoISet poi;                     // sampled patches, empty for keyframes
    std::uint64_t preprocess_ops = 0;  // pixel operations spent on the camera
    bool resync = false;            // keyframe forced because a reply was missing
};

/// Camera side: interval counter, PPS for non-keyframes, AKIS at interval ends.
class CameraSession {
public:
    CameraSession(CameraConfig cfg, PatchGrid grid, int channels);

    Message hello(std::uint64_t config_hash = 0) const;
    CameraStep step(const Frame& frame);
    /// Feeds back the server's detections; stale frame ids are ignored.
    void on_result(const ResultMsg& result);
    Message bye() const { return ByeMsg{}; }

    int interval() const { return k_; }
    int position_in_interval() const { return counter_; }
    const std::vector<IntervalEvent>& interval_trace() const { return trace_; }
    const CameraConfig& config() const { return cfg_; }

private:
    CameraConfig cfg_;
    AkisConfig akis_;
    PatchGrid grid_;
    int channels_;
    Xorshift64Star rng_;

    int k_;
    int counter_ = 0;
    bool started_ = false;
    std::optional<Frame> prev_frame_;
    std::vector<BBox> prev_boxes_;
    std::optional<std::uint64_t> awaiting_;
    bool have_prev_result_ = false;

    GreyFrame keyframe_grey_;
    std::uint64_t keyframe_id_ = 0;
    std::vector<BBox> keyframe_boxes_;
    std::vector<IntervalEvent> trace_;
};


enum class DetectorMode { Oracle, Head };

struct ServerConfig {
    OracleConfig oracle;
    DetectorMode detector = DetectorMode::Oracle;
};

/// Edge side: enforces HELLO (KEYFRAME NONKEYFRAME*)* BYE, runs the engine and
/// the detector, and answers every frame with a RESULT.
class ServerSession {
public:
    enum class State { AwaitHello, AwaitKeyframe, Streaming, Closed };

    ServerSession(const Engine& engine, const AnnotationStore* annotations, ServerConfig cfg);

    /// Returns the reply, if any. On a protocol violation the session is reset
    /// to AwaitHello and the ProtocolError propagates.
    std::optional<Message> handle(const Message& m, std::size_t wire_bytes);
    std::optional<Message> handle(const Message& m) { return handle(m, encoded_size(m)); }

    State state() const { return state_; }
    const MemoryTokenPools& pools() const { return pools_; }
    const FeaturePyramid& last_pyramid() const { return last_pyramid_; }
    const AttentionStats& last_stats() const { return last_stats_; }
    const std::vector<CostRecord>& cost_log() const { return cost_log_; }

private:
    Message infer_keyframe(const KeyframeMsg& k, std::size_t wire_bytes);
    Message infer_nonkeyframe(const NonKeyframeMsg& n, std::size_t wire_bytes);
    std::vector<Detection> detect(std::uint64_t frame_id);
    [[noreturn]] void fail(ProtocolErrc code, const std::string& what);

    const Engine& engine_;
    const AnnotationStore* annotations_;
    ServerConfig cfg_;
    Xorshift64Star rng_;
    State state_ = State::AwaitHello;
    MemoryTokenPools pools_;
    FeaturePyramid last_pyramid_;
    AttentionStats last_stats_;
    std::vector<CostRecord> cost_log_;
};

}  // namespace arena
