// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/evaluation.hpp"
#include "arena/session.hpp"
#include "arena/vit_engine.hpp"

namespace arena {

/// Ordered frames from disk or memory. Ids are consecutive from a start id
/// and every frame must share the first frame's dimensions.
class FrameStream {
public:
    virtual ~FrameStream() = default;
    virtual std::optional<Frame> next() = 0;
};

class MemoryFrameStream final : public FrameStream {
public:
    explicit MemoryFrameStream(std::vector<Frame> frames) : frames_(std::move(frames)) {}
    std::optional<Frame> next() override;

private:
    std::vector<Frame> frames_;
    std::size_t pos_ = 0;
};

/// PGM/PPM files in the given order.
class PnmFrameStream final : public FrameStream {
public:
    PnmFrameStream(std::vector<std::filesystem::path> paths, std::uint64_t start_id);
    /// All *.pgm / *.ppm files of a directory, sorted by name.
    static PnmFrameStream from_directory(const std::filesystem::path& dir, std::uint64_t start_id);
    std::optional<Frame> next() override;

private:
    std::vector<std::filesystem::path> paths_;
    std::uint64_t next_id_;
    std::size_t pos_ = 0;
    int width_ = 0, height_ = 0, channels_ = 0;
};

/// Reads a whole stream, enforcing the dimension invariants.
std::vector<Frame> load_frames(FrameStream& stream);

struct CostModel {
    double link_mbps = 93.9;               // uplink rate for t_transmit
    double per_message_overhead_us = 0.0;  // fixed cost added to each transmission
    double server_gflops = 50.0;           // effective engine throughput
    double camera_mops = 500.0;            // camera pixel operations per second, millions
};

enum class ReplayMode { Loopback, Socket };

struct ReplayConfig {
    CameraConfig camera;
    EngineConfig engine;
    std::optional<std::filesystem::path> weights;
    ServerConfig server;
    CostModel cost;
    ReplayMode mode = ReplayMode::Loopback;
    /// Socket mode: remote server; an in-process server is started when empty.
    std::optional<std::string> connect_host;
    std::uint16_t connect_port = 0;
    /// Adds measured wall-clock durations, which break bit-reproducibility.
    bool record_wall_clock = false;
};

struct ReplayReport {
    bool complete = true;
    std::string error;
    ReplayConfig config;
    std::vector<CostRecord> records;
    std::vector<std::uint64_t> encoder_flops;  // per record
    std::vector<IntervalEvent> interval_trace;
    std::uint64_t full_frame_bytes = 0;
    int patch_count = 0;
    DetectionsByFrame detections;
    double map50 = 0.0;
    double recall = 0.0;
    std::vector<std::int64_t> wall_preprocess_us;
    std::vector<std::int64_t> wall_roundtrip_us;

    BandwidthSummary bandwidth() const;
    /// (proportion, cumulative fraction) over non-keyframes.
    std::vector<std::pair<double, double>> poi_cdf() const;
    double mean_poi_proportion() const;
    nlohmann::ordered_json to_json() const;
};

inline constexpr const char* kReportSchema = "arena-replay/1";

/// Drives camera and server over the whole sequence.
ReplayReport replay(FrameStream& source, const AnnotationStore* annotations, const ReplayConfig& cfg);

/// Modeled durations, microseconds.
std::int64_t transmit_us(std::uint64_t bytes, const CostModel& m);
std::int64_t infer_us(std::uint64_t flops, const CostModel& m);
std::int64_t preprocess_us(std::uint64_t ops, const CostModel& m);

nlohmann::ordered_json engine_config_to_json(const EngineConfig& c);
EngineConfig engine_config_from_json(const nlohmann::json& j);

}  // namespace arena
