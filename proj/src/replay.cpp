// SPDX-License-Identifier: Apache-2.0
#include "arena/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "arena/channel.hpp"
#include "arena/image_io.hpp"

namespace arena {

std::optional<Frame> MemoryFrameStream::next() {
    if (pos_ >= frames_.size()) return std::nullopt;
    return frames_[pos_++];
}

PnmFrameStream::PnmFrameStream(std::vector<std::filesystem::path> paths, std::uint64_t start_id)
    : paths_(std::move(paths)), next_id_(start_id) {}

PnmFrameStream PnmFrameStream::from_directory(const std::filesystem::path& dir, std::uint64_t start_id) {
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no .pgm/.ppm frames in " + dir.string());
    return PnmFrameStream(std::move(paths), start_id);
}

std::optional<Frame> PnmFrameStream::next() {
    if (pos_ >= paths_.size()) return std::nullopt;
    Frame f = read_pnm(paths_[pos_++], next_id_++);
    if (width_ == 0) {
        width_ = f.width;
        height_ = f.height;
        channels_ = f.channels;
    } else if (f.width != width_ || f.height != height_ || f.channels != channels_) {
        throw ImageError(paths_[pos_ - 1].string() + ": frame dimensions drift mid-sequence");
    }
    return f;
}

std::vector<Frame> load_frames(FrameStream& stream) {
    std::vector<Frame> out;
    while (auto f = stream.next()) {
        if (!out.empty()) {
            const Frame& first = out.front();
            if (f->width != first.width || f->height != first.height || f->channels != first.channels)
                throw ImageError("frame dimensions drift mid-sequence");
        }
        out.push_back(std::move(*f));
    }
    return out;
}

std::int64_t transmit_us(std::uint64_t bytes, const CostModel& m) {
    return std::llround(static_cast<double>(bytes) * 8.0 / m.link_mbps + m.per_message_overhead_us);
}

std::int64_t infer_us(std::uint64_t flops, const CostModel& m) {
    return std::llround(static_cast<double>(flops) / (m.server_gflops * 1e3));
}

std::int64_t preprocess_us(std::uint64_t ops, const CostModel& m) {
    return std::llround(static_cast<double>(ops) / m.camera_mops);
}

nlohmann::ordered_json engine_config_to_json(const EngineConfig& c) {
    return {{"patch_size", c.patch_size}, {"dim", c.dim},           {"depth", c.depth},
            {"heads", c.heads},           {"mlp_ratio", c.mlp_ratio}, {"channels", c.channels},
            {"frame_width", c.frame_width}, {"frame_height", c.frame_height}, {"weight_seed", c.weight_seed}};
}

EngineConfig engine_config_from_json(const nlohmann::json& j) {
    EngineConfig c;
    c.patch_size = j.value("patch_size", c.patch_size);
    c.dim = j.value("dim", c.dim);
    c.depth = j.value("depth", c.depth);
    c.heads = j.value("heads", c.heads);
    c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
    c.channels = j.value("channels", c.channels);
    c.frame_width = j.value("frame_width", c.frame_width);
    c.frame_height = j.value("frame_height", c.frame_height);
    c.weight_seed = j.value("weight_seed", c.weight_seed);
    c.validate();
    return c;
}

BandwidthSummary ReplayReport::bandwidth() const {
    if (records.empty()) return BandwidthSummary{0, 0, full_frame_bytes, 0.0, {}, {}};
    return bandwidth_report(records, full_frame_bytes);
}

std::vector<std::pair<double, double>> ReplayReport::poi_cdf() const {
    std::vector<double> props;
    for (const auto& r : records)
        if (r.phase == Phase::NonKeyframe) props.push_back(static_cast<double>(r.patches_sent) / patch_count);
    std::sort(props.begin(), props.end());
    std::vector<std::pair<double, double>> cdf;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (i + 1 < props.size() && props[i + 1] == props[i]) continue;
        cdf.emplace_back(props[i], static_cast<double>(i + 1) / static_cast<double>(props.size()));
    }
    return cdf;
}

double ReplayReport::mean_poi_proportion() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : records)
        if (r.phase == Phase::NonKeyframe) {
            sum += static_cast<double>(r.patches_sent) / patch_count;
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

nlohmann::ordered_json ReplayReport::to_json() const {
    using json = nlohmann::ordered_json;
    const BandwidthSummary bw = bandwidth();
    const AkisConfig akis = config.camera.effective_akis();

    json j;
    j["schema"] = kReportSchema;
    j["complete"] = complete;
    j["error"] = complete ? json(nullptr) : json(error);
    j["config"] = {
        {"engine", engine_config_to_json(config.engine)},
        {"pps",
         {{"p", config.camera.pps.sampling_rate},
          {"F", config.camera.pps.diff_threshold},
          {"m", config.camera.pps.margin},
          {"seed", config.camera.pps.rng_seed}}},
        {"akis",
         {{"beta", akis.beta},
          {"k_lower", akis.k_lower},
          {"k_upper", akis.k_upper},
          {"block_size", akis.block_size},
          {"search_radius", akis.search_radius}}},
        {"oracle",
         {{"drop_rate", config.server.oracle.drop_rate},
          {"jitter", config.server.oracle.jitter},
          {"seed", config.server.oracle.rng_seed}}},
        {"detector", config.server.detector == DetectorMode::Oracle ? "oracle" : "head"},
        {"cost_model",
         {{"link_mbps", config.cost.link_mbps},
          {"per_message_overhead_us", config.cost.per_message_overhead_us},
          {"server_gflops", config.cost.server_gflops},
          {"camera_mops", config.cost.camera_mops}}},
    };
    j["frames"] = records.size();
    j["patch_count"] = patch_count;
    j["full_frame_bytes"] = full_frame_bytes;

    auto phase_json = [](const PhaseBandwidth& p) {
        return json{{"frames", p.frames}, {"bytes", p.bytes}, {"normalized", p.normalized}};
    };
    j["bandwidth"] = {{"total_bytes", bw.total_bytes},
                      {"normalized", bw.normalized},
                      {"keyframe", phase_json(bw.keyframe)},
                      {"nonkeyframe", phase_json(bw.nonkeyframe)}};

    double pre = 0, tx = 0, inf = 0;
    for (const auto& r : records) {
        pre += static_cast<double>(r.t_preprocess_us);
        tx += static_cast<double>(r.t_transmit_us);
        inf += static_cast<double>(r.t_infer_us);
    }
    const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
    j["latency_us"] = {{"preprocess_mean", pre / n},
                       {"transmit_mean", tx / n},
                       {"infer_mean", inf / n},
                       {"end_to_end_mean", (pre + tx + inf) / n}};
    j["accuracy"] = {{"map50", map50}, {"recall", recall}};
    j["mean_poi_proportion"] = mean_poi_proportion();

    json cdf = json::array();
    for (const auto& [x, y] : poi_cdf()) cdf.push_back({x, y});
    j["poi_proportion_cdf"] = cdf;

    json trace = json::array();
    for (const auto& e : interval_trace) {
        json t{{"frame_id", e.frame_id}, {"k", e.interval}};
        t["mean_flow"] = e.mean_flow < 0 ? json(nullptr) : json(e.mean_flow);
        trace.push_back(t);
    }
    j["akis_trace"] = trace;

    json recs = json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        recs.push_back({{"frame_id", r.frame_id},
                        {"phase", to_string(r.phase)},
                        {"bytes_sent", r.bytes_sent},
                        {"patches_sent", r.patches_sent},
                        {"encoder_flops", i < encoder_flops.size() ? encoder_flops[i] : 0},
                        {"t_preprocess_us", r.t_preprocess_us},
                        {"t_transmit_us", r.t_transmit_us},
                        {"t_infer_us", r.t_infer_us}});
    }
    j["records"] = recs;

    if (config.record_wall_clock) {
        auto mean = [](const std::vector<std::int64_t>& v) {
            double s = 0;
            for (auto x : v) s += static_cast<double>(x);
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        j["wall_clock"] = {{"preprocess_us", wall_preprocess_us},
                           {"roundtrip_us", wall_roundtrip_us},
                           {"preprocess_mean", mean(wall_preprocess_us)},
                           {"roundtrip_mean", mean(wall_roundtrip_us)}};
    }
    return j;
}

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t micros(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration_cast<std::chrono::microseconds>(b - a).count();
}

}  // namespace

ReplayReport replay(FrameStream& source, const AnnotationStore* annotations, const ReplayConfig& cfg) {
    ReplayReport report;
    report.config = cfg;

    const Engine engine = cfg.weights ? Engine::load(*cfg.weights) : Engine(cfg.engine);
    report.config.engine = engine.config();
    const EngineConfig& ec = engine.config();
    const PatchGrid grid = engine.grid();
    report.patch_count = grid.count();
    report.full_frame_bytes = static_cast<std::uint64_t>(ec.frame_width) * ec.frame_height * ec.channels;

    static const AnnotationStore no_annotations;
    const AnnotationStore& store = annotations ? *annotations : no_annotations;

    std::unique_ptr<ServerSession> loop_session;
    std::unique_ptr<ByteChannel> camera_end;
    std::unique_ptr<ByteChannel> server_end;
    std::unique_ptr<TcpServer> local_server;

    if (cfg.mode == ReplayMode::Loopback) {
        auto [a, b] = LoopbackChannel::make_pair();
        camera_end = std::move(a);
        server_end = std::move(b);
        loop_session = std::make_unique<ServerSession>(engine, &store, cfg.server);
    } else if (cfg.connect_host) {
        camera_end = TcpChannel::connect(*cfg.connect_host, cfg.connect_port);
    } else {
        local_server = std::make_unique<TcpServer>(
            0, [&engine, &store, &cfg] { return std::make_unique<ServerSession>(engine, &store, cfg.server); });
        local_server->start();
        camera_end = TcpChannel::connect("127.0.0.1", local_server->port());
    }

    auto pump = [&]() {
        if (loop_session) serve_one(*server_end, *loop_session);
    };

    CameraSession camera(cfg.camera, grid, ec.channels);
    AnnotationStore seen;
    try {
        camera_end->write(encode_message(camera.hello(ec.hash())));
        pump();
        while (auto frame = source.next()) {
            const auto t0 = Clock::now();
            CameraStep step = camera.step(*frame);
            const auto bytes = encode_message(step.message);
            const auto t1 = Clock::now();
            camera_end->write(bytes);
            pump();
            const auto reply = camera_end->read_frame();
            if (!reply) throw ProtocolError(ProtocolErrc::Truncated, "server closed the connection");
            const Message m = decode_message(*reply);
            if (type_of(m) != MessageType::Result)
                throw ProtocolError(ProtocolErrc::UnexpectedMessage, "expected RESULT, got " + to_string(type_of(m)));
            const auto& result = std::get<ResultMsg>(m);
            if (result.frame_id != frame->frame_id)
                throw ProtocolError(ProtocolErrc::InvalidContent, "RESULT frame id does not echo the request");
            camera.on_result(result);
            const auto t2 = Clock::now();

            CostRecord rec;
            rec.frame_id = frame->frame_id;
            rec.phase = step.phase;
            rec.bytes_sent = bytes.size();
            rec.patches_sent = step.phase == Phase::Keyframe ? static_cast<std::uint64_t>(grid.count()) : step.poi.size();
            const std::uint64_t tokens = rec.patches_sent;
            const std::uint64_t flops = encoder_flops(tokens, static_cast<std::uint64_t>(ec.dim),
                                                      static_cast<std::uint64_t>(ec.depth));
            rec.t_preprocess_us = preprocess_us(step.preprocess_ops, cfg.cost);
            rec.t_transmit_us = transmit_us(rec.bytes_sent, cfg.cost);
            rec.t_infer_us = infer_us(flops, cfg.cost);
            report.records.push_back(rec);
            report.encoder_flops.push_back(flops);

            auto& dets = report.detections[frame->frame_id];
            for (const auto& d : result.detections) dets.push_back(from_wire(d));
            for (const auto& g : store.boxes(frame->frame_id)) seen.add(frame->frame_id, g);
            if (cfg.record_wall_clock) {
                report.wall_preprocess_us.push_back(micros(t0, t1));
                report.wall_roundtrip_us.push_back(micros(t1, t2));
            }
        }
        camera_end->write(encode_message(camera.bye()));
        pump();
    } catch (const std::exception& e) {
        report.complete = false;
        report.error = e.what();
    }
    camera_end->close();
    if (local_server) local_server->stop();

    report.interval_trace = camera.interval_trace();
    report.map50 = map_at_50(report.detections, seen);
    report.recall = recall_at_50(report.detections, seen);
    return report;
}

}  // namespace arena
