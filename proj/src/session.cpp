// SPDX-License-Identifier: Apache-2.0
#include "arena/session.hpp"

#include <chrono>

#include "arena/patch_grid.hpp"

namespace arena {

AkisConfig CameraConfig::effective_akis() const {
    AkisConfig a = akis;
    if (fixed_interval) {
        a.k_lower = *fixed_interval;
        a.k_upper = *fixed_interval;
    }
    return a;
}

CameraSession::CameraSession(CameraConfig cfg, PatchGrid grid, int channels)
    : cfg_(std::move(cfg)), akis_(cfg_.effective_akis()), grid_(grid), channels_(channels), rng_(cfg_.pps.rng_seed) {
    cfg_.pps.validate();
    akis_.validate();
    k_ = cfg_.fixed_interval ? *cfg_.fixed_interval : cfg_.initial_interval.value_or(akis_.k_lower);
    if (k_ < akis_.k_lower || k_ > akis_.k_upper) throw InvalidArgument("initial interval outside AKIS bounds");
}

Message CameraSession::hello(std::uint64_t config_hash) const {
    return HelloMsg{static_cast<std::uint16_t>(grid_.frame_width()), static_cast<std::uint16_t>(grid_.frame_height()),
                    static_cast<std::uint8_t>(channels_), static_cast<std::uint16_t>(grid_.patch_size()), config_hash};
}

CameraStep CameraSession::step(const Frame& frame) {
    if (frame.width != grid_.frame_width() || frame.height != grid_.frame_height() || frame.channels != channels_)
        throw InvalidArgument("frame does not match the camera session");

    CameraStep out;
    const std::uint64_t pixels = static_cast<std::uint64_t>(frame.width) * static_cast<std::uint64_t>(frame.height);

    if (started_ && counter_ >= k_) {
        // Interval r is complete: prev_frame_ is its last frame.
        double mean = -1.0;
        if (akis_.k_lower < akis_.k_upper) {
            const GreyFrame last = to_grayscale(*prev_frame_);
            const FlowField flow = estimate_flow(keyframe_grey_, last, akis_);
            mean = mean_box_flow(flow, keyframe_boxes_);
            k_ = next_interval(flow, keyframe_boxes_, k_, akis_);
            const auto radius = static_cast<std::uint64_t>(2 * akis_.search_radius + 1);
            out.preprocess_ops += 2 * pixels + pixels * radius * radius;
        }
        counter_ = 0;
        trace_.push_back({frame.frame_id, k_, mean});
    } else if (!started_) {
        trace_.push_back({frame.frame_id, k_, -1.0});
    }

    bool keyframe = !started_ || counter_ == 0;
    if (!keyframe && !have_prev_result_) {
        // The server never answered the previous frame; PPS has nothing to go on.
        keyframe = true;
        out.resync = true;
        counter_ = 0;
        trace_.push_back({frame.frame_id, k_, -1.0});
    }

    if (keyframe) {
        out.phase = Phase::Keyframe;
        out.poi = PoISet(grid_, {});
        out.message = KeyframeMsg{frame.frame_id, static_cast<std::uint16_t>(frame.width),
                                  static_cast<std::uint16_t>(frame.height), static_cast<std::uint8_t>(frame.channels),
                                  frame.pixels};
        keyframe_grey_ = to_grayscale(frame);
        keyframe_id_ = frame.frame_id;
        keyframe_boxes_.clear();
    } else {
        out.phase = Phase::NonKeyframe;
        out.poi = sample_pois(*prev_frame_, frame, prev_boxes_, grid_, cfg_.pps, rng_);
        out.preprocess_ops += 3 * pixels;
        NonKeyframeMsg nk;
        nk.frame_id = frame.frame_id;
        nk.indices.assign(out.poi.indices().begin(), out.poi.indices().end());
        nk.patches = extract_patches(frame, grid_, out.poi.indices());
        out.message = std::move(nk);
    }

    started_ = true;
    prev_frame_ = frame;
    awaiting_ = frame.frame_id;
    have_prev_result_ = false;
    ++counter_;
    return out;
}

void CameraSession::on_result(const ResultMsg& result) {
    if (!awaiting_ || result.frame_id != *awaiting_) return;
    prev_boxes_.clear();
    for (const auto& d : result.detections) {
        const Detection det = from_wire(d);
        if (det.bbox.valid()) prev_boxes_.push_back(det.bbox);
    }
    if (result.frame_id == keyframe_id_) keyframe_boxes_ = prev_boxes_;
    have_prev_result_ = true;
    awaiting_.reset();
}

ServerSession::ServerSession(const Engine& engine, const AnnotationStore* annotations, ServerConfig cfg)
    : engine_(engine), annotations_(annotations), cfg_(cfg), rng_(cfg.oracle.rng_seed) {
    cfg_.oracle.validate();
}

void ServerSession::fail(ProtocolErrc code, const std::string& what) {
    state_ = State::AwaitHello;
    pools_.reset();
    throw ProtocolError(code, what);
}

std::optional<Message> ServerSession::handle(const Message& m, std::size_t wire_bytes) {
    const MessageType t = type_of(m);
    switch (state_) {
        case State::AwaitHello: {
            if (t != MessageType::Hello) fail(ProtocolErrc::UnexpectedMessage, to_string(t) + " before HELLO");
            const auto& h = std::get<HelloMsg>(m);
            const EngineConfig& ec = engine_.config();
            if (h.width != ec.frame_width || h.height != ec.frame_height || h.channels != ec.channels ||
                h.patch_size != ec.patch_size)
                fail(ProtocolErrc::InvalidContent, "HELLO session parameters do not match the engine");
            if (h.config_hash != 0 && h.config_hash != ec.hash())
                fail(ProtocolErrc::InvalidContent, "HELLO engine configuration hash mismatch");
            state_ = State::AwaitKeyframe;
            return std::nullopt;
        }
        case State::AwaitKeyframe:
        case State::Streaming:
            if (t == MessageType::Keyframe) return infer_keyframe(std::get<KeyframeMsg>(m), wire_bytes);
            if (t == MessageType::NonKeyframe) {
                if (state_ != State::Streaming) fail(ProtocolErrc::UnexpectedMessage, "NONKEYFRAME before any KEYFRAME");
                return infer_nonkeyframe(std::get<NonKeyframeMsg>(m), wire_bytes);
            }
            if (t == MessageType::Bye) {
                state_ = State::Closed;
                pools_.reset();
                return std::nullopt;
            }
            fail(ProtocolErrc::UnexpectedMessage, to_string(t) + " is not valid mid-session");
        case State::Closed:
            break;
    }
    fail(ProtocolErrc::UnexpectedMessage, to_string(t) + " after BYE");
}

std::vector<Detection> ServerSession::detect(std::uint64_t frame_id) {
    if (cfg_.detector == DetectorMode::Head)
        return head_detections(head_predict(last_pyramid_, engine_), engine_.config().patch_size);
    static const AnnotationStore empty;
    return oracle_detect(frame_id, annotations_ ? *annotations_ : empty, cfg_.oracle, rng_);
}

namespace {

ResultMsg make_result(std::uint64_t frame_id, const std::vector<Detection>& dets) {
    ResultMsg r{frame_id, {}};
    r.detections.reserve(dets.size());
    for (const auto& d : dets) r.detections.push_back(to_wire(d));
    return r;
}

std::int64_t micros_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Message ServerSession::infer_keyframe(const KeyframeMsg& k, std::size_t wire_bytes) {
    const EngineConfig& ec = engine_.config();
    if (k.width != ec.frame_width || k.height != ec.frame_height || k.channels != ec.channels)
        fail(ProtocolErrc::InvalidContent, "KEYFRAME dimensions do not match the session");
    const auto t0 = std::chrono::steady_clock::now();
    const Frame frame(k.frame_id, k.width, k.height, k.channels, k.pixels);
    last_pyramid_ = engine_.keyframe_infer(frame, pools_, &last_stats_);
    state_ = State::Streaming;
    const auto dets = detect(k.frame_id);
    cost_log_.push_back(CostRecord{k.frame_id, Phase::Keyframe, wire_bytes,
                                   static_cast<std::uint64_t>(engine_.grid().count()), 0, 0, micros_since(t0)});
    return make_result(k.frame_id, dets);
}

Message ServerSession::infer_nonkeyframe(const NonKeyframeMsg& n, std::size_t wire_bytes) {
    const auto block = static_cast<std::size_t>(engine_.config().patch_bytes());
    const int count = engine_.grid().count();
    std::vector<int> idx;
    idx.reserve(n.indices.size());
    for (std::size_t i = 0; i < n.indices.size(); ++i) {
        if (n.indices[i] >= static_cast<std::uint32_t>(count)) fail(ProtocolErrc::InvalidContent, "patch index out of range");
        if (i > 0 && n.indices[i] <= n.indices[i - 1])
            fail(ProtocolErrc::InvalidContent, "patch indices must be strictly increasing");
        if (n.patches[i].size() != block) fail(ProtocolErrc::InvalidContent, "patch block size mismatch");
        idx.push_back(static_cast<int>(n.indices[i]));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const PoISet poi(engine_.grid(), std::move(idx));
    last_pyramid_ = engine_.nonkeyframe_infer(n.patches, poi, pools_, &last_stats_);
    const auto dets = detect(n.frame_id);
    cost_log_.push_back(CostRecord{n.frame_id, Phase::NonKeyframe, wire_bytes, n.indices.size(), 0, 0, micros_since(t0)});
    return make_result(n.frame_id, dets);
}

}  // namespace arena
