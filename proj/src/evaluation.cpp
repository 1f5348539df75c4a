// SPDX-License-Identifier: Apache-2.0
#include "arena/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace arena {

void AnnotationStore::add(std::uint64_t frame_id, GroundTruth gt) {
    if (!gt.bbox.valid()) throw InvalidArgument("invalid ground-truth box");
    frames_[frame_id].push_back(gt);
}

const std::vector<GroundTruth>& AnnotationStore::boxes(std::uint64_t frame_id) const {
    static const std::vector<GroundTruth> empty;
    auto it = frames_.find(frame_id);
    return it == frames_.end() ? empty : it->second;
}

std::size_t AnnotationStore::box_count() const {
    std::size_t n = 0;
    for (const auto& [id, v] : frames_) n += v.size();
    return n;
}

void OracleConfig::validate() const {
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw InvalidArgument("oracle drop rate must be in [0, 1)");
    if (!(jitter >= 0.0)) throw InvalidArgument("oracle jitter must be non-negative");
}

std::vector<Detection> oracle_detect(std::uint64_t frame_id, const AnnotationStore& store, const OracleConfig& cfg,
                                     Xorshift64Star& rng) {
    cfg.validate();
    std::vector<Detection> out;
    for (const GroundTruth& gt : store.boxes(frame_id)) {
        if (cfg.drop_rate > 0.0 && rng.uniform01() < cfg.drop_rate) continue;
        BBox b = gt.bbox;
        if (cfg.jitter > 0.0) {
            b.x1 += rng.uniform(-cfg.jitter, cfg.jitter);
            b.y1 += rng.uniform(-cfg.jitter, cfg.jitter);
            b.x2 += rng.uniform(-cfg.jitter, cfg.jitter);
            b.y2 += rng.uniform(-cfg.jitter, cfg.jitter);
            if (b.x1 > b.x2) std::swap(b.x1, b.x2);
            if (b.y1 > b.y2) std::swap(b.y1, b.y2);
        }
        out.push_back(Detection{b, 1.0, gt.class_id});
    }
    return out;
}

FeatureMap head_predict(const FeaturePyramid& pyr, const Engine& engine) {
    const auto& head = engine.weights().head;
    const FeatureMap& f3 = pyr.f3;
    if (f3.channels != head.weight.rows) throw InvalidArgument("pyramid channels do not match the head");
    FeatureMap out(f3.height, f3.width, 1);
    for (int y = 0; y < f3.height; ++y) {
        for (int x = 0; x < f3.width; ++x) {
            const float* v = f3.at(y, x);
            float s = head.bias[0];
            for (int c = 0; c < f3.channels; ++c) s += v[c] * head.weight(c, 0);
            out.at(y, x)[0] = 1.0f / (1.0f + std::exp(-s));
        }
    }
    return out;
}

std::vector<Detection> head_detections(const FeatureMap& objectness, int patch_size, double threshold) {
    std::vector<Detection> out;
    for (int y = 0; y < objectness.height; ++y)
        for (int x = 0; x < objectness.width; ++x) {
            const double s = objectness.at(y, x)[0];
            if (s > threshold)
                out.push_back(Detection{BBox{double(x * patch_size), double(y * patch_size),
                                             double((x + 1) * patch_size), double((y + 1) * patch_size)},
                                        s, 1});
        }
    return out;
}

namespace {

struct Scored {
    double score;
    bool tp;
};

// Greedy matching in descending score order; returns per-detection TP flags
// for one class plus that class's ground-truth count.
std::pair<std::vector<Scored>, std::size_t> match_class(const DetectionsByFrame& dets, const AnnotationStore& store,
                                                        int cls) {
    struct Ref {
        std::uint64_t frame;
        const Detection* det;
    };
    std::vector<Ref> refs;
    for (const auto& [frame, list] : dets)
        for (const Detection& d : list)
            if (d.class_id == cls) refs.push_back({frame, &d});
    // Stable: equal scores keep frame/insertion order.
    std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.det->score > b.det->score; });

    std::size_t gt_count = 0;
    std::map<std::uint64_t, std::vector<bool>> used;
    for (const auto& [frame, list] : store.frames()) {
        auto& u = used[frame];
        u.assign(list.size(), false);
        gt_count += static_cast<std::size_t>(std::count_if(list.begin(), list.end(),
                                                           [cls](const GroundTruth& g) { return g.class_id == cls; }));
    }

    std::vector<Scored> out;
    out.reserve(refs.size());
    for (const Ref& r : refs) {
        const auto& gts = store.boxes(r.frame);
        double best = 0.5;
        int best_j = -1;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (gts[j].class_id != cls || used[r.frame][j]) continue;
            const double o = iou(r.det->bbox, gts[j].bbox);
            if (o >= best) {
                if (best_j < 0 || o > best) {
                    best = o;
                    best_j = static_cast<int>(j);
                }
            }
        }
        if (best_j >= 0) used[r.frame][static_cast<std::size_t>(best_j)] = true;
        out.push_back({r.det->score, best_j >= 0});
    }
    return {out, gt_count};
}

std::set<int> gt_classes(const AnnotationStore& store) {
    std::set<int> classes;
    for (const auto& [frame, list] : store.frames())
        for (const auto& g : list) classes.insert(g.class_id);
    return classes;
}

double average_precision(const std::vector<Scored>& scored, std::size_t gt_count) {
    if (gt_count == 0) return 0.0;
    std::vector<double> recall, precision;
    std::size_t tp = 0, fp = 0;
    for (const auto& s : scored) {
        (s.tp ? tp : fp) += 1;
        recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    // Precision envelope, then sum over recall steps.
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

}  // namespace

double map_at_50(const DetectionsByFrame& dets, const AnnotationStore& store) {
    const std::set<int> classes = gt_classes(store);
    if (classes.empty()) return 0.0;
    double sum = 0.0;
    for (int cls : classes) {
        auto [scored, n] = match_class(dets, store, cls);
        sum += average_precision(scored, n);
    }
    return sum / static_cast<double>(classes.size());
}

double recall_at_50(const DetectionsByFrame& dets, const AnnotationStore& store) {
    std::size_t matched = 0, total = 0;
    for (int cls : gt_classes(store)) {
        auto [scored, n] = match_class(dets, store, cls);
        total += n;
        matched += static_cast<std::size_t>(std::count_if(scored.begin(), scored.end(), [](const Scored& s) { return s.tp; }));
    }
    return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
}

std::string to_string(Phase p) { return p == Phase::Keyframe ? "keyframe" : "nonkeyframe"; }

BandwidthSummary bandwidth_report(const std::vector<CostRecord>& records, std::uint64_t full_frame_bytes) {
    if (records.empty()) throw InvalidArgument("bandwidth report needs at least one record");
    if (full_frame_bytes == 0) throw InvalidArgument("full frame size must be positive");
    BandwidthSummary s;
    s.full_frame_bytes = full_frame_bytes;
    for (const CostRecord& r : records) {
        PhaseBandwidth& ph = r.phase == Phase::Keyframe ? s.keyframe : s.nonkeyframe;
        ph.frames += 1;
        ph.bytes += r.bytes_sent;
        s.frames += 1;
        s.total_bytes += r.bytes_sent;
    }
    const double ffb = static_cast<double>(full_frame_bytes);
    auto norm = [ffb](std::uint64_t bytes, std::uint64_t frames) {
        return frames == 0 ? 0.0 : static_cast<double>(bytes) / (static_cast<double>(frames) * ffb);
    };
    s.normalized = norm(s.total_bytes, s.frames);
    s.keyframe.normalized = norm(s.keyframe.bytes, s.keyframe.frames);
    s.nonkeyframe.normalized = norm(s.nonkeyframe.bytes, s.nonkeyframe.frames);
    return s;
}

}  // namespace arena
