// SPDX-License-Identifier: Apache-2.0
#include "arena/message.hpp"

#include <bit>
#include <cstring>

namespace arena {
namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'R', 'N', 'A'};
constexpr std::size_t kDetectionBytes = 5 * 4 + 2;

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
    template <class T>
    void put(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i)
            out_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
    void put_f32(float f) { put(std::bit_cast<std::uint32_t>(f)); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
    template <class T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw ProtocolError(ProtocolErrc::LengthMismatch, "payload shorter than its contents");
    }
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

std::size_t payload_size(const Message& m) {
    struct V {
        std::size_t operator()(const HelloMsg&) const { return 2 + 2 + 1 + 2 + 8; }
        std::size_t operator()(const KeyframeMsg& k) const { return 8 + 2 + 2 + 1 + k.pixels.size(); }
        std::size_t operator()(const NonKeyframeMsg& n) const {
            std::size_t s = 8 + 4;
            for (const auto& p : n.patches) s += 4 + p.size();
            return s;
        }
        std::size_t operator()(const ResultMsg& r) const { return 8 + 4 + r.detections.size() * kDetectionBytes; }
        std::size_t operator()(const ByeMsg&) const { return 0; }
    };
    return std::visit(V{}, m);
}

bool known_type(std::uint8_t t) {
    switch (static_cast<MessageType>(t)) {
        case MessageType::Hello:
        case MessageType::Keyframe:
        case MessageType::NonKeyframe:
        case MessageType::Result:
        case MessageType::Bye:
            return true;
    }
    return false;
}

Message decode_payload(MessageType type, std::span<const std::uint8_t> payload) {
    Reader r(payload);
    Message out;
    switch (type) {
        case MessageType::Hello: {
            HelloMsg h;
            h.width = r.get<std::uint16_t>();
            h.height = r.get<std::uint16_t>();
            h.channels = r.get<std::uint8_t>();
            h.patch_size = r.get<std::uint16_t>();
            h.config_hash = r.get<std::uint64_t>();
            out = h;
            break;
        }
        case MessageType::Keyframe: {
            KeyframeMsg k;
            k.frame_id = r.get<std::uint64_t>();
            k.width = r.get<std::uint16_t>();
            k.height = r.get<std::uint16_t>();
            k.channels = r.get<std::uint8_t>();
            const std::size_t n = static_cast<std::size_t>(k.width) * k.height * k.channels;
            if (r.remaining() != n) throw ProtocolError(ProtocolErrc::LengthMismatch, "keyframe pixel count mismatch");
            auto px = r.take(n);
            k.pixels.assign(px.begin(), px.end());
            out = std::move(k);
            break;
        }
        case MessageType::NonKeyframe: {
            NonKeyframeMsg nk;
            nk.frame_id = r.get<std::uint64_t>();
            const std::uint64_t count = r.get<std::uint32_t>();
            const std::size_t rest = r.remaining();
            if (count == 0) {
                if (rest != 0) throw ProtocolError(ProtocolErrc::LengthMismatch, "empty patch list with trailing bytes");
            } else {
                if (rest / 5 < count) throw ProtocolError(ProtocolErrc::LengthMismatch, "patch count exceeds payload");
                if (rest % count != 0)
                    throw ProtocolError(ProtocolErrc::LengthMismatch, "payload not divisible into equal patches");
                const std::size_t block = rest / count - 4;
                nk.indices.reserve(count);
                nk.patches.reserve(count);
                for (std::uint64_t i = 0; i < count; ++i) {
                    nk.indices.push_back(r.get<std::uint32_t>());
                    auto px = r.take(block);
                    nk.patches.emplace_back(px.begin(), px.end());
                }
            }
            out = std::move(nk);
            break;
        }
        case MessageType::Result: {
            ResultMsg res;
            res.frame_id = r.get<std::uint64_t>();
            const std::uint64_t count = r.get<std::uint32_t>();
            if (r.remaining() != count * kDetectionBytes)
                throw ProtocolError(ProtocolErrc::LengthMismatch, "detection count mismatch");
            res.detections.reserve(count);
            for (std::uint64_t i = 0; i < count; ++i) {
                WireDetection d;
                d.x1 = r.get_f32();
                d.y1 = r.get_f32();
                d.x2 = r.get_f32();
                d.y2 = r.get_f32();
                d.score = r.get_f32();
                d.class_id = r.get<std::uint16_t>();
                res.detections.push_back(d);
            }
            out = std::move(res);
            break;
        }
        case MessageType::Bye:
            out = ByeMsg{};
            break;
    }
    if (r.remaining() != 0) throw ProtocolError(ProtocolErrc::LengthMismatch, "trailing bytes in payload");
    return out;
}

}  // namespace

MessageType type_of(const Message& m) {
    static constexpr MessageType types[] = {MessageType::Hello, MessageType::Keyframe, MessageType::NonKeyframe,
                                            MessageType::Result, MessageType::Bye};
    return types[m.index()];
}

std::string to_string(MessageType t) {
    switch (t) {
        case MessageType::Hello: return "HELLO";
        case MessageType::Keyframe: return "KEYFRAME";
        case MessageType::NonKeyframe: return "NONKEYFRAME";
        case MessageType::Result: return "RESULT";
        case MessageType::Bye: return "BYE";
    }
    return "UNKNOWN";
}

std::string to_string(ProtocolErrc e) {
    switch (e) {
        case ProtocolErrc::Truncated: return "truncated";
        case ProtocolErrc::BadMagic: return "bad magic";
        case ProtocolErrc::BadVersion: return "bad version";
        case ProtocolErrc::UnknownType: return "unknown type";
        case ProtocolErrc::LengthMismatch: return "length mismatch";
        case ProtocolErrc::InvalidContent: return "invalid content";
        case ProtocolErrc::UnexpectedMessage: return "unexpected message";
    }
    return "unknown error";
}

std::size_t encoded_size(const Message& m) { return kHeaderSize + payload_size(m); }

std::vector<std::uint8_t> encode_message(const Message& m) {
    const std::size_t payload = payload_size(m);
    if (payload > 0xFFFFFFFFu) throw InvalidArgument("message payload exceeds 4 GiB");
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + payload);
    Writer w(out);
    for (std::uint8_t b : kMagic) w.put<std::uint8_t>(b);
    w.put<std::uint8_t>(kProtocolVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(type_of(m)));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(payload));
    struct V {
        Writer& w;
        void operator()(const HelloMsg& h) const {
            w.put(h.width);
            w.put(h.height);
            w.put(h.channels);
            w.put(h.patch_size);
            w.put(h.config_hash);
        }
        void operator()(const KeyframeMsg& k) const {
            w.put(k.frame_id);
            w.put(k.width);
            w.put(k.height);
            w.put(k.channels);
            w.bytes(k.pixels);
        }
        void operator()(const NonKeyframeMsg& n) const {
            if (n.indices.size() != n.patches.size()) throw InvalidArgument("patch and index counts differ");
            for (const auto& p : n.patches)
                if (p.size() != n.patches.front().size()) throw InvalidArgument("patch blocks differ in size");
            w.put(n.frame_id);
            w.put(static_cast<std::uint32_t>(n.indices.size()));
            for (std::size_t i = 0; i < n.indices.size(); ++i) {
                w.put(n.indices[i]);
                w.bytes(n.patches[i]);
            }
        }
        void operator()(const ResultMsg& r) const {
            w.put(r.frame_id);
            w.put(static_cast<std::uint32_t>(r.detections.size()));
            for (const auto& d : r.detections) {
                w.put_f32(d.x1);
                w.put_f32(d.y1);
                w.put_f32(d.x2);
                w.put_f32(d.y2);
                w.put_f32(d.score);
                w.put(d.class_id);
            }
        }
        void operator()(const ByeMsg&) const {}
    };
    std::visit(V{w}, m);
    return out;
}

std::optional<std::size_t> peek_frame_length(std::span<const std::uint8_t> bytes) {
    // Reject as early as the bytes allow, so garbage fails before a full header arrives.
    for (std::size_t i = 0; i < 4 && i < bytes.size(); ++i)
        if (bytes[i] != kMagic[i]) throw ProtocolError(ProtocolErrc::BadMagic, "frame does not start with ARNA");
    if (bytes.size() > 4 && bytes[4] != kProtocolVersion)
        throw ProtocolError(ProtocolErrc::BadVersion, "unsupported version " + std::to_string(bytes[4]));
    if (bytes.size() > 5 && !known_type(bytes[5]))
        throw ProtocolError(ProtocolErrc::UnknownType, "unknown message type " + std::to_string(bytes[5]));
    if (bytes.size() < kHeaderSize) return std::nullopt;
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[6 + static_cast<std::size_t>(i)]) << (8 * i);
    return kHeaderSize + len;
}

Message decode_message(std::span<const std::uint8_t> bytes) {
    const auto total = peek_frame_length(bytes);
    if (!total) throw ProtocolError(ProtocolErrc::Truncated, "incomplete header");
    if (bytes.size() < *total) throw ProtocolError(ProtocolErrc::Truncated, "incomplete payload");
    if (bytes.size() > *total) throw ProtocolError(ProtocolErrc::LengthMismatch, "bytes beyond declared frame length");
    return decode_payload(static_cast<MessageType>(bytes[5]), bytes.subspan(kHeaderSize));
}

std::vector<Message> decode_stream(std::span<const std::uint8_t> bytes) {
    std::vector<Message> out;
    while (!bytes.empty()) {
        const auto total = peek_frame_length(bytes);
        if (!total || bytes.size() < *total) throw ProtocolError(ProtocolErrc::Truncated, "stream ends mid-frame");
        out.push_back(decode_message(bytes.first(*total)));
        bytes = bytes.subspan(*total);
    }
    return out;
}

Detection from_wire(const WireDetection& d) {
    return Detection{BBox{d.x1, d.y1, d.x2, d.y2}, d.score, d.class_id};
}

WireDetection to_wire(const Detection& d) {
    return WireDetection{static_cast<float>(d.bbox.x1), static_cast<float>(d.bbox.y1), static_cast<float>(d.bbox.x2),
                         static_cast<float>(d.bbox.y2), static_cast<float>(d.score),
                         static_cast<std::uint16_t>(d.class_id)};
}

}  // namespace arena
