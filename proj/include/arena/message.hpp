// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "arena/core.hpp"

namespace arena {

// Frame layout (little-endian):
//   "ARNA" | version u8 = 1 | type u8 | payload length u32 | payload
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint8_t kProtocolVersion = 1;
/// Largest frame a stream reader will buffer.
inline constexpr std::size_t kMaxFrameBytes = std::size_t{256} << 20;

enum class MessageType : std::uint8_t {
    Hello = 0x00,
    Keyframe = 0x01,
    NonKeyframe = 0x02,
    Result = 0x81,
    Bye = 0xFF,
};

/// HELLO payload: width u16, height u16, channels u8, patch u16, config hash u64.
/// A zero hash means the camera does not pin the engine configuration.
struct HelloMsg {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint8_t channels = 0;
    std::uint16_t patch_size = 0;
    std::uint64_t config_hash = 0;
    friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

/// KEYFRAME payload: frame_id u64, w u16, h u16, c u8, pixels.
struct KeyframeMsg {
    std::uint64_t frame_id = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint8_t channels = 0;
    std::vector<std::uint8_t> pixels;
    friend bool operator==(const KeyframeMsg&, const KeyframeMsg&) = default;
};

/// NONKEYFRAME payload: frame_id u64, count u32, count x (index u32, block).
/// The block size is implied by the payload length.
struct NonKeyframeMsg {
    std::uint64_t frame_id = 0;
    std::vector<std::uint32_t> indices;
    std::vector<std::vector<std::uint8_t>> patches;
    friend bool operator==(const NonKeyframeMsg&, const NonKeyframeMsg&) = default;
};

/// RESULT payload: frame_id u64, count u32, count x (x1 y1 x2 y2 score f32, class u16).
struct WireDetection {
    float x1 = 0, y1 = 0, x2 = 0, y2 = 0, score = 0;
    std::uint16_t class_id = 0;
    friend bool operator==(const WireDetection&, const WireDetection&) = default;
};

struct ResultMsg {
    std::uint64_t frame_id = 0;
    std::vector<WireDetection> detections;
    friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};

struct ByeMsg {
    friend bool operator==(const ByeMsg&, const ByeMsg&) = default;
};

using Message = std::variant<HelloMsg, KeyframeMsg, NonKeyframeMsg, ResultMsg, ByeMsg>;

MessageType type_of(const Message& m);
std::string to_string(MessageType t);

enum class ProtocolErrc {
    Truncated,        // fewer bytes than the header or declared payload
    BadMagic,
    BadVersion,
    UnknownType,
    LengthMismatch,   // payload length disagrees with its declared contents
    InvalidContent,   // well-framed but semantically invalid
    UnexpectedMessage,  // violates the session grammar
};

std::string to_string(ProtocolErrc e);

class ProtocolError : public std::runtime_error {
public:
    ProtocolError(ProtocolErrc code, const std::string& what)
        : std::runtime_error(to_string(code) + ": " + what), code_(code) {}
    ProtocolErrc code() const { return code_; }

private:
    ProtocolErrc code_;
};

std::vector<std::uint8_t> encode_message(const Message& m);
/// Exact encoded length without materializing the bytes.
std::size_t encoded_size(const Message& m);

/// Decodes exactly one complete frame; trailing bytes are a length error.
Message decode_message(std::span<const std::uint8_t> bytes);

/// Total frame length announced by a header, or nullopt if fewer than
/// kHeaderSize bytes are available. Validates magic, version and type.
std::optional<std::size_t> peek_frame_length(std::span<const std::uint8_t> bytes);

/// Splits a byte stream into frames; throws on malformed input or a partial tail.
std::vector<Message> decode_stream(std::span<const std::uint8_t> bytes);

Detection from_wire(const WireDetection& d);
WireDetection to_wire(const Detection& d);

}  // namespace arena
