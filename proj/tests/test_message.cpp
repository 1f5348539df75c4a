// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "arena/message.hpp"
#include "message_gen.hpp"

using namespace arena;

namespace {

ProtocolErrc decode_error(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_message(bytes);
    } catch (const ProtocolError& e) {
        return e.code();
    }
    FAIL("decode succeeded");
    return ProtocolErrc::InvalidContent;
}

}  // namespace

TEST_SUITE("message") {

TEST_CASE("BYE is exactly ten bytes") {
    CHECK(encode_message(ByeMsg{}) == std::vector<std::uint8_t>{0x41, 0x52, 0x4E, 0x41, 0x01, 0xFF, 0, 0, 0, 0});
}

TEST_CASE("header layout is little-endian") {
    const auto b = encode_message(HelloMsg{0x0102, 0x0304, 3, 16, 0x1122334455667788ULL});
    REQUIRE(b.size() == kHeaderSize + 15);
    CHECK(b[5] == 0x00);
    CHECK(b[6] == 15);
    CHECK(b[10] == 0x02);
    CHECK(b[11] == 0x01);
    CHECK(b[14] == 3);
    CHECK(b[15] == 16);
    CHECK(b[17] == 0x88);
    CHECK(b[24] == 0x11);
}

TEST_CASE("non-keyframe payload size") {
    NonKeyframeMsg n{7, {1, 5, 9}, std::vector<std::vector<std::uint8_t>>(3, std::vector<std::uint8_t>(768, 1))};
    const auto b = encode_message(n);
    CHECK(b.size() == kHeaderSize + 2328);
    CHECK(encoded_size(n) == b.size());
    CHECK(std::get<NonKeyframeMsg>(decode_message(b)) == n);
}

TEST_CASE("random messages round-trip") {
    Xorshift64Star rng(77);
    for (int i = 0; i < 300; ++i) {
        const Message m = test::random_message(rng);
        const auto bytes = encode_message(m);
        CHECK(bytes.size() == encoded_size(m));
        CHECK(decode_message(bytes) == m);
    }
}

TEST_CASE("streams split into frames") {
    Xorshift64Star rng(3);
    std::vector<Message> msgs;
    std::vector<std::uint8_t> stream;
    for (int i = 0; i < 20; ++i) {
        msgs.push_back(test::random_message(rng));
        const auto b = encode_message(msgs.back());
        stream.insert(stream.end(), b.begin(), b.end());
    }
    CHECK(decode_stream(stream) == msgs);
    stream.pop_back();
    CHECK_THROWS_AS(decode_stream(stream), ProtocolError);
}

TEST_CASE("typed errors") {
    const auto bye = encode_message(ByeMsg{});
    CHECK(decode_error({}) == ProtocolErrc::Truncated);
    CHECK(decode_error({0x41, 0x52, 0x4E, 0x41, 0x01, 0xFF, 0, 0}) == ProtocolErrc::Truncated);
    auto b = bye;
    b[0] = 'X';
    CHECK(decode_error(b) == ProtocolErrc::BadMagic);
    CHECK(decode_error({'Z'}) == ProtocolErrc::BadMagic);
    b = bye;
    b[4] = 2;
    CHECK(decode_error(b) == ProtocolErrc::BadVersion);
    b = bye;
    b[5] = 0x42;
    CHECK(decode_error(b) == ProtocolErrc::UnknownType);
    b = bye;
    b.push_back(0);
    CHECK(decode_error(b) == ProtocolErrc::LengthMismatch);
    b = bye;
    b[6] = 1;
    CHECK(decode_error(b) == ProtocolErrc::Truncated);
    b.push_back(0);
    CHECK(decode_error(b) == ProtocolErrc::LengthMismatch);  // BYE carries no payload

    auto hello = encode_message(HelloMsg{});
    hello[6] = 14;
    hello.pop_back();
    CHECK(decode_error(hello) == ProtocolErrc::LengthMismatch);

    KeyframeMsg k{1, 2, 2, 1, {1, 2, 3, 4}};
    auto kb = encode_message(k);
    kb[10 + 8] = 3;  // width 3 now disagrees with the pixel count
    CHECK(decode_error(kb) == ProtocolErrc::LengthMismatch);

    NonKeyframeMsg n{1, {0, 1}, {{1, 2, 3}, {4, 5, 6}}};
    auto nb = encode_message(n);
    nb[10 + 8] = 3;  // three patches cannot split 14 bytes
    CHECK(decode_error(nb) == ProtocolErrc::LengthMismatch);
    nb[10 + 8] = 0;
    CHECK(decode_error(nb) == ProtocolErrc::LengthMismatch);
}

TEST_CASE("peek validates incrementally") {
    const auto b = encode_message(ResultMsg{1, {}});
    for (std::size_t n = 0; n < kHeaderSize; ++n) CHECK_FALSE(peek_frame_length(std::span(b).first(n)).has_value());
    CHECK(peek_frame_length(b) == b.size());
    const std::uint8_t junk[] = {'A', 'R', 'X'};
    CHECK_THROWS_AS(peek_frame_length(junk), ProtocolError);
}

TEST_CASE("encode rejects inconsistent non-keyframes") {
    CHECK_THROWS_AS(encode_message(NonKeyframeMsg{1, {0}, {}}), InvalidArgument);
    CHECK_THROWS_AS(encode_message(NonKeyframeMsg{1, {0, 1}, {{1}, {1, 2}}}), InvalidArgument);
}

TEST_CASE("fuzzed inputs yield a message or a typed error") {
    Xorshift64Star rng(1234);
    int decoded = 0;
    for (int i = 0; i < 3000; ++i) {
        std::vector<std::uint8_t> bytes;
        if (rng.below(2)) {
            bytes = encode_message(test::random_message(rng));
            const auto flips = 1 + rng.below(4);
            for (std::uint64_t f = 0; f < flips; ++f) bytes[rng.below(bytes.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
            if (rng.below(4) == 0) bytes.resize(rng.below(bytes.size() + 1));
        } else {
            bytes.resize(rng.below(64));
            for (auto& x : bytes) x = static_cast<std::uint8_t>(rng.below(256));
        }
        try {
            decode_message(bytes);
            ++decoded;
        } catch (const ProtocolError&) {
        }
    }
    CHECK(decoded > 0);
}

TEST_CASE("wire detections") {
    const Detection d{BBox{1.5, 2, 3, 4.25}, 0.75, 3};
    CHECK(from_wire(to_wire(d)) == d);
    CHECK(to_string(MessageType::NonKeyframe) == "NONKEYFRAME");
}

}  // TEST_SUITE
