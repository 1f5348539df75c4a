// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <string>

#include "doctest.h"
#include "arena/image_io.hpp"
#include "arena/mot.hpp"
#include "arena/synth.hpp"
#include "helpers.hpp"

using namespace arena;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("io") {

TEST_CASE("PNM round-trip") {
    for (int c : {1, 3}) {
        const Frame f = test::random_frame(3, 7, 5, c, 9 + c);
        const auto enc = encode_pnm(f);
        CHECK(enc[1] == (c == 1 ? '5' : '6'));
        CHECK(decode_pnm(enc, 3) == f);
    }
}

TEST_CASE("PNM header comments and whitespace") {
    auto b = bytes_of("P5\n# made by hand\n2 # width\n 2\n255\n");
    b.insert(b.end(), {1, 2, 3, 4});
    const Frame f = decode_pnm(b, 8);
    CHECK(f.width == 2);
    CHECK(f.height == 2);
    CHECK(f.frame_id == 8);
    CHECK(f.pixels == std::vector<std::uint8_t>{1, 2, 3, 4});

    // A raster byte that looks like whitespace is not skipped.
    auto s = bytes_of("P5 1 1 255\n");
    s.push_back('\n');
    CHECK(decode_pnm(s).pixels == std::vector<std::uint8_t>{'\n'});
}

TEST_CASE("PNM errors") {
    CHECK_THROWS_WITH_AS(decode_pnm(bytes_of("P7\n1 1\n255\n\x01")), "unsupported PNM format P7", ImageError);
    CHECK_THROWS_AS(decode_pnm(bytes_of("P3\n1 1\n255\n1 2 3")), ImageError);
    CHECK_THROWS_AS(decode_pnm(bytes_of("XX")), ImageError);
    CHECK_THROWS_AS(decode_pnm(bytes_of("P5\n2 2\n255\n\x01")), ImageError);
    CHECK_THROWS_AS(decode_pnm(bytes_of("P5\n2 2\n65535\n")), ImageError);
    CHECK_THROWS_AS(decode_pnm(bytes_of("P5\n0 2\n255\n")), ImageError);
    CHECK_THROWS_AS(decode_pnm(bytes_of("P5\n2")), ImageError);
    CHECK_THROWS_AS(read_pnm("/nonexistent/frame.pgm"), ImageError);
}

TEST_CASE("PNM files") {
    const auto dir = std::filesystem::temp_directory_path() / "arena_io_test";
    std::filesystem::create_directories(dir);
    const Frame f = test::random_frame(1, 4, 4, 3, 1);
    write_pnm(dir / "a.ppm", f);
    CHECK(read_pnm(dir / "a.ppm", 1) == f);
    std::filesystem::remove_all(dir);
}

TEST_CASE("MOT ground truth parsing") {
    const auto store = parse_mot_annotations(
        "1,1,912,484,97,109,1,1,1\n"
        "1,2,10,20,30,40,0,1,1\n"
        "\n"
        "2, 3, 1.5, 2.5, 10, 10, 1\r\n"
        "2,4,0,0,5,5,1,7,0.3");
    CHECK(store.frame_count() == 2);
    REQUIRE(store.boxes(1).size() == 1);
    CHECK(store.boxes(1)[0].bbox == BBox{912, 484, 1009, 593});
    CHECK(store.boxes(1)[0].class_id == 1);
    REQUIRE(store.boxes(2).size() == 2);
    CHECK(store.boxes(2)[0].bbox == BBox{1.5, 2.5, 11.5, 12.5});
    CHECK(store.boxes(2)[1].class_id == 7);
}

TEST_CASE("MOT errors carry the line number") {
    try {
        parse_mot_annotations("1,1,0,0,1,1,1\n1,1,0,0,1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_mot_annotations("1,1,0,0,1,x,1"), ParseError);
    CHECK_THROWS_AS(parse_mot_annotations("1.5,1,0,0,1,1,1"), ParseError);
    CHECK_THROWS_AS(parse_mot_annotations("1,1,0,0,-1,1,1"), ParseError);
    CHECK_THROWS_AS(load_mot_annotations("/nonexistent/gt.txt"), std::runtime_error);
}

TEST_CASE("MOT format round-trips") {
    AnnotationStore s;
    s.add(1, {BBox{1, 2, 11, 22}, 1});
    s.add(1, {BBox{0.5, 0.25, 4.5, 8.25}, 3});
    s.add(9, {BBox{5, 5, 6, 6}, 2});
    CHECK(parse_mot_annotations(format_mot_annotations(s)) == s);
}

TEST_CASE("synthetic scenes") {
    SynthSpec spec;
    spec.width = 32;
    spec.height = 24;
    spec.frames = 12;
    spec.start_id = 5;
    spec.seed = 3;
    spec.objects = {SynthObject{0, 0, 8, 8, 5, 3, 2}};
    const auto a = synth_sequence(spec);
    const auto b = synth_sequence(spec);
    REQUIRE(a.frames.size() == 12);
    CHECK(a.frames.front().frame_id == 5);
    CHECK(a.frames.back().frame_id == 16);
    CHECK(a.annotations == b.annotations);
    for (std::size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i] == b.frames[i]);

    // Positions reflect inside [0, W - w] x [0, H - h].
    const std::vector<int> xs{0, 5, 10, 15, 20, 23, 18, 13, 8, 3, 2, 7};
    const std::vector<int> ys{0, 3, 6, 9, 12, 15, 14, 11, 8, 5, 2, 1};
    for (std::size_t i = 0; i < 12; ++i) {
        const auto& g = a.annotations.boxes(5 + i);
        REQUIRE(g.size() == 1);
        CHECK(g[0].bbox == BBox{double(xs[i]), double(ys[i]), double(xs[i] + 8), double(ys[i] + 8)});
        CHECK(g[0].class_id == 2);
    }

    spec.flat_background = 50;
    const auto flat = synth_sequence(spec);
    CHECK(flat.frames[0].at(31, 23, 1) == 50);

    spec.objects = {SynthObject{30, 0, 8, 8, 0, 0, 1}};
    CHECK_THROWS_AS(synth_sequence(spec), InvalidArgument);
}

}  // TEST_SUITE
