// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "arena/akis.hpp"
#include "helpers.hpp"

using namespace arena;

namespace {

GreyFrame noise(int w, int h, std::uint64_t seed) {
    Xorshift64Star rng(seed);
    GreyFrame g{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    for (auto& p : g.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return g;
}

GreyFrame shifted(const GreyFrame& a, int dx, int dy) {
    GreyFrame b = a;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            const int sx = x - dx, sy = y - dy;
            b.pixels[static_cast<std::size_t>(y * a.width + x)] =
                (sx >= 0 && sx < a.width && sy >= 0 && sy < a.height) ? a.at(sx, sy) : 0;
        }
    return b;
}

FlowField constant_field(int rows, int cols, int bs, FlowVector v) {
    return FlowField{bs, rows, cols, std::vector<FlowVector>(static_cast<std::size_t>(rows * cols), v)};
}

}  // namespace

TEST_SUITE("akis") {

TEST_CASE("step_interval follows the threshold rule") {
    const AkisConfig cfg{10.0, 1, 15, 8, 8};
    CHECK(step_interval(3.0, 1, cfg) == 2);
    CHECK(step_interval(3.0, 15, cfg) == 15);
    CHECK(step_interval(12.0, 15, cfg) == 14);
    CHECK(step_interval(12.0, 1, cfg) == 1);
    CHECK(step_interval(10.0, 7, cfg) == 7);
}

TEST_CASE("block matching recovers a global shift") {
    const AkisConfig cfg{10.0, 1, 15, 8, 6};
    const GreyFrame a = noise(64, 64, 1);
    for (auto [dx, dy] : {std::pair{3, -2}, std::pair{0, 0}, std::pair{-5, 4}, std::pair{6, 6}}) {
        const FlowField f = estimate_flow(a, shifted(a, dx, dy), cfg);
        CHECK(f.rows == 8);
        CHECK(f.cols == 8);
        for (int r = 1; r < 7; ++r)
            for (int c = 1; c < 7; ++c) CHECK(f.at(r, c) == FlowVector{dx, dy});
    }
}

TEST_CASE("flat frames resolve ties to zero motion") {
    const AkisConfig cfg{10.0, 1, 15, 8, 4};
    GreyFrame a{32, 32, std::vector<std::uint8_t>(32 * 32, 77)};
    const FlowField f = estimate_flow(a, a, cfg);
    for (const auto& v : f.vectors) CHECK(v == FlowVector{0, 0});
}

TEST_CASE("flow rejects incompatible frames") {
    const AkisConfig cfg{};
    CHECK_THROWS_AS(estimate_flow(noise(32, 32, 1), noise(32, 16, 1), cfg), InvalidArgument);
    CHECK_THROWS_AS(estimate_flow(noise(30, 32, 1), noise(30, 32, 1), cfg), InvalidArgument);
}

TEST_CASE("box mask selects intersecting blocks") {
    const FlowField f = constant_field(4, 4, 8, {});
    const BBox boxes[] = {BBox{8, 8, 16, 16}, BBox{25, 0, 26, 3}};
    const auto m = box_mask(f, boxes);
    int count = 0;
    for (bool b : m) count += b;
    CHECK(count == 2);
    CHECK(m[5]);
    CHECK(m[3]);
}

TEST_CASE("mean flow is area weighted over masked blocks") {
    FlowField f = constant_field(2, 2, 8, FlowVector{3, 4});
    f.vectors[3] = FlowVector{0, 0};
    const BBox one[] = {BBox{0, 0, 8, 8}};
    CHECK(mean_box_flow(f, one) == doctest::Approx(5.0));
    const BBox all[] = {BBox{0, 0, 16, 16}};
    CHECK(mean_box_flow(f, all) == doctest::Approx(15.0 / 4.0));
    CHECK(mean_box_flow(f, {}) < 0);
}

TEST_CASE("next_interval holds K without motion evidence") {
    const AkisConfig cfg{10.0, 1, 15, 8, 8};
    const FlowField f = constant_field(2, 2, 8, FlowVector{0, 0});
    CHECK(next_interval(f, {}, 4, cfg) == 4);
    const BBox b[] = {BBox{0, 0, 4, 4}};
    CHECK(next_interval(f, b, 4, cfg) == 5);
    CHECK(next_interval(constant_field(2, 2, 8, FlowVector{10, 0}), b, 4, cfg) == 4);
    CHECK(next_interval(constant_field(2, 2, 8, FlowVector{11, 0}), b, 4, cfg) == 3);
    CHECK_THROWS_AS(next_interval(f, b, 16, cfg), InvalidArgument);
}

TEST_CASE("interval walks between the bounds") {
    const AkisConfig cfg{10.0, 1, 15, 8, 8};
    const BBox b[] = {BBox{0, 0, 16, 16}};
    const FlowField still = constant_field(2, 2, 8, FlowVector{1, 0});
    const FlowField fast = constant_field(2, 2, 8, FlowVector{0, 12});
    int k = 1;
    for (int i = 0; i < 14; ++i) k = next_interval(still, b, k, cfg);
    CHECK(k == 15);
    CHECK(next_interval(still, b, k, cfg) == 15);
    for (int i = 0; i < 14; ++i) k = next_interval(fast, b, k, cfg);
    CHECK(k == 1);
    CHECK(next_interval(fast, b, k, cfg) == 1);
}

TEST_CASE("configuration is validated") {
    CHECK_THROWS_AS((AkisConfig{10.0, 0, 15, 8, 8}.validate()), InvalidArgument);
    CHECK_THROWS_AS((AkisConfig{10.0, 5, 4, 8, 8}.validate()), InvalidArgument);
    CHECK_THROWS_AS((AkisConfig{10.0, 1, 15, 0, 8}.validate()), InvalidArgument);
    CHECK_NOTHROW((AkisConfig{10.0, 3, 3, 8, 0}.validate()));
}

}  // TEST_SUITE
