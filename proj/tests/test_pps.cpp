// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "arena/patch_grid.hpp"
#include "arena/pps.hpp"
#include "helpers.hpp"

using namespace arena;

namespace {

Frame flat(int w, int h, std::uint8_t v) {
    Frame f(1, w, h, 1);
    std::fill(f.pixels.begin(), f.pixels.end(), v);
    return f;
}

}  // namespace

TEST_SUITE("pps") {

TEST_CASE("sample_count is a tolerant ceiling") {
    CHECK(sample_count(1000, 0.171) == 171);
    CHECK(sample_count(10, 0.9) == 9);
    CHECK(sample_count(11, 0.9) == 10);
    CHECK(sample_count(7, 1.0) == 7);
    CHECK(sample_count(0, 0.5) == 0);
    CHECK(sample_count(3, 0.01) == 1);
    for (std::size_t n = 1; n < 400; ++n)
        for (double p : {0.1, 0.25, 0.3, 0.7, 0.9}) {
            const auto k = sample_count(n, p);
            CHECK(static_cast<double>(k) >= p * n - 1e-9);
            CHECK(static_cast<double>(k) < p * n + 1.0);
        }
}

TEST_CASE("hand-traced single box") {
    const PatchGrid g(48, 48, 16);
    const Frame a = flat(48, 48, 80);
    const BBox boxes[] = {BBox{34, 18, 40, 26}};
    PpsConfig cfg{1.0, 200, 0, 0};
    Xorshift64Star rng(0);
    CHECK(sample_pois(a, a, boxes, g, cfg, rng).indices() == std::vector<int>{5});

    cfg.margin = 1;
    CHECK(sample_pois(a, a, boxes, g, cfg, rng).indices() == std::vector<int>{1, 2, 4, 5, 7, 8});
}

TEST_CASE("empty inputs give an empty set") {
    const PatchGrid g(48, 48, 16);
    const Frame a = flat(48, 48, 80);
    Xorshift64Star rng(0);
    CHECK(sample_pois(a, a, {}, g, PpsConfig{}, rng).empty());
}

TEST_CASE("frame differences above F join the region") {
    const PatchGrid g(48, 48, 16);
    const Frame a = flat(48, 48, 0);
    Frame b = a;
    b.pixels[0] = 200;    // patch 0 sum exactly F: excluded
    b.pixels[47] = 101;   // patch 2 ...
    b.pixels[46] = 100;   // ... sum 201: included
    PpsConfig cfg{1.0, 200, 1, 0};
    CHECK(sampling_region(a, b, {}, g, cfg).indices() == std::vector<int>{2});
}

TEST_CASE("sampled sets are deterministic subsets of the region") {
    const PatchGrid g(128, 128, 16);
    const Frame a = test::random_frame(1, 128, 128, 3, 1);
    const Frame b = test::random_frame(2, 128, 128, 3, 2);
    const BBox boxes[] = {BBox{20, 20, 50, 70}, BBox{90, 10, 120, 30}};
    PpsConfig cfg{0.6, 200, 1, 99};
    const PoISet region = sampling_region(a, a, boxes, g, cfg);
    Xorshift64Star r1(cfg.rng_seed), r2(cfg.rng_seed);
    for (int i = 0; i < 20; ++i) {
        const PoISet s1 = sample_pois(a, a, boxes, g, cfg, r1);
        const PoISet s2 = sample_pois(a, a, boxes, g, cfg, r2);
        CHECK(s1 == s2);
        CHECK(s1.size() == sample_count(region.size(), 0.6));
        for (int idx : s1.indices()) CHECK(region.contains(idx));
    }
    // Noise everywhere: every patch changes, so the region is the whole grid.
    CHECK(sampling_region(a, b, {}, g, cfg).size() == 64);
}

TEST_CASE("random_sample is uniform over the region") {
    const PatchGrid g(160, 160, 16);
    const PoISet region = PoISet::all(g);
    Xorshift64Star rng(5);
    std::vector<int> hits(100, 0);
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        const PoISet s = random_sample(region, 0.3, rng);
        for (int i : s.indices()) ++hits[static_cast<std::size_t>(i)];
    }
    // Each patch is drawn with probability 0.3; 5 sigma band.
    const double mean = 0.3 * trials;
    const double sigma = std::sqrt(trials * 0.3 * 0.7);
    for (int h : hits) CHECK(std::abs(h - mean) < 5 * sigma);
}

TEST_CASE("configuration is validated") {
    const PatchGrid g(48, 48, 16);
    const Frame a = flat(48, 48, 0);
    Xorshift64Star rng(0);
    CHECK_THROWS_AS(sample_pois(a, a, {}, g, PpsConfig{0.0, 200, 1, 0}, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_pois(a, a, {}, g, PpsConfig{1.5, 200, 1, 0}, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_pois(a, a, {}, g, PpsConfig{0.5, 200, -1, 0}, rng), InvalidArgument);
    const BBox bad[] = {BBox{10, 10, 5, 5}};
    CHECK_THROWS_AS(sample_pois(a, a, bad, g, PpsConfig{}, rng), InvalidArgument);
}

}  // TEST_SUITE
