// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "arena/core.hpp"
#include "arena/patch_grid.hpp"

namespace arena {

struct EngineConfig {
    int patch_size = 16;
    int dim = 64;
    int depth = 4;
    int heads = 4;
    int mlp_ratio = 4;
    int channels = 3;
    int frame_width = 64;
    int frame_height = 64;
    std::uint64_t weight_seed = 0;

    void validate() const;
    PatchGrid grid() const { return PatchGrid(frame_width, frame_height, patch_size); }
    int patch_bytes() const { return patch_size * patch_size * channels; }
    /// FNV-1a over the architecture fields and seed; carried in HELLO.
    std::uint64_t hash() const;

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Dense row-major float matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}

    float* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
    float& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    float operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Tokens with the patch index each row came from.
struct TokenSequence {
    std::vector<int> indices;
    Matrix tokens;

    std::size_t size() const { return indices.size(); }
    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Cached full-frame tokens: pool_a before the encoder (no positional
/// embedding), pool_b after it. Empty until the first keyframe.
struct MemoryTokenPools {
    TokenSequence pool_a;
    TokenSequence pool_b;

    bool initialized() const { return !pool_a.indices.empty(); }
    void reset() { *this = MemoryTokenPools{}; }
    friend bool operator==(const MemoryTokenPools&, const MemoryTokenPools&) = default;
};

/// Height x width x channels, channels fastest.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, 0.0f) {}

    float* at(int y, int x) { return data.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
    const float* at(int y, int x) const { return data.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
};

/// f1..f4 at 4x, 2x, 1x and 0.5x the patch grid resolution
/// (1/4, 1/8, 1/16, 1/32 of the frame for P = 16).
struct FeaturePyramid {
    FeatureMap f1, f2, f3, f4;
};

/// Query-key score entries computed per encoder layer during the last call.
struct AttentionStats {
    std::vector<std::uint64_t> encoder_entries;
    std::uint64_t mfr_entries = 0;
};

struct Linear {
    Matrix weight;  // in x out
    std::vector<float> bias;
};

struct LayerNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
};

struct AttentionParams {
    Linear q, k, v, o;
};

struct MlpParams {
    Linear fc1, fc2;
};

struct EncoderBlockParams {
    LayerNormParams ln1;
    AttentionParams attn;
    LayerNormParams ln2;
    MlpParams mlp;
};

struct DecoderLayerParams {
    LayerNormParams ln_self;
    AttentionParams self_attn;
    LayerNormParams ln_query;
    LayerNormParams ln_memory;
    AttentionParams cross_attn;
    LayerNormParams ln_mlp;
    MlpParams mlp;
};

/// 2x2 kernel, stride 2. Weights laid out [ky][kx][in][out].
struct Conv2x2Params {
    std::vector<float> weight;
    std::vector<float> bias;
};

/// Seeded or file-loaded weights of the backbone plus the objectness stub.
///
/// Parameter order (also the weights-file order):
///   patch projection W (P^2 C x D), b (D); positional table (N x D);
///   per encoder block: ln1, q, k, v, o, ln2, fc1 (D x rD), fc2 (rD x D);
///   MFR: ln_self, self q/k/v/o, ln_query, ln_memory, cross q/k/v/o, ln_mlp, fc1, fc2;
///   deconv f1a, deconv f1b, deconv f2, conv f4 (each 4 D^2 + D); head (D + 1).
/// Every linear layer stores weight then bias; layer norms store gamma then beta.
/// Seeded init draws every weight and bias uniformly in [-1/sqrt(D), 1/sqrt(D)]
/// in that order; layer norms start at gamma = 1, beta = 0 and consume no draws.
///
/// Closed-form count with N patches, C channels, ratio r:
///   (P^2 C + 1) D + N D + L((4 + 2r) D^2 + (9 + r) D)
///   + (8 + 2r) D^2 + (17 + r) D + 4 (4 D^2 + D) + D + 1
struct EngineWeights {
    Linear patch_embed;
    Matrix pos_embed;
    std::vector<EncoderBlockParams> blocks;
    DecoderLayerParams mfr;
    Conv2x2Params deconv_f1a;
    Conv2x2Params deconv_f1b;
    Conv2x2Params deconv_f2;
    Conv2x2Params conv_f4;
    Linear head;
};

class Engine {
public:
    explicit Engine(EngineConfig cfg);

    /// Reads a weights file; the architecture comes from its header.
    static Engine load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const EngineConfig& config() const { return cfg_; }
    const PatchGrid& grid() const { return grid_; }
    const EngineWeights& weights() const { return w_; }
    EngineWeights& mutable_weights() { return w_; }

    std::size_t parameter_count() const;
    /// Flat copy of all parameters in file order.
    std::vector<float> flat_parameters() const;

    TokenSequence embed_patches(std::span<const PatchBlock> patches, std::span<const int> indices) const;
    TokenSequence add_positional(const TokenSequence& ts) const;
    TokenSequence encode(const TokenSequence& ts, AttentionStats* stats = nullptr) const;
    FeatureMap mfr(const TokenSequence& z_full, const TokenSequence& z0_full, AttentionStats* stats = nullptr) const;

    FeaturePyramid keyframe_infer(const Frame& frame, MemoryTokenPools& pools, AttentionStats* stats = nullptr) const;
    FeaturePyramid nonkeyframe_infer(std::span<const PatchBlock> patches, const PoISet& poi, MemoryTokenPools& pools,
                                     AttentionStats* stats = nullptr) const;

    /// Pyramid assembly from full-length pre- and post-encoder sequences.
    FeaturePyramid build_pyramid(const TokenSequence& z0_full, const TokenSequence& zl_full,
                                 AttentionStats* stats = nullptr) const;

private:
    Engine(EngineConfig cfg, bool seeded);
    template <class Self, class F>
    static void visit(Self& self, F&& f);

    EngineConfig cfg_;
    PatchGrid grid_;
    EngineWeights w_;
};

/// Closed-form parameter count, independent of any allocated engine.
std::size_t expected_parameter_count(const EngineConfig& cfg);

/// Analytic cost of one encoder block: 12 N D^2 + 2 N^2 D.
std::uint64_t block_flops(std::uint64_t n, std::uint64_t d);
/// L blocks.
std::uint64_t encoder_flops(std::uint64_t n, std::uint64_t d, std::uint64_t depth);

}  // namespace arena
