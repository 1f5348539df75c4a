// SPDX-License-Identifier: Apache-2.0
#include "arena/vit_engine.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "arena/rng.hpp"

namespace arena {

void EngineConfig::validate() const {
    if (patch_size <= 0 || dim <= 0 || depth < 0 || heads <= 0 || mlp_ratio <= 0)
        throw InvalidArgument("engine dimensions must be positive");
    if (dim % heads != 0) throw InvalidArgument("embedding dim must be divisible by the head count");
    if (channels != 1 && channels != 3) throw InvalidArgument("engine channels must be 1 or 3");
    if (frame_width <= 0 || frame_height <= 0 || frame_width % patch_size != 0 || frame_height % patch_size != 0)
        throw InvalidArgument("frame dimensions must be divisible by the patch size");
    if ((frame_width / patch_size) % 2 != 0 || (frame_height / patch_size) % 2 != 0)
        throw InvalidArgument("patch grid must have even rows and columns for the stride-2 pyramid level");
    if (patch_size > 0xFFFF || dim > 0xFFFF || depth > 0xFFFF || heads > 0xFFFF || mlp_ratio > 0xFFFF ||
        frame_width > 0xFFFF || frame_height > 0xFFFF)
        throw InvalidArgument("engine dimensions exceed 16 bits");
}

std::uint64_t EngineConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    };
    for (int v : {patch_size, dim, depth, heads, mlp_ratio, channels, frame_width, frame_height})
        mix(static_cast<std::uint64_t>(v));
    mix(weight_seed);
    return h;
}

std::size_t expected_parameter_count(const EngineConfig& cfg) {
    const std::size_t p = static_cast<std::size_t>(cfg.patch_size);
    const std::size_t d = static_cast<std::size_t>(cfg.dim);
    const std::size_t r = static_cast<std::size_t>(cfg.mlp_ratio);
    const std::size_t l = static_cast<std::size_t>(cfg.depth);
    const std::size_t n = static_cast<std::size_t>(cfg.frame_width / cfg.patch_size) *
                          static_cast<std::size_t>(cfg.frame_height / cfg.patch_size);
    const std::size_t c = static_cast<std::size_t>(cfg.channels);
    return (p * p * c + 1) * d + n * d + l * ((4 + 2 * r) * d * d + (9 + r) * d) + (8 + 2 * r) * d * d +
           (17 + r) * d + 4 * (4 * d * d + d) + d + 1;
}

std::uint64_t block_flops(std::uint64_t n, std::uint64_t d) { return 12 * n * d * d + 2 * n * n * d; }

std::uint64_t encoder_flops(std::uint64_t n, std::uint64_t d, std::uint64_t depth) {
    return depth * block_flops(n, d);
}

namespace {

enum class ParamKind { Drawn, Gamma, Beta };

Linear make_linear(int in, int out) { return Linear{Matrix(in, out), std::vector<float>(static_cast<std::size_t>(out))}; }

LayerNormParams make_ln(int d) {
    return LayerNormParams{std::vector<float>(static_cast<std::size_t>(d), 1.0f),
                           std::vector<float>(static_cast<std::size_t>(d), 0.0f)};
}

AttentionParams make_attn(int d) { return AttentionParams{make_linear(d, d), make_linear(d, d), make_linear(d, d), make_linear(d, d)}; }

MlpParams make_mlp(int d, int r) { return MlpParams{make_linear(d, r * d), make_linear(r * d, d)}; }

Conv2x2Params make_conv(int d) {
    return Conv2x2Params{std::vector<float>(static_cast<std::size_t>(4) * d * d), std::vector<float>(static_cast<std::size_t>(d))};
}

template <class L, class F>
void visit_linear(L& lin, F& f) {
    f(std::span(lin.weight.data), ParamKind::Drawn);
    f(std::span(lin.bias), ParamKind::Drawn);
}

template <class N, class F>
void visit_ln(N& ln, F& f) {
    f(std::span(ln.gamma), ParamKind::Gamma);
    f(std::span(ln.beta), ParamKind::Beta);
}

template <class A, class F>
void visit_attn(A& a, F& f) {
    visit_linear(a.q, f);
    visit_linear(a.k, f);
    visit_linear(a.v, f);
    visit_linear(a.o, f);
}

template <class M, class F>
void visit_mlp(M& m, F& f) {
    visit_linear(m.fc1, f);
    visit_linear(m.fc2, f);
}

template <class C, class F>
void visit_conv(C& c, F& f) {
    f(std::span(c.weight), ParamKind::Drawn);
    f(std::span(c.bias), ParamKind::Drawn);
}

// ---- kernels ------------------------------------------------------------

Matrix linear(const Matrix& x, const Linear& lin) {
    const int in = lin.weight.rows;
    const int out = lin.weight.cols;
    Matrix y(x.rows, out);
    for (int i = 0; i < x.rows; ++i) {
        float* yr = y.row(i);
        std::copy(lin.bias.begin(), lin.bias.end(), yr);
        const float* xr = x.row(i);
        for (int k = 0; k < in; ++k) {
            const float xv = xr[k];
            const float* wr = lin.weight.row(k);
            for (int o = 0; o < out; ++o) yr[o] += xv * wr[o];
        }
    }
    return y;
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& ln) {
    constexpr float eps = 1e-6f;
    Matrix y(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const float* xr = x.row(i);
        float mean = 0.0f;
        for (int j = 0; j < x.cols; ++j) mean += xr[j];
        mean /= static_cast<float>(x.cols);
        float var = 0.0f;
        for (int j = 0; j < x.cols; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<float>(x.cols);
        const float inv = 1.0f / std::sqrt(var + eps);
        float* yr = y.row(i);
        for (int j = 0; j < x.cols; ++j)
            yr[j] = (xr[j] - mean) * inv * ln.gamma[static_cast<std::size_t>(j)] + ln.beta[static_cast<std::size_t>(j)];
    }
    return y;
}

void add_inplace(Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f)); }

Matrix mlp(const Matrix& x, const MlpParams& m) {
    Matrix h = linear(x, m.fc1);
    for (float& v : h.data) v = gelu(v);
    return linear(h, m.fc2);
}

// Multi-head scaled dot-product attention of `queries` over `memory`.
Matrix attention(const Matrix& queries, const Matrix& memory, const AttentionParams& a, int heads,
                 std::uint64_t* entries) {
    const Matrix q = linear(queries, a.q);
    const Matrix k = linear(memory, a.k);
    const Matrix v = linear(memory, a.v);
    const int d = q.cols;
    const int dh = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    Matrix ctx(q.rows, d);
    std::vector<float> scores(static_cast<std::size_t>(k.rows));
    for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        for (int i = 0; i < q.rows; ++i) {
            const float* qi = q.row(i) + off;
            float mx = -std::numeric_limits<float>::infinity();
            for (int j = 0; j < k.rows; ++j) {
                const float* kj = k.row(j) + off;
                float s = 0.0f;
                for (int t = 0; t < dh; ++t) s += qi[t] * kj[t];
                s *= scale;
                scores[static_cast<std::size_t>(j)] = s;
                mx = std::max(mx, s);
            }
            float sum = 0.0f;
            for (int j = 0; j < k.rows; ++j) {
                float& s = scores[static_cast<std::size_t>(j)];
                s = std::exp(s - mx);
                sum += s;
            }
            float* ci = ctx.row(i) + off;
            for (int j = 0; j < k.rows; ++j) {
                const float pj = scores[static_cast<std::size_t>(j)] / sum;
                const float* vj = v.row(j) + off;
                for (int t = 0; t < dh; ++t) ci[t] += pj * vj[t];
            }
        }
    }
    if (entries) *entries += static_cast<std::uint64_t>(q.rows) * static_cast<std::uint64_t>(k.rows);
    return linear(ctx, a.o);
}

FeatureMap tokens_to_grid(const Matrix& tokens, const PatchGrid& grid) {
    FeatureMap fm(grid.rows(), grid.cols(), tokens.cols);
    std::copy(tokens.data.begin(), tokens.data.end(), fm.data.begin());
    return fm;
}

FeatureMap deconv2x2(const FeatureMap& in, const Conv2x2Params& p) {
    const int c = in.channels;
    FeatureMap out(in.height * 2, in.width * 2, c);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            const float* src = in.at(y, x);
            for (int ky = 0; ky < 2; ++ky) {
                for (int kx = 0; kx < 2; ++kx) {
                    float* dst = out.at(2 * y + ky, 2 * x + kx);
                    std::copy(p.bias.begin(), p.bias.end(), dst);
                    const float* w = p.weight.data() + static_cast<std::size_t>(ky * 2 + kx) * c * c;
                    for (int i = 0; i < c; ++i) {
                        const float sv = src[i];
                        const float* wr = w + static_cast<std::size_t>(i) * c;
                        for (int o = 0; o < c; ++o) dst[o] += sv * wr[o];
                    }
                }
            }
        }
    }
    return out;
}

FeatureMap conv2x2_stride2(const FeatureMap& in, const Conv2x2Params& p) {
    const int c = in.channels;
    FeatureMap out(in.height / 2, in.width / 2, c);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            float* dst = out.at(y, x);
            std::copy(p.bias.begin(), p.bias.end(), dst);
            for (int ky = 0; ky < 2; ++ky) {
                for (int kx = 0; kx < 2; ++kx) {
                    const float* src = in.at(2 * y + ky, 2 * x + kx);
                    const float* w = p.weight.data() + static_cast<std::size_t>(ky * 2 + kx) * c * c;
                    for (int i = 0; i < c; ++i) {
                        const float sv = src[i];
                        const float* wr = w + static_cast<std::size_t>(i) * c;
                        for (int o = 0; o < c; ++o) dst[o] += sv * wr[o];
                    }
                }
            }
        }
    }
    return out;
}

TokenSequence splice(const TokenSequence& pool, const TokenSequence& fresh) {
    TokenSequence full = pool;
    const int d = pool.tokens.cols;
    for (std::size_t r = 0; r < fresh.indices.size(); ++r) {
        const int idx = fresh.indices[r];
        std::copy_n(fresh.tokens.row(static_cast<int>(r)), d, full.tokens.row(idx));
    }
    return full;
}

// Little-endian helpers for the weights file.
template <class T>
void put_le(std::ostream& os, T v) {
    std::array<char, sizeof(T)> b{};
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
    os.write(b.data(), b.size());
}

template <class T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> b{};
    is.read(reinterpret_cast<char*>(b.data()), b.size());
    if (!is) throw InvalidArgument("weights file truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
}

constexpr std::array<char, 4> kWeightsMagic{'A', 'V', 'W', 'T'};
constexpr std::uint8_t kWeightsVersion = 1;

}  // namespace

template <class Self, class F>
void Engine::visit(Self& self, F&& f) {
    auto& w = self.w_;
    visit_linear(w.patch_embed, f);
    f(std::span(w.pos_embed.data), ParamKind::Drawn);
    for (auto& b : w.blocks) {
        visit_ln(b.ln1, f);
        visit_attn(b.attn, f);
        visit_ln(b.ln2, f);
        visit_mlp(b.mlp, f);
    }
    visit_ln(w.mfr.ln_self, f);
    visit_attn(w.mfr.self_attn, f);
    visit_ln(w.mfr.ln_query, f);
    visit_ln(w.mfr.ln_memory, f);
    visit_attn(w.mfr.cross_attn, f);
    visit_ln(w.mfr.ln_mlp, f);
    visit_mlp(w.mfr.mlp, f);
    visit_conv(w.deconv_f1a, f);
    visit_conv(w.deconv_f1b, f);
    visit_conv(w.deconv_f2, f);
    visit_conv(w.conv_f4, f);
    visit_linear(w.head, f);
}

Engine::Engine(EngineConfig cfg) : Engine(cfg, true) {}

Engine::Engine(EngineConfig cfg, bool seeded) : cfg_(cfg) {
    cfg_.validate();
    grid_ = cfg_.grid();
    const int d = cfg_.dim;
    w_.patch_embed = make_linear(cfg_.patch_bytes(), d);
    w_.pos_embed = Matrix(grid_.count(), d);
    w_.blocks.reserve(static_cast<std::size_t>(cfg_.depth));
    for (int l = 0; l < cfg_.depth; ++l)
        w_.blocks.push_back(EncoderBlockParams{make_ln(d), make_attn(d), make_ln(d), make_mlp(d, cfg_.mlp_ratio)});
    w_.mfr = DecoderLayerParams{make_ln(d), make_attn(d), make_ln(d), make_ln(d), make_attn(d), make_ln(d),
                                make_mlp(d, cfg_.mlp_ratio)};
    w_.deconv_f1a = make_conv(d);
    w_.deconv_f1b = make_conv(d);
    w_.deconv_f2 = make_conv(d);
    w_.conv_f4 = make_conv(d);
    w_.head = make_linear(d, 1);
    if (!seeded) return;

    Xorshift64Star rng(cfg_.weight_seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    visit(*this, [&](std::span<float> s, ParamKind kind) {
        if (kind != ParamKind::Drawn) return;
        for (float& v : s) v = static_cast<float>(rng.uniform(-bound, bound));
    });
}

std::size_t Engine::parameter_count() const {
    std::size_t n = 0;
    visit(*this, [&n](auto s, ParamKind) { n += s.size(); });
    return n;
}

std::vector<float> Engine::flat_parameters() const {
    std::vector<float> out;
    out.reserve(parameter_count());
    visit(*this, [&out](auto s, ParamKind) { out.insert(out.end(), s.begin(), s.end()); });
    return out;
}

void Engine::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open weights file for writing: " + path.string());
    os.write(kWeightsMagic.data(), kWeightsMagic.size());
    put_le<std::uint8_t>(os, kWeightsVersion);
    for (int v : {cfg_.patch_size, cfg_.dim, cfg_.depth, cfg_.heads, cfg_.mlp_ratio, cfg_.frame_width, cfg_.frame_height})
        put_le<std::uint16_t>(os, static_cast<std::uint16_t>(v));
    put_le<std::uint64_t>(os, parameter_count());
    visit(*this, [&os](auto s, ParamKind) {
        for (float v : s) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
    });
    if (!os) throw std::runtime_error("failed writing weights file: " + path.string());
}

Engine Engine::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open weights file: " + path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kWeightsMagic) throw InvalidArgument("weights file has bad magic");
    if (get_le<std::uint8_t>(is) != kWeightsVersion) throw InvalidArgument("unsupported weights file version");
    EngineConfig cfg;
    cfg.patch_size = get_le<std::uint16_t>(is);
    cfg.dim = get_le<std::uint16_t>(is);
    cfg.depth = get_le<std::uint16_t>(is);
    cfg.heads = get_le<std::uint16_t>(is);
    cfg.mlp_ratio = get_le<std::uint16_t>(is);
    cfg.frame_width = get_le<std::uint16_t>(is);
    cfg.frame_height = get_le<std::uint16_t>(is);
    const auto declared = get_le<std::uint64_t>(is);
    // The header carries no channel count; it is implied by the parameter count.
    bool matched = false;
    for (int c : {3, 1}) {
        cfg.channels = c;
        cfg.validate();
        if (expected_parameter_count(cfg) == declared) {
            matched = true;
            break;
        }
    }
    if (!matched) throw InvalidArgument("weights file parameter count does not match its architecture");
    Engine e(cfg, false);
    visit(e, [&is](std::span<float> s, ParamKind) {
        for (float& v : s) v = std::bit_cast<float>(get_le<std::uint32_t>(is));
    });
    if (is.peek() != std::char_traits<char>::eof()) throw InvalidArgument("weights file has trailing bytes");
    return e;
}

TokenSequence Engine::embed_patches(std::span<const PatchBlock> patches, std::span<const int> indices) const {
    if (patches.size() != indices.size()) throw InvalidArgument("patch and index counts differ");
    const int in = cfg_.patch_bytes();
    Matrix x(static_cast<int>(patches.size()), in);
    for (std::size_t r = 0; r < patches.size(); ++r) {
        if (patches[r].size() != static_cast<std::size_t>(in)) throw InvalidArgument("patch block size mismatch");
        float* xr = x.row(static_cast<int>(r));
        for (int j = 0; j < in; ++j) xr[j] = static_cast<float>(patches[r][static_cast<std::size_t>(j)]) / 255.0f;
    }
    return TokenSequence{std::vector<int>(indices.begin(), indices.end()), linear(x, w_.patch_embed)};
}

TokenSequence Engine::add_positional(const TokenSequence& ts) const {
    TokenSequence out = ts;
    const int d = cfg_.dim;
    for (std::size_t r = 0; r < ts.indices.size(); ++r) {
        const int idx = ts.indices[r];
        if (idx < 0 || idx >= grid_.count()) throw InvalidArgument("token index out of range");
        float* row = out.tokens.row(static_cast<int>(r));
        const float* pos = w_.pos_embed.row(idx);
        for (int j = 0; j < d; ++j) row[j] += pos[j];
    }
    return out;
}

TokenSequence Engine::encode(const TokenSequence& ts, AttentionStats* stats) const {
    if (stats) stats->encoder_entries.assign(w_.blocks.size(), 0);
    TokenSequence out = ts;
    if (ts.indices.empty()) return out;
    Matrix& z = out.tokens;
    for (std::size_t l = 0; l < w_.blocks.size(); ++l) {
        const auto& b = w_.blocks[l];
        const Matrix n1 = layer_norm(z, b.ln1);
        add_inplace(z, attention(n1, n1, b.attn, cfg_.heads, stats ? &stats->encoder_entries[l] : nullptr));
        add_inplace(z, mlp(layer_norm(z, b.ln2), b.mlp));
    }
    return out;
}

FeatureMap Engine::mfr(const TokenSequence& z_full, const TokenSequence& z0_full, AttentionStats* stats) const {
    const auto n = static_cast<std::size_t>(grid_.count());
    if (z_full.size() != n || z0_full.size() != n) throw InvalidArgument("MFR inputs must be full length");
    const auto& p = w_.mfr;
    std::uint64_t* counter = stats ? &stats->mfr_entries : nullptr;
    Matrix x = z_full.tokens;
    const Matrix ns = layer_norm(x, p.ln_self);
    add_inplace(x, attention(ns, ns, p.self_attn, cfg_.heads, counter));
    const Matrix memory = layer_norm(z0_full.tokens, p.ln_memory);
    add_inplace(x, attention(layer_norm(x, p.ln_query), memory, p.cross_attn, cfg_.heads, counter));
    add_inplace(x, mlp(layer_norm(x, p.ln_mlp), p.mlp));
    return tokens_to_grid(x, grid_);
}

FeaturePyramid Engine::build_pyramid(const TokenSequence& z0_full, const TokenSequence& zl_full,
                                     AttentionStats* stats) const {
    if (stats) stats->mfr_entries = 0;
    FeaturePyramid pyr;
    pyr.f3 = mfr(zl_full, z0_full, stats);
    const FeatureMap base = tokens_to_grid(z0_full.tokens, grid_);
    pyr.f2 = deconv2x2(base, w_.deconv_f2);
    pyr.f1 = deconv2x2(deconv2x2(base, w_.deconv_f1a), w_.deconv_f1b);
    pyr.f4 = conv2x2_stride2(pyr.f3, w_.conv_f4);
    return pyr;
}

FeaturePyramid Engine::keyframe_infer(const Frame& frame, MemoryTokenPools& pools, AttentionStats* stats) const {
    if (frame.width != cfg_.frame_width || frame.height != cfg_.frame_height || frame.channels != cfg_.channels)
        throw InvalidArgument("keyframe does not match the engine configuration");
    const auto patches = patchify(frame, grid_);
    std::vector<int> all(patches.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    TokenSequence z0_tilde = embed_patches(patches, all);
    TokenSequence zl = encode(add_positional(z0_tilde), stats);
    FeaturePyramid pyr = build_pyramid(z0_tilde, zl, stats);
    pools.pool_a = std::move(z0_tilde);
    pools.pool_b = std::move(zl);
    return pyr;
}

FeaturePyramid Engine::nonkeyframe_infer(std::span<const PatchBlock> patches, const PoISet& poi,
                                         MemoryTokenPools& pools, AttentionStats* stats) const {
    if (!pools.initialized()) throw InvalidArgument("memory token pools are not initialized");
    if (patches.size() != poi.size()) throw InvalidArgument("patch count does not match the PoI set");
    for (int idx : poi.indices())
        if (idx < 0 || idx >= grid_.count()) throw InvalidArgument("PoI index out of range");
    const TokenSequence sparse = embed_patches(patches, poi.indices());
    const TokenSequence sparse_out = encode(add_positional(sparse), stats);
    TokenSequence z0_full = splice(pools.pool_a, sparse);
    TokenSequence zl_full = splice(pools.pool_b, sparse_out);
    FeaturePyramid pyr = build_pyramid(z0_full, zl_full, stats);
    pools.pool_a = std::move(z0_full);
    pools.pool_b = std::move(zl_full);
    return pyr;
}

}  // namespace arena
