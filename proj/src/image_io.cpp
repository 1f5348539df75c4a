// SPDX-License-Identifier: Apache-2.0
#include "arena/image_io.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

namespace arena {
namespace {

class HeaderCursor {
public:
    explicit HeaderCursor(std::span<const std::uint8_t> b) : b_(b) {}

    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (std::isspace(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    long number() {
        skip_space_and_comments();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw ImageError("malformed PNM header");
        long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_] - '0');
            if (v > 1'000'000) throw ImageError("PNM header value out of range");
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw ImageError("malformed PNM header");
        ++pos_;
    }

    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 2;
};

}  // namespace

Frame decode_pnm(std::span<const std::uint8_t> bytes, std::uint64_t frame_id) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw ImageError("not a PNM file");
    int channels = 0;
    if (bytes[1] == '5') channels = 1;
    else if (bytes[1] == '6') channels = 3;
    else throw ImageError(std::string("unsupported PNM format P") + static_cast<char>(bytes[1]));
    HeaderCursor cur(bytes);
    const long w = cur.number();
    const long h = cur.number();
    const long maxval = cur.number();
    if (maxval != 255) throw ImageError("only maxval 255 is supported");
    if (w <= 0 || h <= 0) throw ImageError("PNM dimensions must be positive");
    cur.single_space();
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    if (bytes.size() - cur.pos() < need) throw ImageError("PNM raster truncated");
    auto px = bytes.subspan(cur.pos(), need);
    return Frame(frame_id, static_cast<int>(w), static_cast<int>(h), channels, {px.begin(), px.end()});
}

Frame read_pnm(const std::filesystem::path& path, std::uint64_t frame_id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ImageError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    try {
        return decode_pnm(bytes, frame_id);
    } catch (const ImageError& e) {
        throw ImageError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_pnm(const Frame& frame) {
    frame.validate();
    const std::string header = std::string(frame.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(frame.width) +
                               " " + std::to_string(frame.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
    return out;
}

void write_pnm(const std::filesystem::path& path, const Frame& frame) {
    const auto bytes = encode_pnm(frame);
    std::ofstream os(path, std::ios::binary);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw ImageError("cannot write " + path.string());
}

}  // namespace arena
