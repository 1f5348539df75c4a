// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "arena/core.hpp"

namespace arena {

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary PGM (P5) or PPM (P6), maxval 255. Comments in the header are skipped.
Frame decode_pnm(std::span<const std::uint8_t> bytes, std::uint64_t frame_id = 0);
Frame read_pnm(const std::filesystem::path& path, std::uint64_t frame_id = 0);

std::vector<std::uint8_t> encode_pnm(const Frame& frame);
void write_pnm(const std::filesystem::path& path, const Frame& frame);

}  // namespace arena
