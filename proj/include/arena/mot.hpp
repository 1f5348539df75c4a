// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "arena/evaluation.hpp"

namespace arena {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// MOT-challenge CSV: frame,id,x,y,w,h,conf[,class[,vis]]. Rows with conf 0
/// are ignored; class defaults to 1 when absent.
AnnotationStore parse_mot_annotations(std::string_view text);
AnnotationStore load_mot_annotations(const std::filesystem::path& path);

/// Writes rows with conf 1 and visibility 1.
std::string format_mot_annotations(const AnnotationStore& store);

}  // namespace arena
