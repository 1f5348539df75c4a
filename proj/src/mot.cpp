// SPDX-License-Identifier: Apache-2.0
#include "arena/mot.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace arena {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double to_number(std::string_view field, std::size_t line) {
    field = trim(field);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ParseError(line, "invalid number '" + std::string(field) + "'");
    return v;
}

}  // namespace

AnnotationStore parse_mot_annotations(std::string_view text) {
    AnnotationStore store;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;

        std::vector<double> f;
        while (true) {
            const auto comma = line.find(',');
            f.push_back(to_number(line.substr(0, comma), line_no));
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        if (f.size() < 7) throw ParseError(line_no, "expected at least 7 fields, got " + std::to_string(f.size()));
        if (f[0] < 0 || f[0] != std::floor(f[0])) throw ParseError(line_no, "frame id must be a non-negative integer");
        if (f[4] < 0 || f[5] < 0) throw ParseError(line_no, "negative box size");
        if (f[6] == 0) continue;
        const int cls = f.size() >= 8 ? static_cast<int>(f[7]) : 1;
        store.add(static_cast<std::uint64_t>(f[0]), GroundTruth{BBox{f[2], f[3], f[2] + f[4], f[3] + f[5]}, cls});
    }
    return store;
}

AnnotationStore load_mot_annotations(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open annotations " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_mot_annotations(ss.str());
}

std::string format_mot_annotations(const AnnotationStore& store) {
    std::ostringstream os;
    os.precision(10);
    for (const auto& [frame, list] : store.frames()) {
        int id = 1;
        for (const auto& g : list) {
            os << frame << ',' << id++ << ',' << g.bbox.x1 << ',' << g.bbox.y1 << ',' << g.bbox.width() << ','
               << g.bbox.height() << ",1," << g.class_id << ",1\n";
        }
    }
    return os.str();
}

}  // namespace arena
