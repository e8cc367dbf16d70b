#include "speechbio/landmarks.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

namespace speechbio {

std::size_t LandmarkTrack::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

void LandmarkTrack::validate() const {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorCode::InvalidArgument, "landmark fps must be > 0");
    if (frames.size() != valid.size()) throw Error(ErrorCode::InvalidArgument, "frame/validity length mismatch");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!valid[i]) continue;
        for (const Point& p : frames[i]) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw Error(ErrorCode::InvalidArgument, "non-finite landmark on valid frame " + std::to_string(i));
            }
        }
    }
}

std::filesystem::path landmark_sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

namespace {

std::string expected_header() {
    std::string h = "frame,time_s,valid";
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        h += ",x" + std::to_string(i) + ",y" + std::to_string(i);
    }
    return h;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view field, bool allow_empty, const std::string& where) {
    if (field.empty() || field == "nan" || field == "NaN") {
        if (allow_empty) return std::numeric_limits<double>::quiet_NaN();
        throw Error(ErrorCode::ParseError, where + ": empty number");
    }
    // std::from_chars for double is unavailable on older libstdc++; strtod on a copy.
    const std::string copy(field);
    char* end = nullptr;
    const double v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size()) throw Error(ErrorCode::ParseError, where + ": bad number '" + copy + "'");
    return v;
}

}  // namespace

LandmarkTrack read_landmark_csv(const std::filesystem::path& path, std::optional<double> fps) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    LandmarkTrack track;
    if (fps) {
        track.fps = *fps;
    } else {
        const auto sidecar = landmark_sidecar_path(path);
        std::ifstream side(sidecar);
        if (!side) throw Error(ErrorCode::MissingFile, "no fps given and no sidecar " + sidecar.string());
        try {
            track.fps = nlohmann::json::parse(side).at("fps").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, sidecar.string() + ": " + e.what());
        }
    }

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header()) throw Error(ErrorCode::ParseError, path.string() + ": unexpected header");

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        const std::string where = path.string() + ":" + std::to_string(row);
        if (fields.size() != 3 + 2 * kLandmarkCount) throw Error(ErrorCode::ParseError, where + ": wrong column count");
        const double frame_index = parse_double(fields[0], false, where);
        if (frame_index != static_cast<double>(track.frames.size())) {
            throw Error(ErrorCode::ParseError, where + ": frame indices must be consecutive from 0");
        }
        const bool valid = fields[2] == "1";
        if (!valid && fields[2] != "0") throw Error(ErrorCode::ParseError, where + ": valid must be 0 or 1");
        FaceFrame frame;
        for (std::size_t i = 0; i < kLandmarkCount; ++i) {
            frame[i].x = parse_double(fields[3 + 2 * i], !valid, where);
            frame[i].y = parse_double(fields[4 + 2 * i], !valid, where);
        }
        track.frames.push_back(frame);
        track.valid.push_back(valid);
    }
    track.validate();
    return track;
}

void write_landmark_csv(const std::filesystem::path& path, const LandmarkTrack& track, bool write_sidecar) {
    track.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << expected_header() << '\n';
    char buf[64];
    for (std::size_t f = 0; f < track.frames.size(); ++f) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f) / track.fps);
        out << f << ',' << buf << ',' << (track.valid[f] ? 1 : 0);
        for (const Point& p : track.frames[f]) {
            if (track.valid[f]) {
                std::snprintf(buf, sizeof buf, ",%.9g,%.9g", p.x, p.y);
                out << buf;
            } else {
                out << ",,";
            }
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
    if (write_sidecar) {
        std::ofstream side(landmark_sidecar_path(path));
        side << nlohmann::json{{"fps", track.fps}}.dump() << '\n';
    }
}

}  // namespace speechbio
