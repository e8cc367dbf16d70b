#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

namespace speechbio {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::size_t kLandmarkCount = 68;
using FaceFrame = std::array<Point, kLandmarkCount>;

/// 0-based indices of the 68-point annotation scheme.
namespace lm {
inline constexpr std::size_t kJawCenter = 8;
inline constexpr std::size_t kBrowFirst = 17;
inline constexpr std::size_t kBrowLast = 26;
inline constexpr std::size_t kRightEyeFirst = 36;  // subject's right eye, image left
inline constexpr std::size_t kRightEyeInner = 39;
inline constexpr std::size_t kLeftEyeInner = 42;
inline constexpr std::size_t kLeftEyeFirst = 42;
inline constexpr std::size_t kEyeLast = 47;
inline constexpr std::size_t kMouthRightCorner = 48;
inline constexpr std::size_t kMouthLeftCorner = 54;
inline constexpr std::size_t kOuterLipFirst = 48;
inline constexpr std::size_t kOuterLipLast = 59;
inline constexpr std::size_t kLowerLipOuter = 57;
inline constexpr std::size_t kUpperLipInner = 62;
inline constexpr std::size_t kLowerLipInner = 66;
}  // namespace lm

/// Per-frame 68-point landmarks. Invalid frames (no detection) carry NaN coordinates.
struct LandmarkTrack {
    double fps = 0.0;
    std::vector<FaceFrame> frames;
    std::vector<bool> valid;

    std::size_t size() const noexcept { return frames.size(); }
    std::size_t valid_count() const noexcept;

    /// Checks fps > 0, matching lengths and finite coordinates on valid frames.
    void validate() const;
};

/// Sidecar holding the frame rate: the CSV path with its extension replaced by ".json".
std::filesystem::path landmark_sidecar_path(const std::filesystem::path& csv);

/// Reads `frame,time_s,valid,x0,y0,...,x67,y67`. Without `fps`, the rate comes from the sidecar.
LandmarkTrack read_landmark_csv(const std::filesystem::path& path, std::optional<double> fps = std::nullopt);

/// Writes the CSV and, when `write_sidecar` is set, the fps sidecar.
void write_landmark_csv(const std::filesystem::path& path, const LandmarkTrack& track, bool write_sidecar = true);

}  // namespace speechbio
