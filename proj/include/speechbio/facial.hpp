#pragma once

#include "speechbio/landmarks.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace speechbio {

struct FacialConfig {
    double ear_threshold = 0.2;
    int blink_min_frames = 2;
    /// Longer interior detection gaps reject the track.
    double max_gap = 0.5;
};

/// Median inner-eye-corner distance over valid frames, in pixels.
double interlachrymal_distance(const LandmarkTrack& track);

/// Finite-difference derivatives in px/frame^n. Interior frames use central stencils
/// (second-order for velocity and acceleration, the 5-point stencil for jerk); frames
/// without full support use the one-sided stencil of the same order. Each stencil is
/// exact for polynomials of its derivative order. A series shorter than the stencil
/// leaves that derivative empty.
struct KinematicSeries {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> acceleration;
    std::vector<double> jerk;
};

KinematicSeries derivatives(std::span<const double> position);

/// Absolute shoelace area.
double polygon_area(std::span<const Point> polygon);

/// True when two non-adjacent edges of the closed polygon touch or cross.
bool self_intersecting(std::span<const Point> polygon);

struct MouthGeometry {
    double open = 0.0;        ///< px, inner-lip midline (62-66) vertical distance
    double width = 0.0;       ///< px, corner distance (48-54)
    double area = 0.0;        ///< px^2, outer-lip contour 48-59
    double area_right = 0.0;  ///< px^2, image-left half (subject's right)
    double area_left = 0.0;   ///< px^2, image-right half
};

/// Mouth measures of one frame; the halves are split by the vertical line through the
/// corner midpoint. Throws DegenerateContour for zero-area or self-intersecting lips.
MouthGeometry mouth_geometry(const FaceFrame& frame);

/// Eye aspect ratio averaged over both eyes.
double eye_aspect_ratio(const FaceFrame& frame);

/// Runs of at least `min_frames` consecutive values below `threshold`. NaN entries break runs.
int count_blinks(std::span<const double> ear, double threshold, int min_frames);

/// Blinks per second of valid footage.
double blink_rate(const LandmarkTrack& track, const FacialConfig& config = {});

/// Named facial metrics in canonical order. Pixel measures are divided by the
/// inter-lachrymal distance (areas by its square); eye_blinks stays in 1/s.
struct FacialMetricSet {
    std::vector<std::pair<std::string, double>> values;

    double at(std::string_view name) const;
};

/// Canonical metric names of FacialMetricSet.
const std::vector<std::string>& facial_metric_names();

FacialMetricSet facial_metrics(const LandmarkTrack& track, const FacialConfig& config = {});

}  // namespace speechbio
