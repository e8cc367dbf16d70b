#include "speechbio/facial.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace speechbio {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

double interlachrymal_distance(const LandmarkTrack& track) {
    std::vector<double> d;
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
        if (track.valid[i]) d.push_back(distance(track.frames[i][lm::kRightEyeInner], track.frames[i][lm::kLeftEyeInner]));
    }
    if (d.empty()) throw Error(ErrorCode::NoValidFrames, "no valid landmark frames");
    return median(std::move(d));
}

KinematicSeries derivatives(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw Error(ErrorCode::TrackTooShort, "derivatives need at least two frames");
    KinematicSeries k;
    k.position.assign(x.begin(), x.end());

    k.velocity.resize(n);
    k.velocity[0] = x[1] - x[0];
    k.velocity[n - 1] = x[n - 1] - x[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) k.velocity[i] = 0.5 * (x[i + 1] - x[i - 1]);

    if (n >= 3) {
        k.acceleration.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t s = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, n - 3);
            k.acceleration[i] = x[s + 2] - 2.0 * x[s + 1] + x[s];
        }
    }
    if (n >= 4) {
        k.jerk.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= 2 && i + 2 < n) {
                k.jerk[i] = 0.5 * (x[i + 2] - 2.0 * x[i + 1] + 2.0 * x[i - 1] - x[i - 2]);
            } else {
                const std::size_t s = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, n - 4);
                k.jerk[i] = x[s + 3] - 3.0 * x[s + 2] + 3.0 * x[s + 1] - x[s];
            }
        }
    }
    return k;
}

double polygon_area(std::span<const Point> polygon) {
    double twice = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Point& a = polygon[i];
        const Point& b = polygon[(i + 1) % polygon.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(twice);
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_touch(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
    const double d1 = cross(q1, q2, p1);
    const double d2 = cross(q1, q2, p2);
    const double d3 = cross(p1, p2, q1);
    const double d4 = cross(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    if (d1 == 0 && on_segment(p1, q1, q2)) return true;
    if (d2 == 0 && on_segment(p2, q1, q2)) return true;
    if (d3 == 0 && on_segment(q1, p1, p2)) return true;
    if (d4 == 0 && on_segment(q2, p1, p2)) return true;
    return false;
}

// Part of a polygon on one side of the vertical line x = cut (Sutherland-Hodgman).
std::vector<Point> clip_vertical(std::span<const Point> polygon, double cut, bool keep_left) {
    const auto inside = [&](const Point& p) { return keep_left ? p.x <= cut : p.x >= cut; };
    std::vector<Point> out;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Point& cur = polygon[i];
        const Point& next = polygon[(i + 1) % polygon.size()];
        const bool cin = inside(cur);
        const bool nin = inside(next);
        if (cin) out.push_back(cur);
        if (cin != nin) {
            const double t = (cut - cur.x) / (next.x - cur.x);
            out.push_back({cut, cur.y + t * (next.y - cur.y)});
        }
    }
    return out;
}

}  // namespace

bool self_intersecting(std::span<const Point> polygon) {
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
            if (segments_touch(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n])) return true;
        }
    }
    return false;
}

MouthGeometry mouth_geometry(const FaceFrame& frame) {
    std::span<const Point> contour(frame.data() + lm::kOuterLipFirst, lm::kOuterLipLast - lm::kOuterLipFirst + 1);
    MouthGeometry g;
    g.open = std::abs(frame[lm::kLowerLipInner].y - frame[lm::kUpperLipInner].y);
    g.width = distance(frame[lm::kMouthRightCorner], frame[lm::kMouthLeftCorner]);
    g.area = polygon_area(contour);
    if (!(g.area > 0.0) || self_intersecting(contour)) {
        throw Error(ErrorCode::DegenerateContour, "outer lip contour is degenerate");
    }
    const double cut = 0.5 * (frame[lm::kMouthRightCorner].x + frame[lm::kMouthLeftCorner].x);
    const auto right = clip_vertical(contour, cut, true);
    const auto left = clip_vertical(contour, cut, false);
    g.area_right = right.size() >= 3 ? polygon_area(right) : 0.0;
    g.area_left = left.size() >= 3 ? polygon_area(left) : 0.0;
    return g;
}

double eye_aspect_ratio(const FaceFrame& f) {
    const auto ear = [&](std::size_t first) {
        const double vertical = distance(f[first + 1], f[first + 5]) + distance(f[first + 2], f[first + 4]);
        return vertical / (2.0 * distance(f[first], f[first + 3]));
    };
    return 0.5 * (ear(lm::kRightEyeFirst) + ear(lm::kLeftEyeFirst));
}

int count_blinks(std::span<const double> ear, double threshold, int min_frames) {
    int blinks = 0;
    int run = 0;
    for (double v : ear) {
        if (!std::isnan(v) && v < threshold) {
            ++run;
            continue;
        }
        if (run >= min_frames) ++blinks;
        run = 0;
    }
    if (run >= min_frames) ++blinks;
    return blinks;
}

double blink_rate(const LandmarkTrack& track, const FacialConfig& config) {
    track.validate();
    const double valid_seconds = static_cast<double>(track.valid_count()) / track.fps;
    if (valid_seconds < 1.0) throw Error(ErrorCode::TrackTooShort, "blink rate needs at least 1 s of valid frames");
    std::vector<double> ear(track.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < track.size(); ++i) {
        if (track.valid[i]) ear[i] = eye_aspect_ratio(track.frames[i]);
    }
    return count_blinks(ear, config.ear_threshold, config.blink_min_frames) / valid_seconds;
}

double FacialMetricSet::at(std::string_view name) const {
    for (const auto& [n, v] : values) {
        if (n == name) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "no facial metric named " + std::string(name));
}

namespace {

const char* const kKinematicFamilies[] = {"vLL", "vJC", "vLL_abs", "vJC_abs", "aLL", "aJC", "aLL_abs", "aJC_abs",
                                          "jLL", "jJC", "jLL_abs", "jJC_abs"};

struct Summary {
    double max = -std::numeric_limits<double>::infinity();
    double min = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t n = 0;

    void add(double v) {
        max = std::max(max, v);
        min = std::min(min, v);
        sum += v;
        ++n;
    }
    double avg() const { return sum / static_cast<double>(n); }
};

// Maximal runs [begin, end) of consecutive valid frames.
std::vector<std::pair<std::size_t, std::size_t>> valid_runs(const LandmarkTrack& track) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < track.size();) {
        if (!track.valid[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < track.size() && track.valid[j]) ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    return runs;
}

}  // namespace

const std::vector<std::string>& facial_metric_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v = {"open_max",        "open_avg",        "width_max",       "width_avg",
                                      "LL_path",         "JC_path",         "eye_open_max",    "eye_open_avg",
                                      "eyebrow_vpos_max", "eyebrow_vpos_avg"};
        for (const char* family : kKinematicFamilies) {
            for (const char* suffix : {"_max", "_avg", "_min"}) v.push_back(std::string(family) + suffix);
        }
        for (const char* s : {"S_max", "S_avg", "S_R_max", "S_R_avg", "S_L_max", "S_L_avg", "S_ratio_avg", "eye_blinks"}) {
            v.emplace_back(s);
        }
        return v;
    }();
    return names;
}

FacialMetricSet facial_metrics(const LandmarkTrack& track, const FacialConfig& config) {
    track.validate();
    if (track.valid_count() == 0) throw Error(ErrorCode::NoValidFrames, "no valid landmark frames");
    if (track.valid_count() < 2) throw Error(ErrorCode::TrackTooShort, "need at least two valid frames");

    const auto runs = valid_runs(track);
    for (std::size_t r = 1; r < runs.size(); ++r) {
        const double gap = static_cast<double>(runs[r].first - runs[r - 1].second) / track.fps;
        if (gap > config.max_gap) {
            throw Error(ErrorCode::TrackGap, "detection gap of " + std::to_string(gap) + " s");
        }
    }

    const double ild = interlachrymal_distance(track);
    if (!(ild > 0.0)) throw Error(ErrorCode::InvalidArgument, "inter-lachrymal distance is zero");

    Summary open, width, eye_open, brow, area, area_r, area_l, ratio;
    for (std::size_t i = 0; i < track.size(); ++i) {
        if (!track.valid[i]) continue;
        const FaceFrame& f = track.frames[i];
        const MouthGeometry* mouth = nullptr;
        MouthGeometry g;
        try {
            g = mouth_geometry(f);
            mouth = &g;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateContour) throw;
        }
        open.add(std::abs(f[lm::kLowerLipInner].y - f[lm::kUpperLipInner].y));
        width.add(distance(f[lm::kMouthRightCorner], f[lm::kMouthLeftCorner]));
        eye_open.add(0.25 * (distance(f[37], f[41]) + distance(f[38], f[40]) + distance(f[43], f[47]) +
                             distance(f[44], f[46])));
        double eye_y = 0.0, brow_y = 0.0;
        for (std::size_t k = lm::kRightEyeFirst; k <= lm::kEyeLast; ++k) eye_y += f[k].y;
        for (std::size_t k = lm::kBrowFirst; k <= lm::kBrowLast; ++k) brow_y += f[k].y;
        brow.add(eye_y / 12.0 - brow_y / 10.0);
        if (mouth != nullptr) {
            area.add(mouth->area);
            area_r.add(mouth->area_right);
            area_l.add(mouth->area_left);
            const double hi = std::max(mouth->area_right, mouth->area_left);
            ratio.add(hi > 0.0 ? std::min(mouth->area_right, mouth->area_left) / hi : 0.0);
        }
    }
    if (area.n == 0) throw Error(ErrorCode::DegenerateContour, "no frame has a usable lip contour");

    // Kinematic families in kKinematicFamilies order.
    std::array<Summary, 12> kin;
    double ll_path = 0.0, jc_path = 0.0;
    const std::size_t points[2] = {lm::kLowerLipOuter, lm::kJawCenter};
    for (const auto& [begin, end] : runs) {
        for (std::size_t p = 0; p < 2; ++p) {
            std::vector<double> xs, ys;
            for (std::size_t i = begin; i < end; ++i) {
                xs.push_back(track.frames[i][points[p]].x);
                ys.push_back(track.frames[i][points[p]].y);
            }
            double& path = p == 0 ? ll_path : jc_path;
            for (std::size_t i = 1; i < xs.size(); ++i) path += std::hypot(xs[i] - xs[i - 1], ys[i] - ys[i - 1]);
            if (xs.size() < 2) continue;
            const KinematicSeries kx = derivatives(xs);
            const KinematicSeries ky = derivatives(ys);
            const std::vector<double>* dx[3] = {&kx.velocity, &kx.acceleration, &kx.jerk};
            const std::vector<double>* dy[3] = {&ky.velocity, &ky.acceleration, &ky.jerk};
            for (std::size_t order = 0; order < 3; ++order) {
                Summary& signed_family = kin[order * 4 + p];
                Summary& abs_family = kin[order * 4 + 2 + p];
                for (std::size_t i = 0; i < dy[order]->size(); ++i) {
                    signed_family.add((*dy[order])[i]);
                    abs_family.add(std::hypot((*dx[order])[i], (*dy[order])[i]));
                }
            }
        }
    }
    for (const Summary& s : kin) {
        if (s.n == 0) throw Error(ErrorCode::TrackTooShort, "no run of four consecutive valid frames");
    }

    const double ild2 = ild * ild;
    FacialMetricSet out;
    auto& v = out.values;
    v.emplace_back("open_max", open.max / ild);
    v.emplace_back("open_avg", open.avg() / ild);
    v.emplace_back("width_max", width.max / ild);
    v.emplace_back("width_avg", width.avg() / ild);
    v.emplace_back("LL_path", ll_path / ild);
    v.emplace_back("JC_path", jc_path / ild);
    v.emplace_back("eye_open_max", eye_open.max / ild);
    v.emplace_back("eye_open_avg", eye_open.avg() / ild);
    v.emplace_back("eyebrow_vpos_max", brow.max / ild);
    v.emplace_back("eyebrow_vpos_avg", brow.avg() / ild);
    for (std::size_t f = 0; f < kin.size(); ++f) {
        const std::string family = kKinematicFamilies[f];
        v.emplace_back(family + "_max", kin[f].max / ild);
        v.emplace_back(family + "_avg", kin[f].avg() / ild);
        v.emplace_back(family + "_min", kin[f].min / ild);
    }
    v.emplace_back("S_max", area.max / ild2);
    v.emplace_back("S_avg", area.avg() / ild2);
    v.emplace_back("S_R_max", area_r.max / ild2);
    v.emplace_back("S_R_avg", area_r.avg() / ild2);
    v.emplace_back("S_L_max", area_l.max / ild2);
    v.emplace_back("S_L_avg", area_l.avg() / ild2);
    v.emplace_back("S_ratio_avg", ratio.avg());
    v.emplace_back("eye_blinks", blink_rate(track, config));
    return out;
}

}  // namespace speechbio
