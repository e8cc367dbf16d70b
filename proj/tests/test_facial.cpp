#include "speechbio/error.hpp"
#include "speechbio/facial.hpp"
#include "speechbio/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace speechbio;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

LandmarkTrack motion(std::uint64_t seed, int blinks = 2, double amplitude = 8.0) {
    synth::FaceMotionSpec spec;
    spec.seed = seed;
    spec.blinks = blinks;
    spec.jaw_amplitude = amplitude;
    spec.jaw_phase = 0.3;
    return synth::face_motion(spec);
}

LandmarkTrack transformed(LandmarkTrack t, double scale, double dx, double dy) {
    for (auto& f : t.frames) {
        for (auto& p : f) p = {scale * p.x + dx, scale * p.y + dy};
    }
    return t;
}

LandmarkTrack static_track(std::size_t frames, double fps = 30.0) {
    LandmarkTrack t;
    t.fps = fps;
    t.frames.assign(frames, synth::face({}));
    t.valid.assign(frames, true);
    return t;
}

}  // namespace

TEST_CASE("inter-lachrymal distance") {
    const auto t = static_track(10);
    CHECK(interlachrymal_distance(t) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(interlachrymal_distance(transformed(t, 2.0, 0.0, 0.0)) == doctest::Approx(200.0).epsilon(1e-12));
    auto none = t;
    none.valid.assign(10, false);
    CHECK(code_of([&] { interlachrymal_distance(none); }) == ErrorCode::NoValidFrames);
}

TEST_CASE("derivative stencils") {
    const auto lin = derivatives(std::vector<double>{0.0, 1.0, 2.0, 3.0});
    for (double v : lin.velocity) CHECK(v == 1.0);
    for (double a : lin.acceleration) CHECK(a == 0.0);
    for (double j : lin.jerk) CHECK(j == 0.0);

    std::vector<double> quad(40);
    for (std::size_t k = 0; k < quad.size(); ++k) quad[k] = 0.5 * static_cast<double>(k * k);
    const auto q = derivatives(quad);
    for (double a : q.acceleration) CHECK(a == 1.0);
    for (double j : q.jerk) CHECK(j == 0.0);
    for (std::size_t k = 1; k + 1 < quad.size(); ++k) CHECK(q.velocity[k] == static_cast<double>(k));

    std::vector<double> cubic(12);
    for (std::size_t k = 0; k < cubic.size(); ++k) cubic[k] = std::pow(static_cast<double>(k), 3) / 6.0;
    for (double j : derivatives(cubic).jerk) CHECK(j == doctest::Approx(1.0).epsilon(1e-12));

    // Alternating positions: central differences cancel inside, one-sided ends see the step.
    const auto alt = derivatives(std::vector<double>{0.0, 1.0, 0.0, 1.0, 0.0, 1.0});
    CHECK(alt.velocity == std::vector<double>{1.0, 0.0, 0.0, 0.0, 0.0, 1.0});
    CHECK(alt.acceleration == std::vector<double>{-2.0, -2.0, 2.0, -2.0, 2.0, 2.0});

    CHECK(derivatives(std::vector<double>{0.0, 1.0, 4.0}).jerk.empty());
    CHECK(code_of([] { derivatives(std::vector<double>{1.0}); }) == ErrorCode::TrackTooShort);
}

TEST_CASE("shoelace area") {
    const std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(polygon_area(square) == 1.0);
    const std::vector<Point> clockwise{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    CHECK(polygon_area(clockwise) == 1.0);
    std::vector<Point> tripled;
    for (const auto& p : square) tripled.push_back({3.0 * p.x, 3.0 * p.y});
    CHECK(polygon_area(tripled) == 9.0);
    CHECK_FALSE(self_intersecting(square));
    const std::vector<Point> bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    CHECK(self_intersecting(bowtie));
}

TEST_CASE("mouth geometry") {
    const auto f = synth::face({});
    const auto g = mouth_geometry(f);
    CHECK(g.area > 0.0);
    CHECK(g.area_right == doctest::Approx(g.area_left).epsilon(1e-12));
    CHECK(g.area_right + g.area_left == doctest::Approx(g.area).epsilon(1e-6));
    CHECK(g.width == doctest::Approx(160.0).epsilon(1e-12));
    CHECK(g.open == doctest::Approx(17.0).epsilon(1e-12));

    FaceFrame tripled = f;
    for (auto& p : tripled) p = {3.0 * p.x, 3.0 * p.y};
    const auto g3 = mouth_geometry(tripled);
    CHECK(g3.area == doctest::Approx(9.0 * g.area).epsilon(1e-12));
    CHECK(g3.open == doctest::Approx(3.0 * g.open).epsilon(1e-12));

    // Asymmetric but convex: the halves still add up.
    FaceFrame skew = synth::face({}, 10.0);
    skew[50].y -= 5.0;
    const auto gs = mouth_geometry(skew);
    CHECK(gs.area_right + gs.area_left == doctest::Approx(gs.area).epsilon(1e-6));

    FaceFrame flat = f;
    for (std::size_t k = lm::kOuterLipFirst; k <= lm::kOuterLipLast; ++k) flat[k].y = 100.0;
    CHECK(code_of([&] { mouth_geometry(flat); }) == ErrorCode::DegenerateContour);
    FaceFrame crossed = f;
    std::swap(crossed[49], crossed[57]);
    CHECK(code_of([&] { mouth_geometry(crossed); }) == ErrorCode::DegenerateContour);
}

TEST_CASE("blink counting") {
    std::vector<double> ear(300, 0.3);
    for (std::size_t k : {50u, 51u, 52u, 200u, 201u}) ear[k] = 0.1;
    CHECK(count_blinks(ear, 0.2, 2) == 2);
    ear[100] = 0.1;
    CHECK(count_blinks(ear, 0.2, 2) == 2);
    ear[51] = NAN;
    CHECK(count_blinks(ear, 0.2, 2) == 1);
    CHECK(count_blinks(std::vector<double>(100, 0.3), 0.2, 2) == 0);
}

TEST_CASE("blink rate of two dips in ten seconds") {
    const auto t = motion(1, 2);
    CHECK(t.size() == 300);
    CHECK(blink_rate(t) == 0.2);
    CHECK(blink_rate(motion(1, 0)) == 0.0);

    synth::FaceMotionSpec single;
    single.blinks = 3;
    single.blink_frames = 1;
    CHECK(blink_rate(synth::face_motion(single)) == 0.0);

    auto short_track = static_track(20);
    CHECK(code_of([&] { blink_rate(short_track); }) == ErrorCode::TrackTooShort);
}

TEST_CASE("static face has no motion") {
    const auto m = facial_metrics(static_track(60));
    for (const auto& [name, value] : m.values) {
        if (name[0] == 'v' || name[0] == 'a' || name[0] == 'j' || name.ends_with("_path")) CHECK(value == 0.0);
    }
    CHECK(m.at("S_ratio_avg") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.at("eye_open_avg") == doctest::Approx(0.27).epsilon(1e-12));
    CHECK(m.at("eyebrow_vpos_avg") > 0.0);
}

TEST_CASE("jaw path against the analytic trajectory") {
    synth::FaceMotionSpec spec;
    spec.jaw_amplitude = 6.0;
    spec.jaw_frequency = 2.0;
    spec.blinks = 0;
    const auto t = synth::face_motion(spec);
    double path = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double a = std::sin(2.0 * std::numbers::pi * spec.jaw_frequency * static_cast<double>(k) / spec.fps);
        const double b = std::sin(2.0 * std::numbers::pi * spec.jaw_frequency * static_cast<double>(k - 1) / spec.fps);
        path += spec.jaw_amplitude * std::abs(a - b);
    }
    const auto m = facial_metrics(t);
    CHECK(m.at("JC_path") == doctest::Approx(path / spec.face.ild).epsilon(1e-9));
    CHECK(m.at("LL_path") == doctest::Approx(0.6 * path / spec.face.ild).epsilon(1e-9));
}

TEST_CASE("path grows with the trajectory prefix") {
    const auto full = motion(2);
    double previous = 0.0;
    for (std::size_t n : {40u, 80u, 150u, 300u}) {
        LandmarkTrack prefix = full;
        prefix.frames.resize(n);
        prefix.valid.resize(n);
        const double path = facial_metrics(prefix).at("JC_path") * interlachrymal_distance(prefix);
        CHECK(path >= previous);
        previous = path;
    }
}

TEST_CASE("normalized metrics are scale and translation invariant") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> scale(0.3, 4.0), shift(-500.0, 500.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto base = motion(seed, 2, 5.0 + static_cast<double>(seed));
        const auto a = facial_metrics(base);
        const auto b = facial_metrics(transformed(base, scale(rng), shift(rng), shift(rng)));
        REQUIRE(a.values.size() == b.values.size());
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            CHECK(a.values[i].first == b.values[i].first);
            CHECK(std::abs(a.values[i].second - b.values[i].second) <= 1e-9);
        }
    }
}

TEST_CASE("family ordering and signs") {
    const auto m = facial_metrics(motion(3));
    for (const char* family : {"vLL", "vJC", "vLL_abs", "vJC_abs", "aLL", "aJC", "aLL_abs", "aJC_abs", "jLL", "jJC",
                               "jLL_abs", "jJC_abs"}) {
        const std::string f = family;
        CHECK(m.at(f + "_min") <= m.at(f + "_avg"));
        CHECK(m.at(f + "_avg") <= m.at(f + "_max"));
    }
    for (const char* s : {"S_max", "S_avg", "S_R_max", "S_R_avg", "S_L_max", "S_L_avg"}) CHECK(m.at(s) >= 0.0);
    CHECK(m.at("S_ratio_avg") > 0.0);
    CHECK(m.at("S_ratio_avg") <= 1.0);
    CHECK(m.at("open_avg") <= m.at("open_max"));
    CHECK(m.at("S_avg") <= m.at("S_max"));
    CHECK(m.values.size() == facial_metric_names().size());
    CHECK_THROWS_AS(m.at("nonexistent"), Error);
}

TEST_CASE("invalid frames and detection gaps") {
    auto t = motion(4);
    for (std::size_t k = 100; k < 105; ++k) {
        t.valid[k] = false;
        for (auto& p : t.frames[k]) p = {NAN, NAN};
    }
    const auto m = facial_metrics(t);
    for (const auto& [name, value] : m.values) CHECK(std::isfinite(value));

    for (std::size_t k = 105; k < 130; ++k) {
        t.valid[k] = false;
        for (auto& p : t.frames[k]) p = {NAN, NAN};
    }
    CHECK(code_of([&] { facial_metrics(t); }) == ErrorCode::TrackGap);

    auto invalid = static_track(10);
    invalid.valid.assign(10, false);
    for (auto& f : invalid.frames)
        for (auto& p : f) p = {NAN, NAN};
    CHECK(code_of([&] { facial_metrics(invalid); }) == ErrorCode::NoValidFrames);
}
