#pragma once

#include "speechbio/audio.hpp"
#include "speechbio/landmarks.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace speechbio::synth {

inline constexpr int kSampleRate = 16000;

struct PulseTrainSpec {
    double f0 = 100.0;
    double duration = 1.0;
    double jitter = 0.0;   ///< fraction; each period is T0 (1 +/- jitter) with a random sign
    double shimmer = 0.0;  ///< fraction; each amplitude is A0 (1 +/- shimmer) with a random sign
    double amplitude = 0.5;
    double noise_rms = 0.0;
    /// Amplitudes alternate between `amplitude` and `amplitude * alternate` when nonzero.
    double alternate = 0.0;
    int sample_rate = kSampleRate;
    std::uint64_t seed = 0;
};

struct PulseTrain {
    AudioClip clip;
    std::vector<double> periods;
    std::vector<double> amplitudes;
};

/// Gaussian glottal-like pulses (width 0.1 T0).
PulseTrain pulse_train(const PulseTrainSpec& spec);

struct DdkTrainSpec {
    double rate = 5.0;  ///< syllables/s
    int count = 15;
    /// Sample standard deviation of the inter-onset intervals, planted exactly.
    double ctv = 0.0;
    double carrier_f0 = 150.0;
    double lead = 0.5;
    double tail = 0.5;
    double amplitude = 0.5;
    int sample_rate = kSampleRate;
    std::uint64_t seed = 0;
};

struct DdkTrain {
    AudioClip clip;
    std::vector<double> onsets;
    double articulation = 0.0;  ///< sum of syllable lengths
};

/// Back-to-back syllables with a 15 ms attack and an exponential decay, so the bursts fill
/// the articulation time without silent gaps.
DdkTrain ddk_train(const DdkTrainSpec& spec);

struct ReadingSpec {
    int words = 10;
    double articulation_rate = 200.0;  ///< words/min
    double ppt = 20.0;                 ///< percent pause time
    double f0 = 150.0;
    double lead = 0.4;
    double tail = 0.4;
    double min_pause = 0.35;
    double amplitude = 0.4;
    int sample_rate = kSampleRate;
    std::uint64_t seed = 0;
};

struct Reading {
    AudioClip clip;
    std::vector<Interval> segments;
};

/// Voiced chunks separated by silent pauses sized to the requested pause fraction.
Reading reading(const ReadingSpec& spec);

struct FaceSpec {
    double ild = 100.0;  ///< px between the inner eye corners
    Point center{320.0, 240.0};
    double eye_half_height = 0.135;  ///< in ILD units; EAR = eye_half_height / 0.45
    double mouth_half_width = 0.8;
    double brow_height = 1.0;
};

/// Neutral 68-point face. `jaw` moves the chin and lower lip down by that many px.
FaceFrame face(const FaceSpec& spec, double jaw = 0.0, bool eyes_closed = false);

struct FaceMotionSpec {
    FaceSpec face;
    double fps = 30.0;
    double duration = 10.0;
    double jaw_amplitude = 8.0;  ///< px
    double jaw_frequency = 4.0;  ///< Hz
    double jaw_phase = 0.0;
    int blinks = 2;
    int blink_frames = 3;
    std::uint64_t seed = 0;
};

/// Sinusoidal jaw motion with evenly spread blinks.
LandmarkTrack face_motion(const FaceMotionSpec& spec);

struct Options {
    double f0 = 100.0;
    double jitter = 0.02;
    double shimmer = 0.05;
    double rate = 5.0;
    double ctv = 0.0;
    int count = 15;
    int blinks = 2;
    double jaw_amplitude = 8.0;
};

/// Scenario names accepted by `synthesize`.
const std::vector<std::string>& scenario_names();

/// Writes WAV, landmark CSV, manifests and ground_truth.json under `out_dir`. Returns the
/// ground truth. Throws UnknownScenario.
nlohmann::json synthesize(const std::string& scenario, const std::filesystem::path& out_dir, std::uint64_t seed,
                          const Options& options = {});

}  // namespace speechbio::synth
