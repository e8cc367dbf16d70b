#pragma once

#include "speechbio/audio.hpp"

#include <optional>
#include <span>
#include <vector>

namespace speechbio {

struct PitchConfig {
    double f_min = 60.0;
    double f_max = 400.0;
    /// Minimum normalized autocorrelation peak for a frame to count as voiced.
    double voicing_threshold = 0.45;
    double window = 0.040;
    double hop = 0.010;
    /// Frames quieter than this (dB relative to the loudest frame) are unvoiced.
    double silence_db = -50.0;
};

/// Frame-wise F0 track; unvoiced frames hold no value.
struct F0Contour {
    std::vector<double> frame_times;
    std::vector<std::optional<double>> f0_values;
    /// Normalized autocorrelation at the selected lag (0 for silent frames).
    std::vector<double> strengths;
    double frame_hop = 0.0;
    double window = 0.0;

    std::size_t voiced_count() const noexcept;
    /// Arithmetic mean over voiced frames; nullopt when nothing is voiced.
    std::optional<double> mean_f0() const;
};

/// Short-term normalized autocorrelation pitch tracker with parabolic peak refinement.
/// Frames whose best period lies outside [f_min, f_max] are reported unvoiced.
F0Contour estimate_f0(const AudioClip& clip, const PitchConfig& config = {});

struct GlottalCycle {
    double period = 0.0;     ///< seconds to the next cycle peak
    double amplitude = 0.0;  ///< peak amplitude opening the cycle
};

/// Cycle-by-cycle peaks over the longest voiced stretch of `contour`.
std::vector<GlottalCycle> period_sequence(const AudioClip& clip, const F0Contour& contour);

/// 100 * mean |T_i - T_{i-1}| / mean T_i, in percent.
double jitter_local(std::span<const double> periods);

/// 100 * mean |A_i - A_{i-1}| / mean A_i, in percent.
double shimmer_local(std::span<const double> amplitudes);

/// Mean over voiced frames of 10 log10(r / (1 - r)), r the normalized autocorrelation at the period lag.
double hnr(const AudioClip& clip, const F0Contour& contour);

struct CppConfig {
    double f_min = 60.0;
    double f_max = 400.0;
    double window = 0.080;
    double hop = 0.020;
    /// Frames quieter than this (dB relative to the loudest frame) are skipped.
    double silence_db = -40.0;
};

/// Cepstral peak prominence in dB, averaged over frames. The baseline is a least-squares
/// line over the quefrency band [1/f_max, 1/f_min] of the dB power cepstrum.
double cpp(const AudioClip& clip, const CppConfig& config = {});

/// Uncalibrated level: dBFS over the speech intervals plus this offset.
inline constexpr double kIntensityOffsetDb = 90.0;

/// 10 log10(mean square amplitude over `speech`) + kIntensityOffsetDb.
double speech_intensity(const AudioClip& clip, std::span<const Interval> speech);

struct PhonationMetrics {
    double mean_f0 = 0.0;
    double jitter_local = 0.0;
    double shimmer_local = 0.0;
    double hnr = 0.0;
    double cpp = 0.0;
};

PhonationMetrics phonation_metrics(const AudioClip& clip, const PitchConfig& config = {});

}  // namespace speechbio
