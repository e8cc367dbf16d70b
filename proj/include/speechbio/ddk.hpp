#pragma once

#include "speechbio/audio.hpp"
#include "speechbio/timing.hpp"

#include <optional>
#include <span>
#include <vector>

namespace speechbio {

enum class SyllableRateBasis { Articulation, Speaking };

struct DdkConfig {
    double frame = 0.020;
    double hop = 0.005;
    int smoothing_frames = 3;
    double min_gap = 0.080;
    /// Minimum peak prominence of the dB energy envelope.
    double min_prominence_db = 6.0;
    SyllableRateBasis rate_basis = SyllableRateBasis::Articulation;
};

struct DdkMetrics {
    double speaking_duration = 0.0;
    double articulation_duration = 0.0;
    double syllable_rate = 0.0;  ///< syllables/s
    int syllable_count = 0;
    std::optional<double> ctv;   ///< s; absent with fewer than two cycles
};

/// Syllable onsets (s) as prominent peaks of the smoothed energy envelope inside speech segments.
std::vector<double> detect_syllable_onsets(const AudioClip& clip, const SpeechSegmentation& seg,
                                           const DdkConfig& config = {});

/// Sample standard deviation of inter-onset intervals.
double cycle_to_cycle_variation(std::span<const double> onsets);

DdkMetrics ddk_metrics(std::span<const double> onsets, const SpeechSegmentation& seg,
                       const DdkConfig& config = {});

}  // namespace speechbio
