#pragma once

#include "speechbio/audio.hpp"
#include "speechbio/session.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace speechbio {

struct VadConfig {
    double frame = 0.025;
    double hop = 0.010;
    /// Noise floor is this percentile of smoothed frame energies.
    double floor_percentile = 5.0;
    double margin_db = 10.0;
    double min_pause = 0.200;
    double min_speech = 0.100;
    /// Frames below this level (dBFS) are never speech.
    double absolute_floor_db = -60.0;
    /// Moving-average length of the energy smoother, in frames.
    int smoothing_frames = 3;
};

struct SpeechSegmentation {
    std::vector<Interval> segments;

    /// First onset to last offset.
    double total_span() const noexcept;
    /// Sum of segment lengths.
    double speech_time() const noexcept;
};

/// Energy VAD: speech where the smoothed frame energy exceeds the noise floor plus a margin.
/// Pauses shorter than min_pause are bridged; segments shorter than min_speech dropped.
SpeechSegmentation detect_speech(const AudioClip& clip, const VadConfig& config = {});

struct TimingMetrics {
    double speaking_duration = 0.0;     ///< s, onset to offset
    double articulation_duration = 0.0; ///< s, speech only
    double speaking_rate = 0.0;         ///< words/min
    double articulation_rate = 0.0;     ///< words/min
    double ppt = 0.0;                   ///< percent pause time
};

/// Rates use the expected word count of the task, not recognized words.
TimingMetrics timing_metrics(const SpeechSegmentation& seg, int expected_words);

enum class ExclusionReason { SpeakingRate, ArticulationRate, Ppt };

std::string_view to_string(ExclusionReason reason) noexcept;

struct OutlierThresholds {
    double max_speaking_rate = 250.0;
    double max_articulation_rate = 350.0;
    double max_ppt = 80.0;
};

/// Bamboo-passage outlier rule; other tasks are never excluded. nullopt means retained.
std::optional<ExclusionReason> apply_outlier_filter(const TimingMetrics& metrics, const TaskKind& task,
                                                    const OutlierThresholds& thresholds = {});

}  // namespace speechbio
