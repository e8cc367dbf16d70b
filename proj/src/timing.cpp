#include "speechbio/timing.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>

namespace speechbio {

double SpeechSegmentation::total_span() const noexcept {
    if (segments.empty()) return 0.0;
    return segments.back().end - segments.front().start;
}

double SpeechSegmentation::speech_time() const noexcept {
    double total = 0.0;
    for (const auto& s : segments) total += s.length();
    return total;
}

namespace {

double percentile(std::vector<double> values, double pct) {
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

SpeechSegmentation detect_speech(const AudioClip& clip, const VadConfig& config) {
    if (clip.duration() < 0.5) throw Error(ErrorCode::ClipTooShort, "VAD needs at least 0.5 s of audio");
    const double fs = clip.sample_rate();
    const auto x = clip.samples();
    const auto frame = static_cast<std::size_t>(std::lround(config.frame * fs));
    const auto hop = static_cast<std::size_t>(std::lround(config.hop * fs));
    if (frame == 0 || hop == 0) throw Error(ErrorCode::InvalidArgument, "VAD frame and hop must be positive");

    std::vector<double> energy;
    for (std::size_t s = 0; s + frame <= x.size(); s += hop) {
        double e = 0.0;
        for (std::size_t i = s; i < s + frame; ++i) e += x[i] * x[i];
        energy.push_back(e / static_cast<double>(frame));
    }
    const std::size_t n = energy.size();
    const auto half = static_cast<std::ptrdiff_t>(std::max(config.smoothing_frames, 1) / 2);
    std::vector<double> level_db(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - half);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, static_cast<std::ptrdiff_t>(i) + half);
        double sum = 0.0;
        for (auto k = lo; k <= hi; ++k) sum += energy[static_cast<std::size_t>(k)];
        level_db[i] = 10.0 * std::log10(sum / static_cast<double>(hi - lo + 1) + 1e-20);
    }

    const double floor_db = percentile(level_db, config.floor_percentile);
    const double loud_db = percentile(level_db, 100.0 - config.floor_percentile);
    double threshold = floor_db + config.margin_db;
    // Without pauses the percentile floor is the speech level itself; fall back to the absolute floor.
    if (loud_db - floor_db < config.margin_db) threshold = config.absolute_floor_db;
    threshold = std::max(threshold, config.absolute_floor_db);

    // Frame i owns the hop-sized slot centred on its window; end frames extend to the clip edges.
    const double offset = 0.5 * (config.frame - config.hop);
    const auto slot_start = [&](std::size_t i) { return i == 0 ? 0.0 : static_cast<double>(i) * config.hop + offset; };
    const auto slot_end = [&](std::size_t i) {
        return i + 1 == n ? clip.duration() : static_cast<double>(i + 1) * config.hop + offset;
    };

    std::vector<Interval> raw;
    for (std::size_t i = 0; i < n;) {
        if (level_db[i] <= threshold) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && level_db[j] > threshold) ++j;
        raw.push_back({slot_start(i), slot_end(j - 1)});
        i = j;
    }

    std::vector<Interval> merged;
    for (const auto& seg : raw) {
        if (!merged.empty() && seg.start - merged.back().end < config.min_pause) {
            merged.back().end = seg.end;
        } else {
            merged.push_back(seg);
        }
    }
    SpeechSegmentation out;
    for (const auto& seg : merged) {
        if (seg.length() >= config.min_speech) out.segments.push_back(seg);
    }
    if (out.segments.empty()) throw Error(ErrorCode::NoSpeechDetected, "no speech found in clip");
    return out;
}

TimingMetrics timing_metrics(const SpeechSegmentation& seg, int expected_words) {
    if (expected_words <= 0) throw Error(ErrorCode::InvalidArgument, "expected word count must be positive");
    if (seg.segments.empty()) throw Error(ErrorCode::NoSpeechSegments, "timing metrics need speech segments");
    TimingMetrics m;
    m.speaking_duration = seg.total_span();
    m.articulation_duration = seg.speech_time();
    if (!(m.articulation_duration > 0.0)) throw Error(ErrorCode::NoSpeechSegments, "segments have zero length");
    const double words = static_cast<double>(expected_words);
    m.speaking_rate = 60.0 * words / m.speaking_duration;
    m.articulation_rate = 60.0 * words / m.articulation_duration;
    m.ppt = 100.0 * (m.speaking_duration - m.articulation_duration) / m.speaking_duration;
    return m;
}

std::string_view to_string(ExclusionReason reason) noexcept {
    switch (reason) {
        case ExclusionReason::SpeakingRate: return "speaking_rate";
        case ExclusionReason::ArticulationRate: return "articulation_rate";
        case ExclusionReason::Ppt: return "ppt";
    }
    return "unknown";
}

std::optional<ExclusionReason> apply_outlier_filter(const TimingMetrics& metrics, const TaskKind& task,
                                                    const OutlierThresholds& thresholds) {
    if (task.kind() != TaskKind::Kind::Bamboo) return std::nullopt;
    if (metrics.speaking_rate > thresholds.max_speaking_rate) return ExclusionReason::SpeakingRate;
    if (metrics.articulation_rate > thresholds.max_articulation_rate) return ExclusionReason::ArticulationRate;
    if (metrics.ppt > thresholds.max_ppt) return ExclusionReason::Ppt;
    return std::nullopt;
}

}  // namespace speechbio
