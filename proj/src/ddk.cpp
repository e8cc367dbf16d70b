#include "speechbio/ddk.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace speechbio {

std::vector<double> detect_syllable_onsets(const AudioClip& clip, const SpeechSegmentation& seg,
                                           const DdkConfig& config) {
    if (seg.segments.empty()) throw Error(ErrorCode::NoSpeechDetected, "no speech segments");
    const double fs = clip.sample_rate();
    const auto x = clip.samples();
    const auto frame = static_cast<std::size_t>(std::lround(config.frame * fs));
    const auto hop = static_cast<std::size_t>(std::lround(config.hop * fs));
    if (frame == 0 || hop == 0 || frame > x.size()) {
        throw Error(ErrorCode::InvalidArgument, "envelope frame does not fit the clip");
    }

    std::vector<double> energy;
    for (std::size_t s = 0; s + frame <= x.size(); s += hop) {
        double e = 0.0;
        for (std::size_t i = s; i < s + frame; ++i) e += x[i] * x[i];
        energy.push_back(e / static_cast<double>(frame));
    }
    const std::size_t n = energy.size();
    const auto half = static_cast<std::ptrdiff_t>(std::max(config.smoothing_frames, 1) / 2);
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - half);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, static_cast<std::ptrdiff_t>(i) + half);
        double sum = 0.0;
        for (auto k = lo; k <= hi; ++k) sum += energy[static_cast<std::size_t>(k)];
        env[i] = 10.0 * std::log10(sum / static_cast<double>(hi - lo + 1) + 1e-20);
    }
    const double centre = 0.5 * config.frame;
    const auto frame_time = [&](double i) { return i * config.hop + centre; };

    struct Candidate {
        double time;
        double level;
    };
    std::vector<Candidate> candidates;
    for (const Interval& segment : seg.segments) {
        const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((segment.start - centre) / config.hop)));
        const auto last_f = std::floor((segment.end - centre) / config.hop);
        if (last_f < 0.0) continue;
        const auto last = std::min(n - 1, static_cast<std::size_t>(last_f));
        for (std::size_t i = first; i <= last && i < n; ++i) {
            const bool rises = i == first || env[i] > env[i - 1];
            const bool falls = i == last || env[i] >= env[i + 1];
            if (!rises || !falls) continue;
            // Prominence: height above the higher of the two bases, searched within the segment.
            double left_min = env[i];
            for (std::size_t k = i; k-- > first;) {
                if (env[k] > env[i]) break;
                left_min = std::min(left_min, env[k]);
            }
            double right_min = env[i];
            for (std::size_t k = i + 1; k <= last; ++k) {
                if (env[k] > env[i]) break;
                right_min = std::min(right_min, env[k]);
            }
            const double prominence = env[i] - std::max(left_min, right_min);
            if (prominence < config.min_prominence_db) continue;
            double offset = 0.0;
            if (i > first && i < last) {
                const double denom = env[i - 1] - 2.0 * env[i] + env[i + 1];
                if (denom < 0.0) offset = std::clamp(0.5 * (env[i - 1] - env[i + 1]) / denom, -0.5, 0.5);
            }
            candidates.push_back({frame_time(static_cast<double>(i) + offset), env[i]});
        }
    }

    // Greedy non-maximum suppression: louder peaks claim their neighbourhood first.
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].level > candidates[b].level; });
    std::vector<double> kept;
    for (std::size_t idx : order) {
        const double t = candidates[idx].time;
        const bool clear = std::none_of(kept.begin(), kept.end(),
                                        [&](double k) { return std::abs(k - t) < config.min_gap; });
        if (clear) kept.push_back(t);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

double cycle_to_cycle_variation(std::span<const double> onsets) {
    if (onsets.size() < 3) throw Error(ErrorCode::TooFewCycles, "cTV needs at least three onsets");
    std::vector<double> cycles(onsets.size() - 1);
    for (std::size_t i = 1; i < onsets.size(); ++i) cycles[i - 1] = onsets[i] - onsets[i - 1];
    const double mean = std::accumulate(cycles.begin(), cycles.end(), 0.0) / static_cast<double>(cycles.size());
    double ss = 0.0;
    for (double c : cycles) ss += (c - mean) * (c - mean);
    return std::sqrt(ss / static_cast<double>(cycles.size() - 1));
}

DdkMetrics ddk_metrics(std::span<const double> onsets, const SpeechSegmentation& seg, const DdkConfig& config) {
    if (seg.segments.empty()) throw Error(ErrorCode::NoSpeechSegments, "DDK metrics need speech segments");
    DdkMetrics m;
    m.speaking_duration = seg.total_span();
    m.articulation_duration = seg.speech_time();
    m.syllable_count = static_cast<int>(onsets.size());
    const double basis =
        config.rate_basis == SyllableRateBasis::Articulation ? m.articulation_duration : m.speaking_duration;
    if (m.syllable_count > 0) m.syllable_rate = static_cast<double>(m.syllable_count) / basis;
    if (onsets.size() >= 3) m.ctv = cycle_to_cycle_variation(onsets);
    return m;
}

}  // namespace speechbio
