#include "speechbio/voice_quality.hpp"

#include "fft.hpp"
#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace speechbio {

namespace {

// A later lag wins only if its peak beats the earliest candidate by this factor.
constexpr double kOctaveRatio = 0.9;

struct Parabola {
    double offset;  // peak position relative to the centre sample, in [-0.5, 0.5]
    double value;
};

Parabola parabolic_peak(double left, double centre, double right) {
    const double denom = left - 2.0 * centre + right;
    if (denom >= 0.0) return {0.0, centre};
    const double offset = std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
    return {offset, centre - 0.25 * (left - right) * offset};
}

class NormalizedAutocorrelation {
public:
    explicit NormalizedAutocorrelation(std::span<const double> x) : x_(x), prefix_(x.size() + 1, 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) prefix_[i + 1] = prefix_[i] + x[i] * x[i];
    }

    double energy(std::size_t begin, std::size_t end) const { return prefix_[end] - prefix_[begin]; }

    /// Correlation of x[s, s+n-lag) against x[s+lag, s+n), normalized by both energies.
    double at(std::size_t start, std::size_t length, std::size_t lag) const {
        if (lag >= length) return 0.0;
        const std::size_t count = length - lag;
        const double e0 = energy(start, start + count);
        const double e1 = energy(start + lag, start + lag + count);
        if (e0 <= 0.0 || e1 <= 0.0) return 0.0;
        const double* a = x_.data() + start;
        const double* b = a + lag;
        double cross = 0.0;
        for (std::size_t i = 0; i < count; ++i) cross += a[i] * b[i];
        return cross / std::sqrt(e0 * e1);
    }

private:
    std::span<const double> x_;
    std::vector<double> prefix_;
};

struct FrameLayout {
    std::size_t length;
    std::size_t hop;
    std::size_t count;
};

FrameLayout pitch_frames(const AudioClip& clip, const PitchConfig& config) {
    const double fs = clip.sample_rate();
    const auto min_samples = static_cast<std::size_t>(std::ceil(2.0 * fs / config.f_min));
    if (clip.size() < min_samples) {
        throw Error(ErrorCode::ClipTooShort, "clip must be longer than two periods of f_min");
    }
    FrameLayout f{};
    f.length = std::min(clip.size(), static_cast<std::size_t>(std::lround(config.window * fs)));
    f.length = std::max(f.length, min_samples);
    f.hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.hop * fs)));
    f.count = (clip.size() - f.length) / f.hop + 1;
    return f;
}

void validate(const PitchConfig& config) {
    if (!(config.f_min > 0.0 && config.f_min < config.f_max)) {
        throw Error(ErrorCode::InvalidArgument, "pitch range requires 0 < f_min < f_max");
    }
    if (!(config.window > 0.0 && config.hop > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "window and hop must be positive");
    }
}

}  // namespace

std::size_t F0Contour::voiced_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(f0_values.begin(), f0_values.end(), [](const auto& v) { return v.has_value(); }));
}

std::optional<double> F0Contour::mean_f0() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : f0_values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

F0Contour estimate_f0(const AudioClip& clip, const PitchConfig& config) {
    validate(config);
    const double fs = clip.sample_rate();
    const FrameLayout frames = pitch_frames(clip, config);
    const NormalizedAutocorrelation acf(clip.samples());

    // Lags down to half the shortest admissible period, so a fundamental above f_max is
    // recognized as such instead of being mistaken for its subharmonic.
    const std::size_t lag_lo = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(fs / (2.0 * config.f_max))));
    const std::size_t lag_hi =
        std::min(frames.length - 2, static_cast<std::size_t>(std::ceil(fs / config.f_min)));

    double max_energy = 0.0;
    std::vector<double> energies(frames.count);
    for (std::size_t i = 0; i < frames.count; ++i) {
        const std::size_t s = i * frames.hop;
        energies[i] = acf.energy(s, s + frames.length) / static_cast<double>(frames.length);
        max_energy = std::max(max_energy, energies[i]);
    }
    const double silence = max_energy * std::pow(10.0, config.silence_db / 10.0);

    F0Contour contour;
    contour.frame_hop = static_cast<double>(frames.hop) / fs;
    contour.window = static_cast<double>(frames.length) / fs;
    contour.frame_times.resize(frames.count);
    contour.f0_values.assign(frames.count, std::nullopt);
    contour.strengths.assign(frames.count, 0.0);

    std::vector<double> r(lag_hi + 2, 0.0);
    for (std::size_t i = 0; i < frames.count; ++i) {
        const std::size_t s = i * frames.hop;
        contour.frame_times[i] = (static_cast<double>(s) + 0.5 * static_cast<double>(frames.length)) / fs;
        if (max_energy <= 0.0 || energies[i] <= silence) continue;

        for (std::size_t lag = lag_lo - 1; lag <= lag_hi + 1; ++lag) r[lag] = acf.at(s, frames.length, lag);

        double best = 0.0;
        for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
            if (r[lag] > 0.0 && r[lag] >= r[lag - 1] && r[lag] > r[lag + 1]) best = std::max(best, r[lag]);
        }
        if (best <= 0.0) continue;
        std::size_t chosen = 0;
        for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
            if (r[lag] >= kOctaveRatio * best && r[lag] >= r[lag - 1] && r[lag] > r[lag + 1]) {
                chosen = lag;
                break;
            }
        }
        const Parabola peak = parabolic_peak(r[chosen - 1], r[chosen], r[chosen + 1]);
        const double strength = std::min(peak.value, 1.0);
        const double f0 = fs / (static_cast<double>(chosen) + peak.offset);
        contour.strengths[i] = strength;
        if (strength >= config.voicing_threshold && f0 >= config.f_min && f0 <= config.f_max) {
            contour.f0_values[i] = f0;
        }
    }
    return contour;
}

std::vector<GlottalCycle> period_sequence(const AudioClip& clip, const F0Contour& contour) {
    // Longest run of consecutive voiced frames; earliest wins ties.
    std::size_t best_begin = 0, best_len = 0;
    for (std::size_t i = 0; i < contour.f0_values.size();) {
        if (!contour.f0_values[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < contour.f0_values.size() && contour.f0_values[j]) ++j;
        if (j - i > best_len) {
            best_begin = i;
            best_len = j - i;
        }
        i = j;
    }
    if (best_len < 3) throw Error(ErrorCode::InsufficientVoicing, "fewer than 3 consecutive voiced frames");

    const double fs = clip.sample_rate();
    const auto x = clip.samples();
    const double half_window = 0.5 * contour.window;
    const double t_begin = std::max(0.0, contour.frame_times[best_begin] - half_window);
    const double t_end = std::min(clip.duration(), contour.frame_times[best_begin + best_len - 1] + half_window);
    const auto last_index = static_cast<std::ptrdiff_t>(std::floor(t_end * fs)) - 1;

    const auto local_period = [&](double t) {
        const double k = std::round((t - contour.frame_times[best_begin]) / contour.frame_hop);
        const auto idx = static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(best_len - 1)));
        return 1.0 / *contour.f0_values[best_begin + idx];
    };

    struct Peak {
        double time;
        double amplitude;
    };
    // Maximum strictly inside [lo, hi]; a maximum on the boundary is a flank, not a cycle peak.
    const auto find_peak = [&](std::ptrdiff_t lo, std::ptrdiff_t hi) -> std::optional<Peak> {
        std::ptrdiff_t arg = lo;
        for (std::ptrdiff_t i = lo + 1; i <= hi; ++i) {
            if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(arg)]) arg = i;
        }
        if (arg == lo || arg == hi) return std::nullopt;
        const auto a = static_cast<std::size_t>(arg);
        const Parabola p = parabolic_peak(x[a - 1], x[a], x[a + 1]);
        return Peak{(static_cast<double>(arg) + p.offset) / fs, p.value};
    };

    std::vector<Peak> peaks;
    const auto first_lo = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(std::ceil(t_begin * fs)));
    // Two periods always contain a full cycle peak; one period may only hold a pulse flank.
    const auto first_hi = static_cast<std::ptrdiff_t>(std::floor((t_begin + 2.0 * local_period(t_begin)) * fs));
    if (first_hi > last_index) throw Error(ErrorCode::InsufficientVoicing, "voiced stretch shorter than two periods");
    const auto first = find_peak(first_lo, first_hi);
    if (!first) throw Error(ErrorCode::InsufficientVoicing, "no cycle peak at the start of the voiced stretch");
    peaks.push_back(*first);
    while (true) {
        const double prev = peaks.back().time;
        const double period = local_period(prev);
        const auto lo = static_cast<std::ptrdiff_t>(std::ceil((prev + 0.75 * period) * fs));
        const auto hi = static_cast<std::ptrdiff_t>(std::floor((prev + 1.25 * period) * fs));
        if (hi > last_index || lo > hi) break;
        const auto next = find_peak(lo, hi);
        if (!next) break;
        peaks.push_back(*next);
    }

    std::vector<GlottalCycle> cycles;
    cycles.reserve(peaks.size());
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
        cycles.push_back({peaks[i + 1].time - peaks[i].time, peaks[i].amplitude});
    }
    if (cycles.size() < 2) throw Error(ErrorCode::InsufficientVoicing, "fewer than two glottal cycles found");
    return cycles;
}

namespace {

double mean_abs_successive_difference(std::span<const double> v) {
    double sum = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) sum += std::abs(v[i] - v[i - 1]);
    return sum / static_cast<double>(v.size() - 1);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double jitter_local(std::span<const double> periods) {
    if (periods.size() < 2) throw Error(ErrorCode::TooFewPeriods, "jitter needs at least two periods");
    for (double t : periods) {
        if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "periods must be positive");
    }
    return 100.0 * mean_abs_successive_difference(periods) / mean_of(periods);
}

double shimmer_local(std::span<const double> amplitudes) {
    if (amplitudes.size() < 2) throw Error(ErrorCode::TooFewAmplitudes, "shimmer needs at least two amplitudes");
    for (double a : amplitudes) {
        if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveAmplitude, "peak amplitudes must be positive");
    }
    return 100.0 * mean_abs_successive_difference(amplitudes) / mean_of(amplitudes);
}

double hnr(const AudioClip& clip, const F0Contour& contour) {
    if (contour.voiced_count() == 0) throw Error(ErrorCode::InsufficientVoicing, "no voiced frames");
    const double fs = clip.sample_rate();
    const auto length = static_cast<std::size_t>(std::lround(contour.window * fs));
    const NormalizedAutocorrelation acf(clip.samples());
    constexpr double kMaxR = 1.0 - 1e-10;

    double sum_db = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < contour.f0_values.size(); ++i) {
        if (!contour.f0_values[i]) continue;
        const double centre = contour.frame_times[i] * fs - 0.5 * static_cast<double>(length);
        const auto start = static_cast<std::size_t>(std::max(0.0, std::round(centre)));
        if (start + length > clip.size()) continue;
        const auto lag = static_cast<std::size_t>(std::lround(fs / *contour.f0_values[i]));
        if (lag < 1 || lag + 1 >= length) continue;
        const Parabola peak =
            parabolic_peak(acf.at(start, length, lag - 1), acf.at(start, length, lag), acf.at(start, length, lag + 1));
        const double r = std::clamp(peak.value, 1e-10, kMaxR);
        sum_db += 10.0 * std::log10(r / (1.0 - r));
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::InsufficientVoicing, "no analyzable voiced frames");
    return sum_db / static_cast<double>(n);
}

double cpp(const AudioClip& clip, const CppConfig& config) {
    if (!(config.f_min > 0.0 && config.f_min < config.f_max)) {
        throw Error(ErrorCode::InvalidArgument, "CPP band requires 0 < f_min < f_max");
    }
    if (clip.duration() < 0.5) throw Error(ErrorCode::ClipTooShort, "CPP needs at least 0.5 s of audio");
    const double fs = clip.sample_rate();
    const auto x = clip.samples();
    const auto length = static_cast<std::size_t>(std::lround(config.window * fs));
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.hop * fs)));
    std::size_t fft_size = 1;
    while (fft_size < length) fft_size <<= 1;

    const auto q_lo = static_cast<std::size_t>(std::ceil(fs / config.f_max));
    const auto q_hi = std::min(fft_size / 2 - 1, static_cast<std::size_t>(std::floor(fs / config.f_min)));
    if (q_hi <= q_lo + 2) throw Error(ErrorCode::InvalidArgument, "quefrency band too narrow for the window");

    std::vector<double> window(length);
    for (std::size_t i = 0; i < length; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(length - 1));
    }

    std::vector<std::size_t> starts;
    std::vector<double> energies;
    for (std::size_t s = 0; s + length <= x.size(); s += hop) {
        double e = 0.0;
        for (std::size_t i = 0; i < length; ++i) e += x[s + i] * x[s + i];
        starts.push_back(s);
        energies.push_back(e);
    }
    const double max_energy = energies.empty() ? 0.0 : *std::max_element(energies.begin(), energies.end());
    if (max_energy <= 0.0) throw Error(ErrorCode::DegenerateSignal, "clip is silent");
    const double gate = max_energy * std::pow(10.0, config.silence_db / 10.0);

    // Regression abscissae are fixed, so the normal-equation sums are too.
    const double band_n = static_cast<double>(q_hi - q_lo + 1);
    double sq = 0.0, sqq = 0.0;
    for (std::size_t q = q_lo; q <= q_hi; ++q) {
        sq += static_cast<double>(q);
        sqq += static_cast<double>(q) * static_cast<double>(q);
    }
    const double q_mean = sq / band_n;
    const double q_var = sqq - band_n * q_mean * q_mean;

    detail::RealFft fft(fft_size);
    std::vector<double> frame(length), power, log_power, cepstrum, cep_db(q_hi + 1);
    double total = 0.0;
    std::size_t frames_used = 0;
    for (std::size_t f = 0; f < starts.size(); ++f) {
        if (energies[f] < gate) continue;
        for (std::size_t i = 0; i < length; ++i) frame[i] = x[starts[f] + i] * window[i];
        fft.power_spectrum(frame, power);
        const double floor = *std::max_element(power.begin(), power.end()) * 1e-12;
        if (floor <= 0.0) continue;
        log_power.resize(power.size());
        for (std::size_t k = 0; k < power.size(); ++k) log_power[k] = 10.0 * std::log10(power[k] + floor);
        fft.inverse_even(log_power, cepstrum);

        double sy = 0.0, sqy = 0.0;
        std::size_t peak = q_lo;
        for (std::size_t q = q_lo; q <= q_hi; ++q) {
            cep_db[q] = 10.0 * std::log10(cepstrum[q] * cepstrum[q] + 1e-30);
            sy += cep_db[q];
            sqy += static_cast<double>(q) * cep_db[q];
            if (cep_db[q] > cep_db[peak]) peak = q;
        }
        const double slope = (sqy - band_n * q_mean * (sy / band_n)) / q_var;
        const double intercept = sy / band_n - slope * q_mean;
        total += cep_db[peak] - (intercept + slope * static_cast<double>(peak));
        ++frames_used;
    }
    if (frames_used == 0) throw Error(ErrorCode::DegenerateSignal, "no analyzable frames");
    return total / static_cast<double>(frames_used);
}

double speech_intensity(const AudioClip& clip, std::span<const Interval> speech) {
    if (speech.empty()) throw Error(ErrorCode::NoSpeechSegments, "no speech segments given");
    const double fs = clip.sample_rate();
    const auto x = clip.samples();
    double sum = 0.0;
    std::size_t n = 0;
    for (const Interval& seg : speech) {
        const auto begin = static_cast<std::size_t>(std::clamp(std::round(seg.start * fs), 0.0, static_cast<double>(x.size())));
        const auto end = static_cast<std::size_t>(std::clamp(std::round(seg.end * fs), 0.0, static_cast<double>(x.size())));
        for (std::size_t i = begin; i < end; ++i) sum += x[i] * x[i];
        n += end > begin ? end - begin : 0;
    }
    if (n == 0) throw Error(ErrorCode::NoSpeechSegments, "speech segments cover no samples");
    return 10.0 * std::log10(std::max(sum / static_cast<double>(n), 1e-20)) + kIntensityOffsetDb;
}

PhonationMetrics phonation_metrics(const AudioClip& clip, const PitchConfig& config) {
    const F0Contour contour = estimate_f0(clip, config);
    const auto mean = contour.mean_f0();
    if (!mean) throw Error(ErrorCode::InsufficientVoicing, "no voiced frames in held vowel");
    const auto cycles = period_sequence(clip, contour);
    std::vector<double> periods, amplitudes;
    for (const auto& c : cycles) {
        periods.push_back(c.period);
        amplitudes.push_back(c.amplitude);
    }
    PhonationMetrics m;
    m.mean_f0 = *mean;
    m.jitter_local = jitter_local(periods);
    m.shimmer_local = shimmer_local(amplitudes);
    m.hnr = hnr(clip, contour);
    m.cpp = cpp(clip, CppConfig{.f_min = config.f_min, .f_max = config.f_max});
    return m;
}

}  // namespace speechbio
