#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace speechbio {

inline constexpr double kMinSampleRate = 16000.0;

/// Closed time interval in seconds.
struct Interval {
    double start = 0.0;
    double end = 0.0;

    double length() const noexcept { return end - start; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Mono PCM samples normalized to [-1, 1].
class AudioClip {
public:
    /// Rejects empty or non-finite input and sample rates below 16 kHz.
    AudioClip(std::vector<double> samples, double sample_rate);

    std::span<const double> samples() const noexcept { return samples_; }
    double sample_rate() const noexcept { return sample_rate_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double duration() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_; }

    /// Sample index nearest to time `t` (seconds), clamped to the clip.
    std::size_t index_at(double t) const noexcept;

private:
    std::vector<double> samples_;
    double sample_rate_;
};

enum class WavEncoding { Pcm16, Float32 };

/// Reads PCM 16/24/32-bit or IEEE float WAV. Multi-channel audio is downmixed by averaging.
AudioClip read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace speechbio
