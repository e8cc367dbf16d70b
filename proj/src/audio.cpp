#include "speechbio/audio.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace speechbio {

AudioClip::AudioClip(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (samples_.empty()) throw Error(ErrorCode::InvalidArgument, "audio clip is empty");
    if (!(sample_rate_ >= kMinSampleRate) || !std::isfinite(sample_rate_)) {
        throw Error(ErrorCode::InvalidArgument,
                    "sample rate must be >= 16000 Hz, got " + std::to_string(sample_rate_));
    }
    for (double s : samples_) {
        if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "audio clip has non-finite samples");
    }
}

std::size_t AudioClip::index_at(double t) const noexcept {
    const double idx = std::round(t * sample_rate_);
    if (idx <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(idx), samples_.size() - 1);
}

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <class T>
T read_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto bad = [&](const std::string& why) {
        return Error(ErrorCode::ParseError, path.string() + ": " + why);
    };
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw bad("not a RIFF/WAVE file");
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const auto chunk_size = read_le<std::uint32_t>(bytes.data() + pos + 4);
        const unsigned char* body = bytes.data() + pos + 8;
        const std::size_t available = bytes.size() - pos - 8;
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            if (chunk_size < 16 || available < 16) throw bad("truncated fmt chunk");
            format = read_le<std::uint16_t>(body);
            channels = read_le<std::uint16_t>(body + 2);
            rate = read_le<std::uint32_t>(body + 4);
            bits = read_le<std::uint16_t>(body + 14);
            if (format == kFormatExtensible && chunk_size >= 26 && available >= 26) {
                format = read_le<std::uint16_t>(body + 24);
            }
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            data = body;
            data_size = std::min<std::size_t>(chunk_size, available);
        }
        pos += 8 + chunk_size + (chunk_size & 1u);
    }
    if (channels == 0 || rate == 0) throw bad("missing fmt chunk");
    if (data == nullptr) throw bad("missing data chunk");

    const std::size_t bytes_per_sample = bits / 8;
    const bool supported = (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) ||
                           (format == kFormatFloat && bits == 32);
    if (!supported) throw bad("unsupported sample format (" + std::to_string(bits) + "-bit)");

    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = data_size / frame_bytes;
    std::vector<double> samples(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + f * frame_bytes + c * bytes_per_sample;
            double v = 0.0;
            if (format == kFormatFloat) {
                v = read_le<float>(p);
            } else if (bits == 16) {
                v = read_le<std::int16_t>(p) / 32768.0;
            } else if (bits == 24) {
                std::int32_t x = p[0] | (p[1] << 8) | (p[2] << 16);
                if (x & 0x800000) x -= 0x1000000;
                v = x / 8388608.0;
            } else {
                v = read_le<std::int32_t>(p) / 2147483648.0;
            }
            sum += v;
        }
        samples[f] = sum / channels;
    }
    return AudioClip(std::move(samples), static_cast<double>(rate));
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
    const std::uint16_t format = encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat;
    const auto rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate()));
    const auto data_bytes = static_cast<std::uint32_t>(clip.size() * (bits / 8));

    out.write("RIFF", 4);
    write_le<std::uint32_t>(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_le<std::uint32_t>(out, 16);
    write_le<std::uint16_t>(out, format);
    write_le<std::uint16_t>(out, 1);
    write_le<std::uint32_t>(out, rate);
    write_le<std::uint32_t>(out, rate * (bits / 8));
    write_le<std::uint16_t>(out, bits / 8);
    write_le<std::uint16_t>(out, bits);
    out.write("data", 4);
    write_le<std::uint32_t>(out, data_bytes);
    for (double s : clip.samples()) {
        const double c = std::clamp(s, -1.0, 1.0);
        if (encoding == WavEncoding::Pcm16) {
            write_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(std::min(c * 32768.0, 32767.0))));
        } else {
            write_le<float>(out, static_cast<float>(c));
        }
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace speechbio
