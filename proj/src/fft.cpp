#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <new>

namespace speechbio::detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
    std::lock_guard lock(planner_mutex());
    time_ = fftw_alloc_real(size_);
    freq_ = fftw_alloc_complex(size_ / 2 + 1);
    if (time_ == nullptr || freq_ == nullptr) throw std::bad_alloc();
    const int n = static_cast<int>(size_);
    forward_ = fftw_plan_dft_r2c_1d(n, time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, freq_, time_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
}

void RealFft::power_spectrum(std::span<const double> input, std::vector<double>& power) {
    const std::size_t n = std::min(input.size(), size_);
    std::copy_n(input.begin(), n, time_);
    std::fill(time_ + n, time_ + size_, 0.0);
    fftw_execute(forward_);
    power.resize(size_ / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) {
        power[k] = freq_[k][0] * freq_[k][0] + freq_[k][1] * freq_[k][1];
    }
}

void RealFft::inverse_even(std::span<const double> half_spectrum, std::vector<double>& output) {
    for (std::size_t k = 0; k < size_ / 2 + 1; ++k) {
        freq_[k][0] = k < half_spectrum.size() ? half_spectrum[k] : 0.0;
        freq_[k][1] = 0.0;
    }
    fftw_execute(inverse_);
    output.resize(size_);
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t i = 0; i < size_; ++i) output[i] = time_[i] * scale;
}

}  // namespace speechbio::detail
