#pragma once

#include <complex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace speechbio::detail {

/// Real-input FFT of fixed size backed by FFTW. Plans are created under a global lock.
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const noexcept { return size_; }

    /// Power spectrum |X[k]|^2 for k = 0..size/2 of zero-padded `input`.
    void power_spectrum(std::span<const double> input, std::vector<double>& power);

    /// Inverse transform of a real, even spectrum given for k = 0..size/2; output scaled by 1/size.
    void inverse_even(std::span<const double> half_spectrum, std::vector<double>& output);

private:
    std::size_t size_;
    double* time_;
    fftw_complex* freq_;
    fftw_plan forward_;
    fftw_plan inverse_;
};

}  // namespace speechbio::detail
