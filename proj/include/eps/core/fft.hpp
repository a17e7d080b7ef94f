#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

namespace eps::fft {

namespace detail {
// FFTW planning is not thread-safe; execution of distinct plans is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
}  // namespace detail

/// Forward real FFT, unnormalized; returns n/2+1 bins.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> in(x.begin(), x.end());
    std::vector<std::complex<double>> out(x.size() / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    detail::PlanDeleter{}(plan);
    return out;
}

/// Inverse of rfft for a length-n signal, normalized so irfft(rfft(x), n) == x.
inline std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n) {
    std::vector<std::complex<double>> in(n / 2 + 1);
    for (std::size_t k = 0; k < in.size() && k < spectrum.size(); ++k) in[k] = spectrum[k];
    std::vector<double> out(n);
    fftw_plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    detail::PlanDeleter{}(plan);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= scale;
    return out;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Frequency of rfft bin k for an n-point transform at sample rate fs.
inline double bin_frequency(std::size_t k, std::size_t n, double fs) {
    return static_cast<double>(k) * fs / static_cast<double>(n);
}

}  // namespace eps::fft
