#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "eps/core/fft.hpp"

namespace eps {

/// Gaussian noise with one-sided PSD `psd(f)` [unit^2/Hz], by shaping the spectrum of white noise.
/// The DC bin is forced to zero. Expected variance equals the discrete integral of psd over (0, fs/2].
inline std::vector<double> shaped_gaussian_noise(std::size_t n, double fs, const std::function<double(double)>& psd,
                                                 std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> white(n);
    for (auto& v : white) v = nd(rng);
    auto spec = fft::rfft(white);
    spec[0] = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        spec[k] *= std::sqrt(psd(f) * fs / 2.0);
    }
    return fft::irfft(spec, n);
}

}  // namespace eps
