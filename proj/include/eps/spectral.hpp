#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/core/fft.hpp"
#include "eps/core/waveform.hpp"

namespace eps::spectral {

inline std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(constants::kTwoPi * static_cast<double>(i) / n);
    return w;
}

struct Psd {
    std::vector<double> freqs;
    std::vector<double> power;  ///< one-sided, unit^2/Hz
    double df() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

/// Welch estimate with a periodic Hann window and per-segment mean removal.
inline Psd welch(const WaveformBuffer& x, double segment_s = 4.0, double overlap = 0.5) {
    const double fs = x.fs();
    auto seg = static_cast<std::size_t>(std::llround(segment_s * fs));
    seg = std::min(seg, x.size());
    if (seg < 8) throw InsufficientDataError("welch: record shorter than 8 samples");
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seg * (1.0 - overlap))));
    const auto win = hann(seg);
    double wss = 0.0;
    for (double v : win) wss += v * v;

    Psd out;
    out.power.assign(seg / 2 + 1, 0.0);
    std::size_t count = 0;
    std::vector<double> buf(seg);
    for (std::size_t start = 0; start + seg <= x.size(); start += step) {
        double mean = 0.0;
        for (std::size_t i = 0; i < seg; ++i) mean += x[start + i];
        mean /= static_cast<double>(seg);
        for (std::size_t i = 0; i < seg; ++i) buf[i] = (x[start + i] - mean) * win[i];
        const auto spec = fft::rfft(buf);
        for (std::size_t k = 0; k < spec.size(); ++k) {
            const bool edge = k == 0 || (seg % 2 == 0 && k == seg / 2);
            out.power[k] += (edge ? 1.0 : 2.0) * std::norm(spec[k]) / (fs * wss);
        }
        ++count;
    }
    for (auto& p : out.power) p /= static_cast<double>(count);
    out.freqs.resize(out.power.size());
    for (std::size_t k = 0; k < out.freqs.size(); ++k) out.freqs[k] = static_cast<double>(k) * fs / seg;
    return out;
}

/// Sum of PSD bins in [f_lo, f_hi) times the bin width.
inline double band_power(const Psd& psd, double f_lo, double f_hi) {
    double p = 0.0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        if (psd.freqs[k] >= f_lo && psd.freqs[k] < f_hi) p += psd.power[k];
    }
    return p * psd.df();
}

struct SpectralPeak {
    double frequency = 0.0;
    double amplitude = 0.0;
};

namespace detail {
// Hann-windowed, zero-padded magnitude spectrum scaled so a sinusoid reads its amplitude.
inline std::pair<std::vector<double>, double> amplitude_spectrum(const WaveformBuffer& w) {
    const std::size_t n = w.size();
    const auto win = hann(n);
    const std::size_t nfft = fft::next_pow2(8 * n);
    std::vector<double> buf(nfft, 0.0);
    double mean = 0.0;
    for (double v : w.samples()) mean += v;
    mean /= static_cast<double>(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        buf[i] = (w[i] - mean) * win[i];
        wsum += win[i];
    }
    const auto spec = fft::rfft(buf);
    std::vector<double> mag(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = 2.0 * std::abs(spec[k]) / wsum;
    return {std::move(mag), w.fs() / static_cast<double>(nfft)};
}
}  // namespace detail

/// Largest window-corrected spectral magnitude within [f_lo, f_hi].
inline SpectralPeak spectral_peak(const WaveformBuffer& w, double f_lo, double f_hi) {
    const auto [mag, df] = detail::amplitude_spectrum(w);
    SpectralPeak best;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        const double f = static_cast<double>(k) * df;
        if (f < f_lo || f > f_hi) continue;
        if (mag[k] > best.amplitude) best = {f, mag[k]};
    }
    return best;
}

/// Peak spectral magnitude within f_target +- 0.5 Hz.
inline double fft_amplitude(const WaveformBuffer& w, double f_target) {
    if (!(f_target > 0.0)) throw DomainError("fft_amplitude: target frequency must be positive");
    if (w.duration() < 10.0 / f_target) throw InsufficientDataError("fft_amplitude: record shorter than 10 periods");
    return spectral_peak(w, f_target - 0.5, f_target + 0.5).amplitude;
}

}  // namespace eps::spectral
