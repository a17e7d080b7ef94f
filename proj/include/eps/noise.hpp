#pragma once

/// Input-referred noise of the continuous-time and switched-integrator TIAs.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eps/core/colored_noise.hpp"
#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/core/waveform.hpp"

namespace eps::noise {

using constants::kBoltzmann;
using constants::kElementaryCharge;
using constants::kTwoPi;

enum class Architecture { continuous_time, switched_integrator };
enum class ResetSwitch { diode, electromechanical };

struct NoiseSpec {
    double e_n_white = 14e-9;     ///< V/sqrt(Hz)
    double e_n_corner = 300.0;    ///< Hz
    double i_b_eff = 15.3e-15;    ///< A; shot-noise equivalent bias current
    double c_in = 8e-12;
    double r_in = 1e14;
    double r_leak = 1e15;
    double r_f = 150e9;
    double c_f = 0.1e-12;
    double c_f_si = 10e-12;
    double i_rst = 100e-15;
    ResetSwitch reset_switch = ResetSwitch::diode;
    double r_rst = 1e15;
    double temperature = 298.15;

    /// e_n^2(f) = e_w^2 (1 + f_c / f)
    double e_n_sq(double f) const { return e_n_white * e_n_white * (1.0 + e_n_corner / f); }
    double i_n_sq() const { return 2.0 * kElementaryCharge * i_b_eff; }
    /// Noise-matching resistance sqrt(e_n^2 / i_n^2) at frequency f.
    double r_n(double f) const { return std::sqrt(e_n_sq(f) / i_n_sq()); }

    void validate() const {
        auto pos = [](double v) { return v > 0.0; };
        if (!(e_n_white >= 0.0) || !(e_n_corner >= 0.0) || !(i_b_eff >= 0.0) || !(i_rst >= 0.0)) {
            throw DomainError("noise spec: noise sources must be non-negative");
        }
        if (!pos(c_in) && c_in != 0.0) throw DomainError("noise spec: c_in must be non-negative");
        if (!pos(r_in) || !pos(r_leak) || !pos(r_f) || !pos(r_rst)) {
            throw DomainError("noise spec: resistances must be positive (use infinity to disable)");
        }
        if (!pos(c_f) || !pos(c_f_si)) throw DomainError("noise spec: feedback capacitances must be positive");
        if (!pos(temperature)) throw DomainError("noise spec: temperature must be positive");
    }
};

enum class Band { ecg, eeg, emg };

struct BandSpec {
    double f1 = 1.0;
    double f2 = 150.0;
    Band kind = Band::ecg;

    static BandSpec of(Band b) {
        switch (b) {
            case Band::ecg: return {1.0, 150.0, b};
            case Band::eeg: return {2.0, 40.0, b};
            case Band::emg: return {10.0, 500.0, b};
        }
        return {};
    }
    void validate() const {
        if (!(f1 > 0.0 && f2 > f1)) throw DomainError("band requires 0 < f1 < f2");
    }
};

/// Individual PSD terms [A^2/Hz]; total() is their sum (uncorrelated sources).
struct NoiseTerms {
    double shot = 0.0;     ///< 2 q I_b,eff
    double en = 0.0;       ///< e_n^2 |Z_in || Z_s || Z_f|^-2
    double thermal = 0.0;  ///< 4kT/R_f + 4kT/R_leak
    double reset = 0.0;    ///< reset-switch noise (switched integrator only)
    double total() const { return shot + en + thermal + reset; }
};

inline NoiseTerms noise_terms(const NoiseSpec& spec, double c_c, double f, Architecture arch) {
    if (!(f > 0.0)) throw DomainError("noise PSD requires f > 0");
    if (!(c_c > 0.0)) throw DomainError("noise PSD requires c_c > 0");
    const double w = kTwoPi * f;
    const bool ct = arch == Architecture::continuous_time;
    const double g_f = ct ? 1.0 / spec.r_f : 0.0;
    const double c_fb = ct ? spec.c_f : spec.c_f_si;
    const std::complex<double> y_tot(1.0 / spec.r_in + g_f, w * (spec.c_in + c_c + c_fb));

    const double four_kt = 4.0 * kBoltzmann * spec.temperature;
    NoiseTerms t;
    t.shot = spec.i_n_sq();
    t.en = spec.e_n_sq(f) * std::norm(y_tot);
    t.thermal = four_kt * (g_f + 1.0 / spec.r_leak);
    if (!ct) {
        t.reset = spec.reset_switch == ResetSwitch::diode ? 4.0 * kElementaryCharge * spec.i_rst : four_kt / spec.r_rst;
    }
    return t;
}

/// Input-referred current noise PSD of the continuous-time TIA [A^2/Hz].
inline double ct_noise_psd(const NoiseSpec& spec, double c_c, double f) {
    return noise_terms(spec, c_c, f, Architecture::continuous_time).total();
}

/// Input-referred current noise PSD of the switched integrator [A^2/Hz].
inline double si_noise_psd(const NoiseSpec& spec, double c_c, double f) {
    return noise_terms(spec, c_c, f, Architecture::switched_integrator).total();
}

inline double current_noise_psd(const NoiseSpec& spec, double c_c, double f, Architecture arch) {
    return noise_terms(spec, c_c, f, arch).total();
}

/// Input-referred voltage noise PSD i^2 |Z_s|^2 with a purely capacitive source [V^2/Hz].
inline double voltage_noise_psd(const NoiseSpec& spec, double c_c, double f, Architecture arch) {
    const double zs = 1.0 / (kTwoPi * f * c_c);
    return current_noise_psd(spec, c_c, f, arch) * zs * zs;
}

/// RMS input-referred voltage noise over the band, by adaptive Gauss-Kronrod quadrature in log-frequency.
inline double integrated_input_noise(const NoiseSpec& spec, double c_c, const BandSpec& band, Architecture arch) {
    spec.validate();
    band.validate();
    if (!(c_c > 0.0)) throw DomainError("integrated_input_noise requires c_c > 0");
    auto integrand = [&](double u) {
        const double f = std::exp(u);
        return voltage_noise_psd(spec, c_c, f, arch) * f;
    };
    double err = 0.0, l1 = 0.0;
    const double v2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, std::log(band.f1), std::log(band.f2), 20, 1e-10, &err, &l1);
    if (!std::isfinite(v2) || err > 1e-6 * std::abs(v2)) {
        std::ostringstream os;
        os << "integrated_input_noise: quadrature did not converge (estimate " << v2 << ", error " << err
           << ", band " << band.f1 << "-" << band.f2 << " Hz, c_c " << c_c << " F)";
        throw NumericalError(os.str());
    }
    return std::sqrt(v2);
}

/// Per-term RMS input-referred voltage noise over the band [V]; the fields hold RMS values, so
/// total() is not meaningful here. Same quadrature as integrated_input_noise.
inline NoiseTerms integrated_noise_terms(const NoiseSpec& spec, double c_c, const BandSpec& band, Architecture arch) {
    spec.validate();
    band.validate();
    if (!(c_c > 0.0)) throw DomainError("integrated_noise_terms requires c_c > 0");
    auto rms = [&](double NoiseTerms::*term) {
        auto integrand = [&](double u) {
            const double f = std::exp(u);
            const double zs = 1.0 / (kTwoPi * f * c_c);
            return noise_terms(spec, c_c, f, arch).*term * zs * zs * f;
        };
        double err = 0.0;
        const double v2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            integrand, std::log(band.f1), std::log(band.f2), 20, 1e-10, &err);
        if (!std::isfinite(v2) || err > 1e-6 * std::abs(v2) + 1e-300) {
            throw NumericalError("integrated_noise_terms: quadrature did not converge");
        }
        return std::sqrt(v2);
    };
    return {rms(&NoiseTerms::shot), rms(&NoiseTerms::en), rms(&NoiseTerms::thermal), rms(&NoiseTerms::reset)};
}

struct CouplingRequirement {
    double capacitance = 0.0;
    bool in_range = true;  ///< false when the target SNR is not reached within the search bracket
};

/// Smallest coupling capacitance with amplitude / v_n,in >= target, by bisection in log-capacitance.
inline CouplingRequirement min_coupling_for_snr(const NoiseSpec& spec, double signal_amplitude, double target_snr,
                                                const BandSpec& band, Architecture arch, double c_lo = 0.01e-12,
                                                double c_hi = 100e-12) {
    if (!(target_snr > 0.0)) throw DomainError("min_coupling_for_snr requires target_snr > 0");
    if (!(signal_amplitude > 0.0)) throw DomainError("min_coupling_for_snr requires a positive amplitude");
    auto snr = [&](double c) { return signal_amplitude / integrated_input_noise(spec, c, band, arch); };
    if (snr(c_lo) >= target_snr) return {c_lo, true};
    if (snr(c_hi) < target_snr) return {c_hi, false};
    double lo = std::log(c_lo), hi = std::log(c_hi);
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (snr(std::exp(mid)) >= target_snr ? hi : lo) = mid;
    }
    return {std::exp(hi), true};
}

/// Input-referred voltage noise realization whose PSD follows voltage_noise_psd.
inline WaveformBuffer synth_noise(const NoiseSpec& spec, double c_c, Architecture arch, double fs, double duration,
                                  std::uint64_t seed) {
    spec.validate();
    const auto n = static_cast<std::size_t>(std::llround(fs * duration));
    if (n < 2) throw DomainError("synth_noise: record too short");
    std::mt19937_64 rng(seed);
    auto x = shaped_gaussian_noise(n, fs, [&](double f) { return voltage_noise_psd(spec, c_c, f, arch); }, rng);
    return WaveformBuffer(std::move(x), fs, 0.0, "v_noise_in");
}

/// Input-referred current noise realization [A], as injected at the TIA input.
inline WaveformBuffer synth_current_noise(const NoiseSpec& spec, double c_c, Architecture arch, double fs,
                                          std::size_t n, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    auto x = shaped_gaussian_noise(n, fs, [&](double f) { return current_noise_psd(spec, c_c, f, arch); }, rng);
    return WaveformBuffer(std::move(x), fs, 0.0, "i_noise_in");
}

}  // namespace eps::noise
