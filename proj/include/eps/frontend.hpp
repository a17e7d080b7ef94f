#pragma once

/// Analog front end: TIA variants, cancellation loops, notches and the ECG/RC channel chains.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/core/fft.hpp"
#include "eps/core/waveform.hpp"
#include "eps/coupling.hpp"
#include "eps/filters/analog.hpp"
#include "eps/filters/iir.hpp"
#include "eps/noise.hpp"

namespace eps::frontend {

using constants::kTwoPi;
using filters::cplx;
using filters::Polynomial;
using filters::RationalTf;

struct BpfConfig {
    double f_center = 60.0;
    double peak_gain_a = 2.0;
    double q = 35.0;
    /// The loop is only stable with an inverting band-pass in the feedback path.
    bool inverting = true;

    void validate() const {
        if (!(q > 0.5)) throw ConfigError("BPF Q must exceed 0.5");
        if (!(peak_gain_a > 0.0)) throw ConfigError("BPF peak gain must be positive");
        if (!(f_center > 0.0)) throw ConfigError("BPF center frequency must be positive");
    }
};

struct SwitchedIntegratorConfig {
    double c_f_si = 10e-12;
    double t_s = 1.0 / 60.0;
    double i_rst = 100e-15;

    void validate() const {
        if (!(t_s > 0.0)) throw ConfigError("integration period must be positive");
        if (!(c_f_si > 0.0)) throw ConfigError("integrator capacitance must be positive");
    }
};

struct EcgChainConfig {
    double midband_gain_db = 24.0;
    double f_low = 0.5;
    double f_high = 154.0;
};

struct RcChainConfig {
    double gain_db = 20.0;
    double f_high = 5.0;
};

struct MclConfig {
    bool enabled = false;
    double estimator_cutoff = 2.0;  ///< Hz
    double attenuation = 0.75;      ///< fraction of the estimate subtracted; must stay below 1
    /// Band whose power ratio defines the reported suppression.
    double artifact_band_hz = 2.0;

    void validate() const {
        if (!(attenuation >= 0.0)) throw ConfigError("MCL attenuation must be non-negative");
        if (attenuation >= 1.0) throw ConfigError("MCL attenuation >= 1 makes the cancellation loop unstable");
        if (!(estimator_cutoff > 0.0)) throw ConfigError("MCL estimator cutoff must be positive");
    }
};

struct NotchConfig {
    bool enabled = true;
    double depth_db = 40.0;
    double width_hz = 0.8;
};

struct FrontEndConfig {
    double r_f = 150e9;
    double c_f = 0.1e-12;
    /// Coupling capacitance assumed by the TIA loop model (weakly coupled sensor).
    double c_c_nominal = 0.01e-12;
    BpfConfig acl_bpf;
    bool acl_enabled = true;
    bool aux_loop_enabled = true;
    double aux_loop_attenuation_db = 22.0;
    double notch_f0 = 60.0;
    double notch_2f0 = 120.0;
    NotchConfig notch;
    EcgChainConfig ecg_chain;
    RcChainConfig rc_chain;
    MclConfig mcl;
    double rail_v = 4.0;
    bool inject_noise = true;

    void validate() const {
        if (!(r_f > 0.0) || !(c_f > 0.0) || !(c_c_nominal > 0.0)) {
            throw ConfigError("r_f, c_f and c_c_nominal must be positive");
        }
        acl_bpf.validate();
        mcl.validate();
        if (!(ecg_chain.f_high > rc_chain.f_high)) throw ConfigError("ECG f_high must exceed RC f_high");
        if (!(ecg_chain.f_low > 0.0) || !(rc_chain.f_high > 0.0)) throw ConfigError("channel corners must be positive");
        if (!(notch_f0 > 0.0) || !(notch_2f0 > 0.0)) throw ConfigError("notch frequencies must be positive");
        if (!(notch.width_hz > 0.0) || !(notch.depth_db > 3.0)) throw ConfigError("invalid notch width/depth");
        if (!(rail_v > 0.0)) throw ConfigError("rail voltage must be positive");
        if (!(aux_loop_attenuation_db >= 0.0)) throw ConfigError("aux loop attenuation must be non-negative");
    }

    double corner_hz() const { return 1.0 / (kTwoPi * r_f * c_f); }
};

// ---------------------------------------------------------------- transfer functions

/// H0 = s C_c R_f / (s C_f R_f + 1): voltage gain of the plain TIA.
inline RationalTf tia_open_loop_tf(const FrontEndConfig& cfg, double c_c) {
    return {Polynomial{0.0, c_c * cfg.r_f}, Polynomial{1.0, cfg.c_f * cfg.r_f}};
}

/// Feedback band-pass H_BPF = A (w0/Q) s / (s^2 + (w0/Q) s + w0^2), sign-flipped if not inverting.
inline RationalTf acl_bpf_tf(const BpfConfig& bpf, double q_override = 0.0) {
    const double q = q_override > 0.0 ? q_override : bpf.q;
    auto tf = filters::bandpass2(bpf.f_center, q, bpf.peak_gain_a);
    if (!bpf.inverting) tf.num = -1.0 * tf.num;
    return tf;
}

namespace detail {
inline void require_stable(const Polynomial& den, const char* what) {
    for (auto p : den.roots()) {
        if (p.real() >= 0.0) throw ConfigError(std::string(what) + ": closed-loop pole in the right half plane");
    }
}

// -Z_f / (H_BPF (1 + H0) + 1), with Z_f = R_f / (s C_f R_f + 1).
inline RationalTf closed_loop_impedance(const FrontEndConfig& cfg, double c_c, const RationalTf& bpf) {
    const Polynomial df{1.0, cfg.c_f * cfg.r_f};
    const Polynomial d0_plus_n0{1.0, (cfg.c_f + c_c) * cfg.r_f};
    RationalTf z{-1.0 * bpf.den * Polynomial{cfg.r_f}, bpf.num * d0_plus_n0 + bpf.den * df};
    return z;
}
}  // namespace detail

/// H = -H0 / (H_BPF (1 + H0) + 1). Throws ConfigError when the loop is unstable.
inline RationalTf closed_loop_tf(const FrontEndConfig& cfg, double c_c) {
    cfg.acl_bpf.validate();
    const auto h0 = tia_open_loop_tf(cfg, c_c);
    const auto b = acl_bpf_tf(cfg.acl_bpf);
    RationalTf h{-1.0 * h0.num * b.den, b.num * (h0.den + h0.num) + b.den * h0.den};
    detail::require_stable(h.den, "closed_loop_tf");
    return h;
}

/// Weak-coupling approximation -H0 / (H_BPF + 1).
inline RationalTf weak_coupling_tf(const FrontEndConfig& cfg, double c_c) {
    const auto h0 = tia_open_loop_tf(cfg, c_c);
    const auto b = acl_bpf_tf(cfg.acl_bpf);
    return {-1.0 * h0.num * b.den, (b.num + b.den) * h0.den};
}

/// Transimpedance v_out / i_in of the TIA, with or without the cancellation loop.
inline RationalTf tia_transimpedance_tf(const FrontEndConfig& cfg, double c_c, bool acl_on, double bpf_q = 0.0) {
    if (!acl_on) return {Polynomial{-cfg.r_f}, Polynomial{1.0, cfg.c_f * cfg.r_f}};
    auto z = detail::closed_loop_impedance(cfg, c_c, acl_bpf_tf(cfg.acl_bpf, bpf_q));
    detail::require_stable(z.den, "tia_transimpedance_tf");
    return z;
}

/// Z = (1 - e^{-s T_s}) / (s C_f) of the correlated-double-sampled switched integrator.
inline cplx switched_integrator_tz(const SwitchedIntegratorConfig& si, double f_hz) {
    if (f_hz < 0.0) throw DomainError("switched_integrator_tz requires f >= 0");
    if (f_hz == 0.0) return {si.t_s / si.c_f_si, 0.0};
    // Reduce the phase to one period first so integer multiples of 1/T_s land on an exact null.
    const double cycles = f_hz * si.t_s;
    const double frac = cycles - std::round(cycles);
    const cplx e = std::polar(1.0, -kTwoPi * frac);
    const cplx s(0.0, kTwoPi * f_hz);
    return (1.0 - e) / (s * si.c_f_si);
}

/// Finite-depth twin-T style notch with the given -3 dB width.
inline RationalTf twin_t_notch_tf(double f_notch, double depth_db = 40.0, double width_hz = 0.8) {
    if (!(f_notch > 0.0)) throw DomainError("notch frequency must be positive");
    const double d = std::pow(10.0, -depth_db / 20.0);
    if (2.0 * d * d >= 1.0) throw DomainError("notch depth must exceed 3 dB");
    const double q_pole = f_notch * std::sqrt(1.0 - 2.0 * d * d) / width_hz;
    return filters::notch2(f_notch, q_pole, d);
}

// ---------------------------------------------------------------- discrete blocks

struct ChainDesign {
    filters::SosFilter tia;
    filters::SosFilter notches;
    filters::SosFilter ecg;
    filters::SosFilter rc;
    filters::SosFilter mcl_estimator;
};

inline ChainDesign design_chain(const FrontEndConfig& cfg, double fs) {
    using filters::bilinear_sos;
    using filters::prewarped_q;
    ChainDesign d;
    if (cfg.acl_enabled) {
        const double f0 = cfg.acl_bpf.f_center;
        const double q = prewarped_q(cfg.acl_bpf.q, f0, fs);
        d.tia = bilinear_sos(tia_transimpedance_tf(cfg, cfg.c_c_nominal, true, q), fs, f0);
    } else {
        d.tia = bilinear_sos(tia_transimpedance_tf(cfg, cfg.c_c_nominal, false), fs, cfg.corner_hz());
    }
    if (!(d.tia.response(0.0, fs).real() < 0.0)) throw NumericalError("TIA discretization lost its sign");
    for (const auto& sec : d.tia.sections()) {
        const double disc = sec.a1 * sec.a1 - 4.0 * sec.a2;
        const double r = disc < 0.0 ? std::sqrt(sec.a2) : (std::abs(sec.a1) + std::sqrt(disc)) / 2.0;
        if (r >= 1.0) throw ConfigError("discretized TIA loop has a pole outside the unit circle");
    }

    if (cfg.notch.enabled) {
        auto notch_at = [&](double f) {
            const double dlin = std::pow(10.0, -cfg.notch.depth_db / 20.0);
            const double qp = f * std::sqrt(1.0 - 2.0 * dlin * dlin) / cfg.notch.width_hz;
            return bilinear_sos(filters::notch2(f, prewarped_q(qp, f, fs), dlin), fs, f);
        };
        d.notches = notch_at(cfg.notch_f0).then(notch_at(cfg.notch_2f0));
    } else {
        d.notches = filters::SosFilter({filters::Biquad{}});
    }

    const double g_ecg = std::pow(10.0, cfg.ecg_chain.midband_gain_db / 20.0);
    d.ecg = bilinear_sos(filters::butter2_highpass(cfg.ecg_chain.f_low), fs, cfg.ecg_chain.f_low)
                .then(bilinear_sos(filters::butter2_lowpass(cfg.ecg_chain.f_high) * filters::constant_gain(g_ecg), fs,
                                   cfg.ecg_chain.f_high));
    const double g_rc = std::pow(10.0, cfg.rc_chain.gain_db / 20.0);
    d.rc = bilinear_sos(filters::butter2_lowpass(cfg.rc_chain.f_high) * filters::constant_gain(g_rc), fs,
                        cfg.rc_chain.f_high);
    d.mcl_estimator =
        bilinear_sos(filters::first_order_lowpass(cfg.mcl.estimator_cutoff), fs, cfg.mcl.estimator_cutoff);
    return d;
}

/// Group delay of the discretized TIA, notch and RC path at f_hz, from the phase slope.
inline double rc_group_delay(const FrontEndConfig& cfg, double fs, double f_hz) {
    if (!(f_hz > 0.0) || f_hz >= 0.5 * fs) throw DomainError("rc_group_delay requires 0 < f < fs/2");
    const auto d = design_chain(cfg, fs);
    auto phase = [&](double f) { return std::arg(d.tia.response(f, fs) * d.notches.response(f, fs) * d.rc.response(f, fs)); };
    const double df = 1e-3 * f_hz;
    double dphi = phase(f_hz + df) - phase(f_hz - df);
    dphi = std::remainder(dphi, kTwoPi);
    return -dphi / (kTwoPi * 2.0 * df);
}

// ---------------------------------------------------------------- motion cancellation

struct MclResult {
    WaveformBuffer cancelled;
    double suppression_db = 0.0;
};

namespace detail {
inline double band_power(std::span<const double> x, double fs, double f_lo, double f_hi) {
    auto spec = fft::rfft(x);
    double p = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(x.size());
        if (f >= f_lo && f <= f_hi) p += std::norm(spec[k]);
    }
    return p;
}
}  // namespace detail

/// y = x - alpha * LPF(x): subtracts an attenuated low-frequency motion estimate.
inline MclResult mcl_apply(const WaveformBuffer& x, const MclConfig& mcl) {
    mcl.validate();
    const double fs = x.fs();
    auto est = filters::bilinear_sos(filters::first_order_lowpass(mcl.estimator_cutoff), fs, mcl.estimator_cutoff);
    auto m = est.process(x.samples());
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - mcl.attenuation * m[i];
    const double before = detail::band_power(x.samples(), fs, 0.0, mcl.artifact_band_hz);
    const double after = detail::band_power(y, fs, 0.0, mcl.artifact_band_hz);
    const double sup = (before > 0.0 && after > 0.0) ? 10.0 * std::log10(before / after) : 0.0;
    return {x.with_samples(std::move(y)), sup};
}

// ---------------------------------------------------------------- full chain

struct SaturationReport {
    std::size_t tia = 0;
    std::size_t ecg = 0;
    std::size_t rc = 0;
    bool any() const { return tia + ecg + rc > 0; }
};

struct FrontEndOutput {
    WaveformBuffer ecg_channel;
    WaveformBuffer rc_channel;
    WaveformBuffer tia_output;
    WaveformBuffer ecg_reference;  ///< noise-free run
    WaveformBuffer rc_reference;
    SaturationReport saturation;
};

namespace detail {
inline std::size_t clip(std::vector<double>& v, double rail) {
    std::size_t n = 0;
    for (auto& x : v) {
        if (x > rail) {
            x = rail;
            ++n;
        } else if (x < -rail) {
            x = -rail;
            ++n;
        }
    }
    return n;
}

struct ChainRun {
    std::vector<double> tia, ecg, rc;
    SaturationReport sat;
};

inline ChainRun run_chain(const ChainDesign& design, const FrontEndConfig& cfg, std::vector<double> current,
                          double fs) {
    ChainRun r;
    auto tia = design.tia;
    tia.reset();
    r.tia = tia.process(current);
    r.sat.tia = clip(r.tia, cfg.rail_v);

    auto notches = design.notches;
    notches.reset();
    auto post = notches.process(r.tia);

    std::vector<double> ecg_in = post;
    if (cfg.mcl.enabled) ecg_in = mcl_apply(WaveformBuffer(post, fs), cfg.mcl).cancelled.values();

    auto ecg = design.ecg;
    ecg.reset();
    r.ecg = ecg.process(ecg_in);
    r.sat.ecg = clip(r.ecg, cfg.rail_v);

    auto rc = design.rc;
    rc.reset();
    r.rc = rc.process(post);
    r.sat.rc = clip(r.rc, cfg.rail_v);
    return r;
}
}  // namespace detail

/// Input current seen by the TIA after the auxiliary surface loop (noise-free).
inline std::vector<double> effective_input_current(const coupling::NortonSource& src, const FrontEndConfig& cfg) {
    std::vector<double> i = src.i_in.values();
    if (cfg.acl_enabled && cfg.aux_loop_enabled) {
        const double keep = std::pow(10.0, -cfg.aux_loop_attenuation_db / 20.0);
        for (std::size_t k = 0; k < i.size(); ++k) i[k] -= (1.0 - keep) * src.pli_current[k];
    }
    return i;
}

/// Converts the Norton source into ECG and RC channel voltages.
inline FrontEndOutput simulate_frontend(const coupling::NortonSource& src, const FrontEndConfig& cfg,
                                        const noise::NoiseSpec& noise_spec, std::uint64_t seed) {
    cfg.validate();
    const double fs = src.fs();
    if (fs < 4.0 * cfg.ecg_chain.f_high) {
        throw ContractError("simulate_frontend: source must be sampled at >= 4x the ECG upper cutoff");
    }
    const auto design = design_chain(cfg, fs);
    auto clean_current = effective_input_current(src, cfg);

    auto noisy_current = clean_current;
    if (cfg.inject_noise) {
        const auto n = noise::synth_current_noise(noise_spec, src.mean_capacitance(),
                                                  noise::Architecture::continuous_time, fs, src.i_in.size(), seed);
        for (std::size_t k = 0; k < noisy_current.size(); ++k) noisy_current[k] += n[k];
    }

    auto noisy = detail::run_chain(design, cfg, std::move(noisy_current), fs);
    auto clean = detail::run_chain(design, cfg, std::move(clean_current), fs);
    const double t0 = src.i_in.t0();
    return FrontEndOutput{
        WaveformBuffer(std::move(noisy.ecg), fs, t0, "ecg_channel"),
        WaveformBuffer(std::move(noisy.rc), fs, t0, "rc_channel"),
        WaveformBuffer(std::move(noisy.tia), fs, t0, "tia_output"),
        WaveformBuffer(std::move(clean.ecg), fs, t0, "ecg_reference"),
        WaveformBuffer(std::move(clean.rc), fs, t0, "rc_reference"),
        noisy.sat,
    };
}

}  // namespace eps::frontend
