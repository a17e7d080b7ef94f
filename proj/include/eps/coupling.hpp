#pragma once

/// Body-to-electrode coupling: capacitance, distance laws, and the Norton source current.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/core/waveform.hpp"

namespace eps::coupling {

using constants::kEpsilon0;
using constants::kPi;

struct CouplingGeometry {
    double electrode_side_m = 0.040;
    double distance_m = 0.30;
    double angle_rad = 0.0;
    double ecg_decay_exponent = 2.5;
    double rc_decay_exponent = 2.0;
    /// Distance at which the field-shared ECG coupling equals the ideal coupling capacitance.
    double field_sharing_reference_m = 0.30;
    /// Scales the ECG path only (sleep-posture presets: upward 1.0, side-facing < 1).
    double posture_attenuation = 1.0;

    /// Radius of the circular electrode with the same area as the square one.
    double equivalent_radius_m() const { return electrode_side_m / std::sqrt(kPi); }
    /// Parallel-plate area of the electrode.
    double plate_area_m2() const { return electrode_side_m * electrode_side_m; }

    void validate() const {
        if (!(electrode_side_m > 0.0)) throw DomainError("electrode side must be positive");
        if (!(distance_m > 0.0)) throw DomainError("distance must be positive");
        if (!(ecg_decay_exponent > 0.0) || !(rc_decay_exponent > 0.0)) {
            throw DomainError("decay exponents must be positive");
        }
        if (!(field_sharing_reference_m > 0.0)) throw DomainError("field-sharing reference must be positive");
        if (posture_attenuation < 0.0) throw DomainError("posture attenuation must be non-negative");
    }
};

/// Coupling capacitance of a disc electrode of radius a at distance d from an equipotential body:
/// C = eps0 pi a^2 / d + 8 eps0 a, which reduces to the parallel-plate value for d << a and to
/// the disc self-capacitance for d >> a.
inline double coupling_capacitance(double radius_m, double distance_m) {
    if (!(distance_m > 0.0)) throw DomainError("coupling_capacitance: distance must be positive");
    if (!(radius_m > 0.0)) throw DomainError("coupling_capacitance: radius must be positive");
    return kEpsilon0 * kPi * radius_m * radius_m / distance_m + 8.0 * kEpsilon0 * radius_m;
}

inline double coupling_capacitance(const CouplingGeometry& geom) {
    return coupling_capacitance(geom.equivalent_radius_m(), geom.distance_m);
}

enum class SignalPath { ecg, rc };

/// Empirical distance law s(d) = k / d^p with p taken from the geometry (2.5 ECG, 2.0 RC).
inline double signal_amplitude_at_distance(SignalPath kind, double k, double distance_m,
                                           const CouplingGeometry& geom = {}) {
    if (!(distance_m > 0.0)) throw DomainError("signal_amplitude_at_distance: distance must be positive");
    if (!(k > 0.0)) throw DomainError("signal_amplitude_at_distance: k must be positive");
    const double p = kind == SignalPath::ecg ? geom.ecg_decay_exponent : geom.rc_decay_exponent;
    return k / std::pow(distance_m, p);
}

/// Effective ECG-path capacitance including field sharing and angle/posture scaling.
inline double ecg_path_capacitance(const CouplingGeometry& geom) {
    const double dref = geom.field_sharing_reference_m;
    const double c_ref = coupling_capacitance(geom.equivalent_radius_m(), dref);
    const double angle = std::max(std::cos(geom.angle_rad), 0.0);
    return c_ref * std::pow(dref / geom.distance_m, geom.ecg_decay_exponent) * angle * geom.posture_attenuation;
}

/// Extra field-sharing factor on the motion path beyond the parallel-plate 1/d^2 law.
inline double motion_path_factor(const CouplingGeometry& geom) {
    return std::pow(geom.field_sharing_reference_m / geom.distance_m, geom.rc_decay_exponent - 2.0);
}

struct RespirationCurrent {
    double amps = 0.0;
    /// False when the excursion is not small against the mean distance (delta_d / d0 >= 0.2).
    bool small_signal_valid = true;
};

/// Small-signal displacement current of a sinusoidally moving chest wall:
/// I = -V_body (eps0 A / d0^2) w_RR delta_d cos(w_RR t).
inline RespirationCurrent respiration_current(double v_body, double area_m2, double d0_m, double delta_d_m,
                                              double f_rr_hz, double t_s) {
    if (!(d0_m > 0.0)) throw DomainError("respiration_current: d0 must be positive");
    const double w = constants::kTwoPi * f_rr_hz;
    RespirationCurrent r;
    r.amps = -v_body * (kEpsilon0 * area_m2 / (d0_m * d0_m)) * w * delta_d_m * std::cos(w * t_s);
    r.small_signal_valid = std::abs(delta_d_m) / d0_m < 0.2;
    return r;
}

/// Exponentially dissipating triboelectric charge scaling the BCG path.
struct TriboelectricState {
    double initial_scale = 1.0;
    double tau_s = 25.0;

    double scale(double t_s) const {
        if (t_s <= 0.0) return initial_scale;
        return 1.0 + (initial_scale - 1.0) * std::exp(-t_s / tau_s);
    }

    void validate() const {
        if (initial_scale < 1.0) throw DomainError("triboelectric initial scale must be >= 1");
        if (!(tau_s > 0.0)) throw DomainError("triboelectric tau must be positive");
    }
};

/// Ground-truth subject waveforms; all must share sample rate and length.
struct SubjectSignals {
    WaveformBuffer ecg_potential;       ///< body-surface cardiac potential [V]
    WaveformBuffer chest_displacement;  ///< distance modulation from breathing [m]
    std::optional<WaveformBuffer> bcg_displacement;  ///< cardiac mechanical motion [m]
    std::optional<WaveformBuffer> pli_potential;     ///< power-line body potential [V]
    std::optional<WaveformBuffer> motion_artifact;   ///< gross-motion current [A]
};

struct NortonSourceOptions {
    double v_body_dc = 10.0;
    /// Standard deviation of the per-recording distance error (repeat-to-repeat variation).
    double distance_jitter_m = 0.0;
};

/// Norton-equivalent input current, split by physical path for ground-truth comparison.
struct NortonSource {
    WaveformBuffer i_in;         ///< total source current [A]
    WaveformBuffer c_c;          ///< coupling capacitance trajectory [F]
    double v_body_dc = 0.0;
    double distance_m = 0.0;     ///< effective distance used (after jitter)
    WaveformBuffer ecg_current;
    WaveformBuffer motion_current;  ///< respiration + BCG through dC/dt
    WaveformBuffer pli_current;
    WaveformBuffer artifact_current;

    double fs() const { return i_in.fs(); }
    double mean_capacitance() const {
        double s = 0.0;
        for (double v : c_c.samples()) s += v;
        return s / static_cast<double>(c_c.size());
    }
};

namespace detail {
// Central-difference derivative with one-sided ends.
inline std::vector<double> derivative(std::span<const double> x, double fs) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (x[1] - x[0]) * fs;
    d[n - 1] = (x[n - 1] - x[n - 2]) * fs;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = 0.5 * (x[i + 1] - x[i - 1]) * fs;
    return d;
}

inline void require_same(const WaveformBuffer& ref, const WaveformBuffer& other, const char* name) {
    if (!same_timebase(ref, other)) {
        throw ContractError(std::string("build_norton_source: '") + name + "' does not share the ECG timebase");
    }
}
}  // namespace detail

/// Superposes the coupled currents:
///   ECG     C_ecg(d) dV/dt (field-shared, angle and posture scaled)
///   motion  V_body d/dt[eps0 A / d(t)] for breathing, scaled by the triboelectric state for BCG
///   PLI     C_c dV_pli/dt
///   artifact passed through as current
inline NortonSource build_norton_source(const SubjectSignals& sig, CouplingGeometry geom,
                                        const TriboelectricState& tribo, const NortonSourceOptions& opt,
                                        std::uint64_t seed) {
    geom.validate();
    tribo.validate();
    const auto& ecg = sig.ecg_potential;
    detail::require_same(ecg, sig.chest_displacement, "chest_displacement");
    if (sig.bcg_displacement) detail::require_same(ecg, *sig.bcg_displacement, "bcg_displacement");
    if (sig.pli_potential) detail::require_same(ecg, *sig.pli_potential, "pli_potential");
    if (sig.motion_artifact) detail::require_same(ecg, *sig.motion_artifact, "motion_artifact");

    if (opt.distance_jitter_m > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, opt.distance_jitter_m);
        const double jittered = geom.distance_m + nd(rng);
        geom.distance_m = std::max(jittered, 0.25 * geom.distance_m);
    }

    const double fs = ecg.fs();
    const std::size_t n = ecg.size();
    const double d0 = geom.distance_m;
    const double radius = geom.equivalent_radius_m();
    const double area = geom.plate_area_m2();
    const double c_nominal = coupling_capacitance(radius, d0);
    const double c_ecg = ecg_path_capacitance(geom);
    const double motion_scale = motion_path_factor(geom);

    auto dv_ecg = detail::derivative(ecg.samples(), fs);
    std::vector<double> i_ecg(n);
    for (std::size_t k = 0; k < n; ++k) i_ecg[k] = c_ecg * dv_ecg[k];

    // Parallel-plate part of the capacitance seen by the moving chest wall.
    std::vector<double> c_resp(n);
    std::vector<double> c_total(n);
    const auto& chest = sig.chest_displacement.samples();
    for (std::size_t k = 0; k < n; ++k) {
        const double d = d0 + chest[k] + (sig.bcg_displacement ? (*sig.bcg_displacement)[k] : 0.0);
        if (!(d > 0.0)) throw DomainError("build_norton_source: body reaches the electrode");
        c_resp[k] = motion_scale * kEpsilon0 * area / (d0 + chest[k]);
        c_total[k] = coupling_capacitance(radius, d);
    }
    auto dc_resp = detail::derivative(c_resp, fs);
    std::vector<double> i_motion(n);
    for (std::size_t k = 0; k < n; ++k) i_motion[k] = opt.v_body_dc * dc_resp[k];
    if (sig.bcg_displacement) {
        std::vector<double> c_bcg(n);
        for (std::size_t k = 0; k < n; ++k) {
            c_bcg[k] = motion_scale * kEpsilon0 * area / (d0 + (*sig.bcg_displacement)[k]);
        }
        auto dc_bcg = detail::derivative(c_bcg, fs);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / fs;
            i_motion[k] += opt.v_body_dc * tribo.scale(t) * dc_bcg[k];
        }
    }

    std::vector<double> i_pli(n, 0.0);
    if (sig.pli_potential) {
        auto dv = detail::derivative(sig.pli_potential->samples(), fs);
        for (std::size_t k = 0; k < n; ++k) i_pli[k] = c_nominal * dv[k];
    }
    std::vector<double> i_art(n, 0.0);
    if (sig.motion_artifact) i_art = sig.motion_artifact->values();

    std::vector<double> total(n);
    for (std::size_t k = 0; k < n; ++k) total[k] = i_ecg[k] + i_motion[k] + i_pli[k] + i_art[k];

    const double t0 = ecg.t0();
    return NortonSource{
        WaveformBuffer(std::move(total), fs, t0, "i_in"),
        WaveformBuffer(std::move(c_total), fs, t0, "c_c"),
        opt.v_body_dc,
        d0,
        WaveformBuffer(std::move(i_ecg), fs, t0, "i_ecg"),
        WaveformBuffer(std::move(i_motion), fs, t0, "i_motion"),
        WaveformBuffer(std::move(i_pli), fs, t0, "i_pli"),
        WaveformBuffer(std::move(i_art), fs, t0, "i_artifact"),
    };
}

}  // namespace eps::coupling
