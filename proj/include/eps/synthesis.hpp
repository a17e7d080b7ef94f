#pragma once

/// Ground-truth physiological and interference waveforms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "eps/core/colored_noise.hpp"
#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/core/waveform.hpp"

namespace eps::synthesis {

using constants::kTwoPi;

enum class RcPattern { shallow, forced_fvc };

struct BandPeak {
    double center_hz = 10.0;
    /// Bump height relative to the 1/f^gamma background at the center frequency.
    double relative_power = 1.0;
    double width_hz = 0.4;
};

struct SubjectProfile {
    double hr_bpm = 72.0;
    /// Optional piecewise-linear heart-rate trajectory (time s, bpm); overrides hr_bpm when set.
    std::vector<std::pair<double, double>> hr_trajectory;
    double hrv_sigma_s = 0.0;
    double ecg_amplitude_v = 0.5e-3;

    double rr_per_min = 12.0;
    RcPattern rc_pattern = RcPattern::shallow;
    double chest_amplitude_m = 0.005;
    /// Relative standard deviation of breath-cycle durations.
    double rr_cycle_jitter = 0.0;

    double eeg_gamma = 2.36;
    std::vector<BandPeak> eeg_band_peaks = {{10.0, 3.0, 0.4}, {30.0, 1.5, 0.4}};
    double eeg_rms_v = 20e-6;
    bool eyes_closed = false;
    double eyes_closed_alpha_gain = 4.0;
    double blink_rate_per_min = 0.0;

    double heart_rate_at(double t) const {
        if (hr_trajectory.empty()) return hr_bpm;
        if (t <= hr_trajectory.front().first) return hr_trajectory.front().second;
        if (t >= hr_trajectory.back().first) return hr_trajectory.back().second;
        auto it = std::upper_bound(hr_trajectory.begin(), hr_trajectory.end(), t,
                                   [](double v, const auto& p) { return v < p.first; });
        const auto& [t1, h1] = *it;
        const auto& [t0, h0] = *(it - 1);
        return h0 + (h1 - h0) * (t - t0) / (t1 - t0);
    }

    void validate() const {
        auto hr_ok = [](double h) { return h > 20.0 && h < 240.0; };
        if (!hr_ok(hr_bpm)) throw DomainError("heart rate must lie in (20, 240) bpm");
        for (std::size_t i = 0; i < hr_trajectory.size(); ++i) {
            if (!hr_ok(hr_trajectory[i].second)) throw DomainError("heart-rate trajectory outside (20, 240) bpm");
            if (i > 0 && !(hr_trajectory[i].first > hr_trajectory[i - 1].first)) {
                throw DomainError("heart-rate trajectory times must increase");
            }
        }
        if (!(rr_per_min > 2.0 && rr_per_min < 60.0)) throw DomainError("respiration rate must lie in (2, 60) /min");
        if (eeg_gamma < 0.0) throw DomainError("EEG spectral slope must be non-negative");
        if (hrv_sigma_s < 0.0 || rr_cycle_jitter < 0.0 || rr_cycle_jitter >= 0.5) {
            throw DomainError("jitter parameters out of range");
        }
        if (!(chest_amplitude_m >= 0.0) || !(ecg_amplitude_v >= 0.0) || !(eeg_rms_v >= 0.0)) {
            throw DomainError("amplitudes must be non-negative");
        }
        if (blink_rate_per_min < 0.0) throw DomainError("blink rate must be non-negative");
        for (const auto& p : eeg_band_peaks) {
            if (!(p.center_hz > 0.0) || !(p.width_hz > 0.0) || p.relative_power < 0.0) {
                throw DomainError("invalid EEG band peak");
            }
        }
    }
};

namespace detail {
inline std::size_t sample_count(double fs, double duration) {
    if (!(fs > 0.0)) throw DomainError("sample rate must be positive");
    if (!(duration > 0.0)) throw DomainError("duration must be positive");
    return static_cast<std::size_t>(std::llround(fs * duration));
}

inline double gaussian(double t, double sigma) { return std::exp(-0.5 * (t / sigma) * (t / sigma)); }
}  // namespace detail

// ---------------------------------------------------------------- ECG

/// P/QRS/T as three Gaussian bumps relative to the R peak.
struct EcgTemplate {
    struct Wave {
        double offset_s;
        double amplitude;
        double sigma_s;
    };
    std::vector<Wave> waves = {{-0.16, 0.12, 0.025}, {0.0, 1.0, 0.010}, {0.25, 0.30, 0.045}};

    double raw(double t) const {
        double v = 0.0;
        for (const auto& w : waves) v += w.amplitude * detail::gaussian(t - w.offset_s, w.sigma_s);
        return v;
    }

    /// max-min of the raw template over one beat window.
    double raw_peak_to_peak() const {
        double lo = raw(-0.5), hi = lo;
        for (int i = 0; i <= 10000; ++i) {
            const double v = raw(-0.5 + 1.0 * i / 10000.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi - lo;
    }

    static constexpr double kSupport = 0.5;  // template is negligible beyond +-0.5 s
};

struct EcgSynthesis {
    WaveformBuffer ecg;
    std::vector<double> r_times;
};

inline EcgSynthesis synth_ecg(const SubjectProfile& profile, double fs, double duration, std::uint64_t seed,
                              const EcgTemplate& tmpl = {}) {
    profile.validate();
    const std::size_t n = detail::sample_count(fs, duration);
    const double mean_rr = 60.0 / profile.heart_rate_at(0.0);
    if (duration < 2.0 * mean_rr) throw DomainError("synth_ecg: duration shorter than two beats");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);

    // Beats extend past both ends so the waveform is stationary at the edges.
    double t = 0.4 * mean_rr;
    std::vector<double> beats;
    for (double tb = t - mean_rr; tb > -EcgTemplate::kSupport; tb -= mean_rr) beats.insert(beats.begin(), tb);
    while (t < duration + EcgTemplate::kSupport) {
        beats.push_back(t);
        double rr = 60.0 / profile.heart_rate_at(t);
        if (profile.hrv_sigma_s > 0.0) rr += profile.hrv_sigma_s * jitter(rng);
        t += std::max(rr, 0.2);
    }

    const double scale = profile.ecg_amplitude_v / tmpl.raw_peak_to_peak();
    std::vector<double> x(n, 0.0);
    const auto support = static_cast<std::ptrdiff_t>(std::ceil(EcgTemplate::kSupport * fs));
    for (double tb : beats) {
        const auto center = static_cast<std::ptrdiff_t>(std::llround(tb * fs));
        const auto lo = std::max<std::ptrdiff_t>(0, center - support);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, center + support);
        for (auto i = lo; i <= hi; ++i) x[static_cast<std::size_t>(i)] += scale * tmpl.raw(i / fs - tb);
    }

    std::vector<double> r_times;
    for (double tb : beats) {
        if (tb >= 0.0 && tb <= duration) r_times.push_back(tb);
    }
    return {WaveformBuffer(std::move(x), fs, 0.0, "ecg_true"), std::move(r_times)};
}

/// Cardiac mechanical displacement: a Gaussian-windowed oscillation following each R peak.
inline WaveformBuffer synth_bcg_displacement(const std::vector<double>& r_times, double amplitude_m, double fs,
                                             double duration) {
    const std::size_t n = detail::sample_count(fs, duration);
    constexpr double kDelay = 0.2, kSigma = 0.06, kFreq = 7.0;
    std::vector<double> x(n, 0.0);
    const auto support = static_cast<std::ptrdiff_t>(std::ceil(5.0 * kSigma * fs));
    for (double tr : r_times) {
        const double tc = tr + kDelay;
        const auto center = static_cast<std::ptrdiff_t>(std::llround(tc * fs));
        const auto lo = std::max<std::ptrdiff_t>(0, center - support);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, center + support);
        for (auto i = lo; i <= hi; ++i) {
            const double u = i / fs - tc;
            x[static_cast<std::size_t>(i)] += amplitude_m * std::sin(kTwoPi * kFreq * u) * detail::gaussian(u, kSigma);
        }
    }
    return WaveformBuffer(std::move(x), fs, 0.0, "bcg_displacement");
}

// ---------------------------------------------------------------- respiration

/// Closed-form chest displacement built from piecewise segments, each C0-continuous with its neighbours.
class RespirationProfile {
public:
    enum class Kind { sine_cycle, linear, exponential, cosine_ramp };
    struct Segment {
        Kind kind;
        double t_start, t_end;
        double a, b;  // meaning depends on kind (see value())
    };

    void add(Segment s) { segments_.push_back(s); }
    const std::vector<Segment>& segments() const { return segments_; }
    double end_time() const { return segments_.empty() ? 0.0 : segments_.back().t_end; }

    std::vector<double> breakpoints() const {
        std::vector<double> b;
        for (const auto& s : segments_) b.push_back(s.t_start);
        if (!segments_.empty()) b.push_back(segments_.back().t_end);
        return b;
    }

    double displacement(double t) const { return eval(t, false); }
    double velocity(double t) const { return eval(t, true); }

    static constexpr double kExpirationTau = 0.4;

private:
    double eval(double t, bool deriv) const {
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const Segment& s) { return v < s.t_start; });
        const Segment& s = it == segments_.begin() ? segments_.front() : *(it - 1);
        const double u = t - s.t_start;
        const double len = s.t_end - s.t_start;
        switch (s.kind) {
            case Kind::sine_cycle: {
                // amplitude a, trough-to-trough over len: x = -a cos(2 pi u / len)
                const double w = kTwoPi / len;
                return deriv ? s.a * w * std::sin(w * u) : -s.a * std::cos(w * u);
            }
            case Kind::linear:  // from a to b
                return deriv ? (s.b - s.a) / len : s.a + (s.b - s.a) * u / len;
            case Kind::exponential: {  // from a toward asymptote b
                const double e = std::exp(-u / kExpirationTau);
                return deriv ? -(s.a - s.b) * e / kExpirationTau : s.b + (s.a - s.b) * e;
            }
            case Kind::cosine_ramp: {  // from a to b
                const double w = constants::kPi / len;
                return deriv ? (s.b - s.a) * 0.5 * w * std::sin(w * u) : s.a + (s.b - s.a) * 0.5 * (1.0 - std::cos(w * u));
            }
        }
        return 0.0;
    }

    std::vector<Segment> segments_;
};

struct FvcManeuverShape {
    double inspiration_s = 1.5;
    double expiration_s = 3.0;
    double recovery_s = 2.0;
    double peak_scale = 4.0;      ///< deep-inspiration peak in units of the tidal amplitude
    double residual_scale = 3.0;  ///< forced-expiration asymptote below zero, in tidal amplitudes
    double total() const { return inspiration_s + expiration_s + recovery_s; }
};

struct RespirationSynthesis {
    WaveformBuffer displacement;
    std::vector<double> peak_times;
    RespirationProfile profile;
    /// [start, end) of the forced maneuver, if any.
    std::optional<std::pair<double, double>> maneuver;
};

inline RespirationSynthesis synth_respiration(const SubjectProfile& profile, double fs, double duration,
                                              std::uint64_t seed = 0, const FvcManeuverShape& shape = {}) {
    profile.validate();
    const std::size_t n = detail::sample_count(fs, duration);
    const double period = 60.0 / profile.rr_per_min;
    if (duration < 2.0 * period) throw DomainError("synth_respiration: duration shorter than two cycles");
    const double amp = profile.chest_amplitude_m;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto next_period = [&] {
        if (profile.rr_cycle_jitter <= 0.0) return period;
        return period * std::clamp(1.0 + profile.rr_cycle_jitter * nd(rng), 0.5, 1.5);
    };

    RespirationProfile prof;
    std::vector<double> peaks;
    std::optional<std::pair<double, double>> maneuver;
    std::size_t pre_cycles = 0;
    if (profile.rc_pattern == RcPattern::forced_fvc) {
        pre_cycles = std::max<std::size_t>(2, static_cast<std::size_t>(0.3 * duration / period));
        if (static_cast<double>(pre_cycles) * period * 1.5 + shape.total() > duration) {
            throw DomainError("synth_respiration: duration too short for a forced maneuver");
        }
    }

    double t = 0.0;
    std::size_t cycle = 0;
    while (t < duration) {
        if (profile.rc_pattern == RcPattern::forced_fvc && cycle == pre_cycles && !maneuver) {
            const double peak = shape.peak_scale * amp;
            const double asym = -shape.residual_scale * amp;
            const double t_insp = t + shape.inspiration_s;
            const double t_exp = t_insp + shape.expiration_s;
            const double x_end = asym + (peak - asym) * std::exp(-shape.expiration_s / RespirationProfile::kExpirationTau);
            prof.add({RespirationProfile::Kind::linear, t, t_insp, -amp, peak});
            prof.add({RespirationProfile::Kind::exponential, t_insp, t_exp, peak, asym});
            prof.add({RespirationProfile::Kind::cosine_ramp, t_exp, t_exp + shape.recovery_s, x_end, -amp});
            peaks.push_back(t_insp);
            maneuver = std::make_pair(t, t_exp + shape.recovery_s);
            t = t_exp + shape.recovery_s;
            continue;
        }
        const double p = next_period();
        prof.add({RespirationProfile::Kind::sine_cycle, t, t + p, amp, 0.0});
        peaks.push_back(t + 0.5 * p);
        t += p;
        ++cycle;
    }

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = prof.displacement(static_cast<double>(i) / fs);
    std::erase_if(peaks, [&](double tp) { return tp < 0.0 || tp > duration; });
    return {WaveformBuffer(std::move(x), fs, 0.0, "chest_displacement"), std::move(peaks), std::move(prof), maneuver};
}

// ---------------------------------------------------------------- EEG

/// Expected one-sided PSD shape (unnormalized) for the profile.
inline double eeg_psd_shape(const SubjectProfile& profile, double f) {
    const double bg = [&](double ff) { return std::pow(std::max(ff, 1.0), -profile.eeg_gamma); }(f);
    double v = bg;
    for (const auto& p : profile.eeg_band_peaks) {
        double rel = p.relative_power;
        if (profile.eyes_closed && p.center_hz >= 8.0 && p.center_hz < 14.0) rel *= profile.eyes_closed_alpha_gain;
        v += rel * std::pow(std::max(p.center_hz, 1.0), -profile.eeg_gamma) * detail::gaussian(f - p.center_hz, p.width_hz);
    }
    return v;
}

inline WaveformBuffer synth_eeg(const SubjectProfile& profile, double fs, double duration, std::uint64_t seed) {
    profile.validate();
    if (fs < 200.0) throw DomainError("synth_eeg: sample rate must be at least 200 Hz");
    const std::size_t n = detail::sample_count(fs, duration);

    // Normalize the expected variance (not the realization) to the target RMS.
    double total = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        total += eeg_psd_shape(profile, f) * fs / static_cast<double>(n) * (n % 2 == 0 && k == n / 2 ? 0.5 : 1.0);
    }
    const double gain = profile.eeg_rms_v * profile.eeg_rms_v / total;

    std::mt19937_64 rng(seed);
    auto x = shaped_gaussian_noise(n, fs, [&](double f) { return gain * eeg_psd_shape(profile, f); }, rng);

    if (profile.blink_rate_per_min > 0.0) {
        std::mt19937_64 blink_rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::exponential_distribution<double> gap(profile.blink_rate_per_min / 60.0);
        const double blink_amp = 5.0 * profile.eeg_rms_v;
        for (double tb = gap(blink_rng); tb < duration; tb += gap(blink_rng)) {
            for (std::size_t i = 0; i < n; ++i) {
                const double u = static_cast<double>(i) / fs - tb;
                if (std::abs(u) < 0.5) x[i] += blink_amp * detail::gaussian(u, 0.1);
            }
        }
    }
    return WaveformBuffer(std::move(x), fs, 0.0, "eeg_true");
}

// ---------------------------------------------------------------- interference

/// Sum of sines at n*f0 (n = 1..), frequency offset by drift_ppm.
inline WaveformBuffer synth_pli(double f0, const std::vector<double>& harmonic_amplitudes, double drift_ppm,
                                double fs, double duration) {
    if (!(f0 > 0.0)) throw DomainError("synth_pli: line frequency must be positive");
    const std::size_t n = detail::sample_count(fs, duration);
    const double f = f0 * (1.0 + drift_ppm * 1e-6);
    std::vector<double> x(n, 0.0);
    for (std::size_t h = 0; h < harmonic_amplitudes.size(); ++h) {
        const double w = kTwoPi * f * static_cast<double>(h + 1);
        const double a = harmonic_amplitudes[h];
        if (a == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(w * static_cast<double>(i) / fs);
    }
    return WaveformBuffer(std::move(x), fs, 0.0, "pli");
}

/// Gross-motion transients: Gaussian bumps (sigma 0.3-0.5 s, random polarity) at the event times.
inline WaveformBuffer synth_motion_artifact(const std::vector<double>& event_times, double amplitude, double fs,
                                            double duration, std::uint64_t seed) {
    if (amplitude < 0.0) throw DomainError("synth_motion_artifact: amplitude must be non-negative");
    const std::size_t n = detail::sample_count(fs, duration);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> width(0.3, 0.5);
    std::bernoulli_distribution polarity(0.5);
    std::vector<double> x(n, 0.0);
    for (double te : event_times) {
        const double sigma = width(rng);
        const double sign = polarity(rng) ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) / fs - te;
            if (std::abs(u) < 6.0 * sigma) x[i] += sign * amplitude * detail::gaussian(u, sigma);
        }
    }
    return WaveformBuffer(std::move(x), fs, 0.0, "motion_artifact");
}

}  // namespace eps::synthesis
