#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/core/fft.hpp"
#include "eps/core/waveform.hpp"
#include "eps/filters/analog.hpp"
#include "eps/filters/iir.hpp"
#include "eps/spectral.hpp"

namespace eps::analysis {

enum class EventKind { r_peak, breath_peak, blink };

/// Event times in seconds; strictly increasing.
struct EventSeries {
    std::vector<double> times;
    EventKind kind = EventKind::r_peak;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    void validate() const {
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1])) throw ContractError("EventSeries: times must be strictly increasing");
        }
    }
};

namespace detail {

inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

inline double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

// Vertex offset in samples of the parabola through y[i-1], y[i], y[i+1]; within [-0.5, 0.5].
inline double parabolic_offset(const std::vector<double>& y, std::size_t i) {
    if (i == 0 || i + 1 >= y.size()) return 0.0;
    const double den = y[i - 1] - 2.0 * y[i] + y[i + 1];
    if (!(den < 0.0)) return 0.0;
    return std::clamp(0.5 * (y[i - 1] - y[i + 1]) / den, -0.5, 0.5);
}

inline std::vector<double> zero_phase(const filters::RationalTf& tf, double prewarp_hz, const WaveformBuffer& x,
                                      double pad_s) {
    const auto sos = filters::bilinear_sos(tf, x.fs(), prewarp_hz);
    const auto pad = static_cast<std::size_t>(pad_s * x.fs());
    return filters::filtfilt(sos, x.samples(), pad);
}

// Strict-left local maxima (plateaus report their first sample).
inline std::vector<std::size_t> local_maxima(const std::vector<double>& y) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) idx.push_back(i);
    }
    return idx;
}

// Greedy non-maximum suppression: visit candidates by descending score, keep those
// farther than `gap` samples from every kept one. Returns sorted indices.
inline std::vector<std::size_t> suppress(const std::vector<std::size_t>& cand, const std::vector<double>& score,
                                         std::size_t gap) {
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::set<std::size_t> kept;
    for (std::size_t o : order) {
        const std::size_t i = cand[o];
        auto it = kept.lower_bound(i >= gap ? i - gap : 0);
        if (it != kept.end() && *it <= i + gap) continue;
        kept.insert(i);
    }
    return {kept.begin(), kept.end()};
}

}  // namespace detail

// ---------------------------------------------------------------- CWT band filter

inline constexpr double kMorletOmega0 = 6.0;
inline constexpr double kCwtScaleStep = 1.0 / 16.0;  ///< octaves between adjacent scales

/// Morlet Fourier-equivalent period factor: period = factor * scale.
inline double morlet_fourier_factor(double omega0 = kMorletOmega0) {
    return 4.0 * constants::kPi / (omega0 + std::sqrt(2.0 + omega0 * omega0));
}

/// Frequency response of the CWT analysis/reconstruction pair restricted to [f_lo, f_hi].
/// Real and non-negative, so the filter is zero-phase; tends to 1 mid-band as the scale step shrinks.
inline double cwt_gain(double f, double f_lo, double f_hi) {
    if (!(f > 0.0)) return 0.0;
    const double w0 = kMorletOmega0;
    auto psi_hat = [w0](double u) { return u > 0.0 ? std::exp(-0.5 * (u - w0) * (u - w0)) : 0.0; };
    // Scale-measure normalization; the lower limit cuts the e^-18/u tail of the non-admissible Morlet.
    static const double c_norm = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double u) { return psi_hat(u) / u; }, 1.0, w0 + 14.0, 15, 1e-13);
    const double factor = morlet_fourier_factor(w0);
    const double s_min = 1.0 / (factor * f_hi);
    const double s_max = 1.0 / (factor * f_lo);
    const auto n_scales = static_cast<std::size_t>(std::ceil(std::log2(s_max / s_min) / kCwtScaleStep)) + 1;
    const double omega = constants::kTwoPi * f;
    double g = 0.0;
    for (std::size_t j = 0; j < n_scales; ++j) g += psi_hat(s_min * std::exp2(j * kCwtScaleStep) * omega);
    return g * kCwtScaleStep * std::log(2.0) / c_norm;
}

/// Reconstruction from Morlet CWT coefficients over scales covering [f_lo, f_hi], evaluated in the
/// frequency domain. The record is mirrored at both ends to limit wrap-around.
inline WaveformBuffer cwt_filter(const WaveformBuffer& x, double f_lo, double f_hi) {
    if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 0.5 * x.fs())) {
        throw DomainError("cwt_filter: band must satisfy 0 < f_lo < f_hi < fs/2");
    }
    const std::size_t n = x.size();
    const std::size_t pad = std::min(n - 1, static_cast<std::size_t>(std::ceil(4.0 * x.fs() / f_lo)));
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(x[i]);
    ext.insert(ext.end(), x.samples().begin(), x.samples().end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(x[n - 1 - i]);
    const std::size_t nfft = fft::next_pow2(ext.size());
    ext.resize(nfft, 0.0);

    auto spec = fft::rfft(ext);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= cwt_gain(fft::bin_frequency(k, nfft, x.fs()), f_lo, f_hi);
    const auto y = fft::irfft(spec, nfft);
    return x.with_samples(std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                                              y.begin() + static_cast<std::ptrdiff_t>(pad + n)));
}

// ---------------------------------------------------------------- R peaks

struct RPeakOptions {
    double band_lo_hz = 5.0;
    double band_hi_hz = 30.0;
    double refractory_s = 0.25;
    double threshold_fraction = 0.4;  ///< of the local reference amplitude
    double reference_window_s = 5.0;  ///< half-width of the window for the local reference
};

/// QRS detection: zero-phase band-pass, polarity chosen by the dominant lobe, 250 ms refractory
/// non-maximum suppression, then a threshold relative to the local 80th-percentile peak height.
inline EventSeries detect_r_peaks(const WaveformBuffer& ecg, const RPeakOptions& opt = {}) {
    if (ecg.duration() < 2.0) throw InsufficientDataError("detect_r_peaks: record shorter than 2 s");
    EventSeries out{{}, EventKind::r_peak};
    const double fs = ecg.fs();
    const double f_hi = std::min(opt.band_hi_hz, 0.35 * fs);
    const auto tf = filters::butter2_highpass(opt.band_lo_hz) * filters::butter2_lowpass(f_hi);
    auto y = detail::zero_phase(tf, std::sqrt(opt.band_lo_hz * f_hi), ecg, 1.0);

    const double hi = detail::percentile(y, 0.995);
    const double lo = detail::percentile(y, 0.005);
    if (-lo > hi) {
        for (auto& v : y) v = -v;
    }
    if (!(std::max(hi, -lo) > 0.0)) return out;

    std::vector<std::size_t> cand;
    for (std::size_t i : detail::local_maxima(y)) {
        if (y[i] > 0.0) cand.push_back(i);
    }
    std::vector<double> score(cand.size());
    for (std::size_t k = 0; k < cand.size(); ++k) score[k] = y[cand[k]];
    const auto kept = detail::suppress(cand, score, static_cast<std::size_t>(std::llround(opt.refractory_s * fs)));

    const auto half = static_cast<std::size_t>(std::llround(opt.reference_window_s * fs));
    std::size_t a = 0, b = 0;
    for (std::size_t i : kept) {
        while (kept[a] + half < i) ++a;
        while (b < kept.size() && kept[b] <= i + half) ++b;
        std::vector<double> local;
        for (std::size_t k = a; k < b; ++k) local.push_back(y[kept[k]]);
        if (y[i] < opt.threshold_fraction * detail::percentile(std::move(local), 0.8)) continue;
        out.times.push_back(ecg.time_at(i) + detail::parabolic_offset(y, i) / fs);
    }
    return out;
}

// ---------------------------------------------------------------- respiration

inline constexpr double kRcDriftCutoffHz = 0.05;

/// Cumulative trapezoidal integral, least-squares line removal, then zero-phase first-order
/// high-pass at 0.05 Hz. Unit gain on the integral, so a cos input yields sin/omega.
/// A positive chain_delay_s advances the result by that many seconds (rounded to whole samples,
/// tail held at the last value) to undo the front end's known group delay.
inline WaveformBuffer integrate_rc(const WaveformBuffer& rc, double chain_delay_s = 0.0) {
    if (!(chain_delay_s >= 0.0) || chain_delay_s >= rc.duration()) {
        throw DomainError("integrate_rc: chain delay must lie in [0, duration)");
    }
    const std::size_t n = rc.size();
    const double dt = rc.dt();
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) v[i] = v[i - 1] + 0.5 * dt * (rc[i] + rc[i - 1]);
    if (n > 1) {
        const double tm = 0.5 * static_cast<double>(n - 1);
        double sxx = 0.0, sxy = 0.0, my = 0.0;
        for (double s : v) my += s;
        my /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) - tm;
            sxx += u * u;
            sxy += u * (v[i] - my);
        }
        const double slope = sxy / sxx;
        for (std::size_t i = 0; i < n; ++i) v[i] -= my + slope * (static_cast<double>(i) - tm);
    }
    const WaveformBuffer detrended = rc.with_samples(std::move(v)).relabeled("rc_integrated");
    const double tau = 1.0 / (constants::kTwoPi * kRcDriftCutoffHz);
    auto y = detail::zero_phase(filters::first_order_highpass(kRcDriftCutoffHz), kRcDriftCutoffHz, detrended, 3.0 * tau);
    const auto shift = static_cast<std::size_t>(std::llround(chain_delay_s * rc.fs()));
    if (shift > 0) {
        std::move(y.begin() + static_cast<std::ptrdiff_t>(shift), y.end(), y.begin());
        std::fill(y.end() - static_cast<std::ptrdiff_t>(shift), y.end(), y[n - 1 - shift]);
    }
    return detrended.with_samples(std::move(y));
}

struct BreathPeakOptions {
    double smoothing_hz = 1.0;
    double refractory_s = 1.0;
    double prominence_fraction = 0.25;  ///< of the 2nd-98th percentile range
    double prominence_window_s = 10.0;
};

/// Breath peaks: 1 Hz zero-phase smoothing, local maxima with a prominence threshold, then
/// 1 s refractory suppression by prominence.
inline EventSeries detect_breath_peaks(const WaveformBuffer& x, const BreathPeakOptions& opt = {}) {
    EventSeries out{{}, EventKind::breath_peak};
    const double fs = x.fs();
    std::vector<double> y = x.values();
    if (opt.smoothing_hz < 0.4 * fs) {
        y = detail::zero_phase(filters::butter2_lowpass(opt.smoothing_hz), opt.smoothing_hz, x, 2.0);
    }
    const double range = detail::percentile(y, 0.98) - detail::percentile(y, 0.02);
    if (!(range > 0.0)) return out;

    const auto cand = detail::local_maxima(y);
    const auto wlen = static_cast<std::size_t>(opt.prominence_window_s * fs);
    std::vector<std::size_t> kept_c;
    std::vector<double> prom;
    for (std::size_t i : cand) {
        double left = y[i], right = y[i];
        const std::size_t l_end = i > wlen ? i - wlen : 0;
        for (std::size_t j = i; j-- > l_end;) {
            if (y[j] > y[i]) break;
            left = std::min(left, y[j]);
        }
        const std::size_t r_end = std::min(y.size(), i + wlen + 1);
        for (std::size_t j = i + 1; j < r_end; ++j) {
            if (y[j] > y[i]) break;
            right = std::min(right, y[j]);
        }
        const double p = y[i] - std::max(left, right);
        if (p >= opt.prominence_fraction * range) {
            kept_c.push_back(i);
            prom.push_back(p);
        }
    }
    for (std::size_t i : detail::suppress(kept_c, prom, static_cast<std::size_t>(std::llround(opt.refractory_s * fs)))) {
        out.times.push_back(x.time_at(i) + detail::parabolic_offset(y, i) / fs);
    }
    return out;
}

// ---------------------------------------------------------------- timing statistics

/// Right-continuous empirical CDF.
struct EmpiricalCdf {
    std::vector<double> sorted;
    double operator()(double v) const {
        if (sorted.empty()) return 0.0;
        const auto k = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        return static_cast<double>(k) / static_cast<double>(sorted.size());
    }
};

struct GaussianFit {
    double mu = 0.0;
    double sigma = 0.0;
};

struct TimingComparison {
    double mean_diff = 0.0;
    double std_diff = 0.0;
    std::vector<double> diffs;  ///< test interval minus reference interval, s
    EmpiricalCdf cdf;
    GaussianFit gaussian_fit;
    std::size_t matched_events = 0;
};

/// Maximum-likelihood normal fit (population standard deviation).
inline GaussianFit fit_gaussian(const std::vector<double>& v) {
    if (v.empty()) throw InsufficientDataError("fit_gaussian: no samples");
    const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return {mu, std::sqrt(ss / static_cast<double>(v.size()))};
}

/// Interval-wise comparison. Each reference event is paired with its nearest test event if that lies
/// within half the median reference interval; intervals are compared only where two consecutive
/// reference events pair with two consecutive test events.
inline TimingComparison timing_stats(const EventSeries& reference, const EventSeries& test) {
    if (reference.size() < 2 || test.size() < 2) throw InsufficientDataError("timing_stats: need >= 2 events per series");
    reference.validate();
    test.validate();
    const auto& r = reference.times;
    const auto& t = test.times;
    std::vector<double> intervals;
    for (std::size_t i = 1; i < r.size(); ++i) intervals.push_back(r[i] - r[i - 1]);
    const double tol = 0.5 * detail::median(intervals);

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> match(r.size(), kNone);
    std::size_t matched = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto it = std::lower_bound(t.begin(), t.end(), r[i]);
        std::size_t best = kNone;
        double best_d = tol;
        if (it != t.end() && *it - r[i] <= best_d) {
            best = static_cast<std::size_t>(it - t.begin());
            best_d = *it - r[i];
        }
        if (it != t.begin() && r[i] - *(it - 1) <= best_d) best = static_cast<std::size_t>(it - t.begin()) - 1;
        match[i] = best;
        if (best != kNone) ++matched;
    }

    TimingComparison out;
    out.matched_events = matched;
    for (std::size_t i = 1; i < r.size(); ++i) {
        if (match[i] == kNone || match[i - 1] == kNone || match[i] != match[i - 1] + 1) continue;
        out.diffs.push_back((t[match[i]] - t[match[i - 1]]) - (r[i] - r[i - 1]));
    }
    if (out.diffs.empty()) throw InsufficientDataError("timing_stats: no matched intervals");
    out.gaussian_fit = fit_gaussian(out.diffs);
    out.mean_diff = out.gaussian_fit.mu;
    out.std_diff = out.gaussian_fit.sigma;
    out.cdf.sorted = out.diffs;
    std::sort(out.cdf.sorted.begin(), out.cdf.sorted.end());
    return out;
}

// ---------------------------------------------------------------- spirometry

/// Flow-volume quantities of one forced maneuver. Flow is expiration-positive; volume units
/// are those of the integrated flow.
struct SpirometryResult {
    double fvc = 0.0;
    double pef = 0.0;
    double fef_25_75 = 0.0;
    double t_start = 0.0;  ///< onset of forced expiration (maximal inspiration)
    double t_end = 0.0;    ///< end of forced expiration (minimal volume)
    std::vector<double> fv_volume;  ///< expired volume since t_start
    std::vector<double> fv_flow;
};

struct SpirometryOptions {
    double smoothing_hz = 2.0;
    double min_ratio = 2.0;  ///< maneuver excursion over the median tidal excursion
};

/// Lung volume change: cumulative trapezoid of -flow (inspiration positive).
inline std::vector<double> lung_volume(const WaveformBuffer& flow) {
    std::vector<double> v(flow.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] - 0.5 * flow.dt() * (flow[i] + flow[i - 1]);
    return v;
}

/// Signed shoelace area of a closed (x, y) curve; negative for clockwise traversal.
inline double signed_area(const std::vector<double>& x, const std::vector<double>& y) {
    double a = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t j = (i + 1) % x.size();
        a += x[i] * y[j] - x[j] * y[i];
    }
    return 0.5 * a;
}

/// Locates the expiratory run with the largest excursion and returns its flow-volume parameters,
/// or nothing when no run stands out from tidal breathing by min_ratio.
inline std::optional<SpirometryResult> spirometry_analyze(const WaveformBuffer& flow, const SpirometryOptions& opt = {}) {
    const double fs = flow.fs();
    const std::size_t n = flow.size();
    if (n < 4) return std::nullopt;
    std::vector<double> smooth = flow.values();
    if (opt.smoothing_hz < 0.4 * fs) {
        smooth = detail::zero_phase(filters::butter2_lowpass(opt.smoothing_hz), opt.smoothing_hz, flow, 1.0);
    }
    const auto vol = lung_volume(flow);

    struct Run {
        std::size_t a, b;
        double excursion;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < n;) {
        if (!(smooth[i] > 0.0)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && smooth[j] > 0.0) ++j;
        runs.push_back({i, j - 1, vol[i] - vol[j - 1]});
        i = j;
    }
    if (runs.empty()) return std::nullopt;
    const auto best = std::max_element(runs.begin(), runs.end(),
                                       [](const Run& x, const Run& y) { return x.excursion < y.excursion; });
    if (!(best->excursion > 0.0)) return std::nullopt;
    std::vector<double> others;
    for (auto it = runs.begin(); it != runs.end(); ++it) {
        if (it != best && it->excursion >= 0.1 * best->excursion) others.push_back(it->excursion);
    }
    if (!others.empty() && best->excursion < opt.min_ratio * detail::median(others)) return std::nullopt;

    // Refine the run edges to the volume extrema, which the smoothing blurs.
    const auto w = static_cast<std::size_t>(0.5 * fs);
    const std::size_t mid = (best->a + best->b) / 2;
    const std::size_t s_lo = best->a > w ? best->a - w : 0;
    const std::size_t e_hi = std::min(n - 1, best->b + w);
    const std::size_t i0 = static_cast<std::size_t>(
        std::max_element(vol.begin() + static_cast<std::ptrdiff_t>(s_lo), vol.begin() + static_cast<std::ptrdiff_t>(mid) + 1) - vol.begin());
    const std::size_t i1 = static_cast<std::size_t>(
        std::min_element(vol.begin() + static_cast<std::ptrdiff_t>(mid), vol.begin() + static_cast<std::ptrdiff_t>(e_hi) + 1) - vol.begin());

    SpirometryResult res;
    res.fvc = vol[i0] - vol[i1];
    if (!(res.fvc > 0.0)) return std::nullopt;
    res.t_start = flow.time_at(i0);
    res.t_end = flow.time_at(i1);
    for (std::size_t i = i0; i <= i1; ++i) res.pef = std::max(res.pef, flow[i]);

    auto crossing = [&](double frac) {
        const double target = frac * res.fvc;
        for (std::size_t i = i0 + 1; i <= i1; ++i) {
            const double e0 = vol[i0] - vol[i - 1], e1 = vol[i0] - vol[i];
            if (e1 >= target) return flow.time_at(i - 1) + (e1 > e0 ? (target - e0) / (e1 - e0) : 0.0) / fs;
        }
        return flow.time_at(i1);
    };
    const double t25 = crossing(0.25), t75 = crossing(0.75);
    res.fef_25_75 = t75 > t25 ? 0.5 * res.fvc / (t75 - t25) : res.pef;

    // Loop: forced expiration, then the following inspiration up to the next volume maximum.
    std::size_t i2 = i1;
    while (i2 + 1 < n && vol[i2 + 1] >= vol[i2]) ++i2;
    for (std::size_t i = i0; i <= i2; ++i) {
        res.fv_volume.push_back(vol[i0] - vol[i]);
        res.fv_flow.push_back(flow[i]);
    }
    return res;
}

// ---------------------------------------------------------------- EEG

struct EegOptions {
    double fit_lo_hz = 2.0;
    double fit_hi_hz = 40.0;
    std::vector<double> band_peaks_hz{10.0, 30.0};
    double peak_exclusion_hz = 1.0;
    double segment_s = 4.0;
    double overlap = 0.5;
};

struct BandPowers {
    double theta = 0.0;  ///< 4-8 Hz
    double alpha = 0.0;  ///< 8-14 Hz
    double beta = 0.0;   ///< 14-30 Hz
};

struct EegAnalysis {
    double gamma_slope = 0.0;  ///< PSD ~ 1/f^gamma
    double log_intercept = 0.0;
    BandPowers band_powers;
    spectral::Psd welch_psd;
};

inline EegAnalysis eeg_analyze(const WaveformBuffer& eeg, const EegOptions& opt = {}) {
    if (eeg.duration() < 30.0) throw InsufficientDataError("eeg_analyze: record shorter than 30 s");
    EegAnalysis out;
    out.welch_psd = spectral::welch(eeg, opt.segment_s, opt.overlap);
    const auto& psd = out.welch_psd;

    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        const double f = psd.freqs[k];
        if (f < opt.fit_lo_hz || f > opt.fit_hi_hz) continue;
        const bool near_peak = std::any_of(opt.band_peaks_hz.begin(), opt.band_peaks_hz.end(),
                                           [&](double fp) { return std::abs(f - fp) <= opt.peak_exclusion_hz; });
        if (near_peak) continue;
        if (!(psd.power[k] > 0.0)) throw NumericalError("eeg_analyze: non-positive PSD bin in fit range");
        lx.push_back(std::log10(f));
        ly.push_back(std::log10(psd.power[k]));
    }
    if (lx.size() < 2) throw InsufficientDataError("eeg_analyze: too few bins in fit range");
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    const double slope = sxy / sxx;
    out.gamma_slope = -slope;
    out.log_intercept = my - slope * mx;
    out.band_powers = {spectral::band_power(psd, 4.0, 8.0), spectral::band_power(psd, 8.0, 14.0),
                       spectral::band_power(psd, 14.0, 30.0)};
    return out;
}

}  // namespace eps::analysis
