#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "eps/analysis.hpp"
#include "eps/spectral.hpp"
#include "eps/synthesis.hpp"

using namespace eps::analysis;
using eps::WaveformBuffer;
using Catch::Approx;

namespace {
constexpr double kTwoPi = 6.283185307179586;

WaveformBuffer tone(double f, double amp, double fs, double dur, double phase = 0.0) {
    std::vector<double> x(static_cast<std::size_t>(fs * dur));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(kTwoPi * f * i / fs + phase);
    return WaveformBuffer(std::move(x), fs);
}

// Least-squares amplitude of a sinusoid at f over the middle half of the record.
double projected_amplitude(const WaveformBuffer& w, double f) {
    double c = 0.0, s = 0.0;
    const std::size_t a = w.size() / 4, b = 3 * w.size() / 4;
    for (std::size_t i = a; i < b; ++i) {
        const double ph = kTwoPi * f * i / w.fs();
        c += w[i] * std::cos(ph);
        s += w[i] * std::sin(ph);
    }
    return 2.0 * std::hypot(c, s) / static_cast<double>(b - a);
}

double nearest_distance(const std::vector<double>& v, double t) {
    double best = 1e300;
    for (double x : v) best = std::min(best, std::abs(x - t));
    return best;
}
}  // namespace

TEST_CASE("CWT band filter passes in-band tones and rejects out-of-band ones") {
    const double fs = 500.0;
    const auto in = tone(10.0, 1.0, fs, 8.0);
    CHECK(projected_amplitude(cwt_filter(in, 5.0, 20.0), 10.0) == Approx(1.0).epsilon(0.10));

    const auto hum = tone(60.0, 1.0, fs, 8.0);
    const double a60 = projected_amplitude(cwt_filter(hum, 5.0, 20.0), 60.0);
    CHECK(20.0 * std::log10(a60) <= -20.0);

    const auto z = cwt_filter(WaveformBuffer::zeros(1000, fs), 5.0, 20.0);
    for (double v : z.samples()) CHECK(v == 0.0);
}

TEST_CASE("CWT band filter is linear") {
    const double fs = 250.0;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<double> xa(2000), xb(2000), xs(2000);
    for (std::size_t i = 0; i < xa.size(); ++i) {
        xa[i] = nd(rng);
        xb[i] = nd(rng);
        xs[i] = 2.5 * xa[i] - 0.7 * xb[i];
    }
    const auto fa = cwt_filter(WaveformBuffer(xa, fs), 3.0, 40.0);
    const auto fb = cwt_filter(WaveformBuffer(xb, fs), 3.0, 40.0);
    const auto fsum = cwt_filter(WaveformBuffer(xs, fs), 3.0, 40.0);
    double scale = 0.0;
    for (double v : fsum.samples()) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(fsum[i] - (2.5 * fa[i] - 0.7 * fb[i])) <= 1e-9 * scale);
}

TEST_CASE("CWT band filter rejects bands outside Nyquist") {
    const auto w = tone(10.0, 1.0, 100.0, 2.0);
    CHECK_THROWS_AS(cwt_filter(w, 5.0, 60.0), eps::DomainError);
    CHECK_THROWS_AS(cwt_filter(w, 0.0, 20.0), eps::DomainError);
    CHECK_THROWS_AS(cwt_filter(w, 20.0, 10.0), eps::DomainError);
}

TEST_CASE("fft_amplitude calibration") {
    CHECK(eps::spectral::fft_amplitude(tone(7.3, 1.0, 500.0, 10.0), 7.3) == Approx(1.0).epsilon(0.02));
    CHECK(eps::spectral::fft_amplitude(tone(0.21, 3.0, 100.0, 60.0), 0.2) == Approx(3.0).epsilon(0.02));
    CHECK_THROWS_AS(eps::spectral::fft_amplitude(tone(1.0, 1.0, 100.0, 5.0), 1.0), eps::InsufficientDataError);
}

TEST_CASE("Welch PSD integrates to the variance of white noise") {
    const double fs = 200.0, sigma = 2.0;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<double> x(200000);
    for (auto& v : x) v = nd(rng);
    const auto psd = eps::spectral::welch(WaveformBuffer(x, fs));
    CHECK(psd.df() == Approx(0.25));
    double total = 0.0;
    for (double p : psd.power) total += p * psd.df();
    CHECK(total == Approx(sigma * sigma).epsilon(0.02));
    // Flat level 2 sigma^2 / fs away from the end bins.
    CHECK(psd.power[200] == Approx(2.0 * sigma * sigma / fs).epsilon(0.2));
}

TEST_CASE("R-peak detection on synthetic ECG at SNR 20") {
    eps::synthesis::SubjectProfile p;
    p.hr_bpm = 72.0;
    const double fs = 1000.0;
    const auto s = eps::synthesis::synth_ecg(p, fs, 60.0, 11);
    const double sigma = p.ecg_amplitude_v / 20.0;
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd(0.0, sigma);
    auto x = s.ecg.values();
    for (auto& v : x) v += nd(rng);
    const auto ev = detect_r_peaks(WaveformBuffer(x, fs));
    REQUIRE(ev.size() == s.r_times.size());
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev.times[i] - s.r_times[i]) <= 2e-3);
    CHECK_NOTHROW(ev.validate());
}

TEST_CASE("R-peak detection edge cases") {
    CHECK(detect_r_peaks(WaveformBuffer::zeros(5000, 1000.0)).empty());
    CHECK_THROWS_AS(detect_r_peaks(WaveformBuffer::zeros(1000, 1000.0)), eps::InsufficientDataError);
}

TEST_CASE("R-peak detection is shift-equivariant") {
    eps::synthesis::SubjectProfile p;
    const double fs = 500.0;
    const auto s = eps::synthesis::synth_ecg(p, fs, 20.0, 4);
    const auto base = detect_r_peaks(s.ecg);
    for (std::size_t k : {1u, 7u, 250u}) {
        std::vector<double> x(k, 0.0);
        x.insert(x.end(), s.ecg.samples().begin(), s.ecg.samples().end());
        const auto shifted = detect_r_peaks(WaveformBuffer(x, fs));
        REQUIRE(shifted.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(shifted.times[i] - base.times[i] == Approx(k / fs).margin(1e-9));
        }
    }
}

TEST_CASE("RC integration is in phase with displacement") {
    const double fs = 1000.0, f = 0.2, w = kTwoPi * f;
    // Velocity cos(wt) -> displacement sin(wt)/w.
    std::vector<double> v(60000), d(60000);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = std::cos(w * i / fs);
        d[i] = std::sin(w * i / fs);
    }
    const auto out = integrate_rc(WaveformBuffer(v, fs));
    // Forward-backward first-order high-pass at 0.05 Hz: |H|^2 = r^2 / (1 + r^2), r = f / 0.05.
    const double r = f / 0.05;
    CHECK(projected_amplitude(out, f) == Approx(r * r / (1.0 + r * r) / w).epsilon(0.02));

    // Cross-correlation over the interior, lags within +-100 samples.
    long best_lag = 0;
    double best = -1e300;
    for (long lag = -100; lag <= 100; ++lag) {
        double c = 0.0;
        for (std::size_t i = 10000; i < 50000; ++i) c += out[i] * d[static_cast<std::size_t>(static_cast<long>(i) + lag)];
        if (c > best) {
            best = c;
            best_lag = lag;
        }
    }
    CHECK(std::abs(best_lag) <= 1);
}

TEST_CASE("RC integration removes a DC offset") {
    const double fs = 500.0, offset = 0.3, dur = 40.0;
    const auto out = integrate_rc(WaveformBuffer(std::vector<double>(static_cast<std::size_t>(fs * dur), offset), fs));
    const double mean = std::accumulate(out.samples().begin(), out.samples().end(), 0.0) / out.size();
    CHECK(std::abs(mean) < 1e-6 * offset * dur);
}

TEST_CASE("integrated RC peaks align with displacement peaks") {
    eps::synthesis::SubjectProfile p;
    p.rr_per_min = 14.0;
    const double fs = 1000.0;
    const auto r = eps::synthesis::synth_respiration(p, fs, 60.0);
    std::vector<double> vel(r.displacement.size());
    for (std::size_t i = 0; i < vel.size(); ++i) vel[i] = r.profile.velocity(i / fs);
    const auto peaks = detect_breath_peaks(integrate_rc(WaveformBuffer(vel, fs)));
    std::size_t interior = 0;
    for (double tp : r.peak_times) {
        if (tp < 5.0 || tp > 55.0) continue;
        ++interior;
        CHECK(nearest_distance(peaks.times, tp) <= 0.1);
    }
    CHECK(interior >= 10);
}

TEST_CASE("breath peaks of a 12/min sinusoid") {
    const double fs = 100.0;
    const auto w = tone(0.2, 1.0, fs, 60.0);
    const auto ev = detect_breath_peaks(w);
    REQUIRE(ev.size() >= 11);
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(std::abs(ev.times[i] - ev.times[i - 1] - 5.0) <= 1.0 / fs);
    CHECK(detect_breath_peaks(WaveformBuffer::zeros(6000, fs)).empty());
}

TEST_CASE("timing_stats basic properties") {
    EventSeries ref{{}, EventKind::r_peak};
    for (int i = 0; i < 50; ++i) ref.times.push_back(0.3 + 0.8 * i + 0.01 * std::sin(i));
    const auto same = timing_stats(ref, ref);
    CHECK(same.mean_diff == 0.0);
    CHECK(same.std_diff == 0.0);
    CHECK(same.diffs.size() == 49);
    CHECK(same.cdf(-1e-12) == 0.0);
    CHECK(same.cdf(0.0) == 1.0);

    EventSeries shifted = ref;
    for (auto& t : shifted.times) t += 0.005;
    const auto sh = timing_stats(ref, shifted);
    for (double d : sh.diffs) CHECK(std::abs(d) < 1e-12);

    CHECK_THROWS_AS(timing_stats(EventSeries{{1.0}}, ref), eps::InsufficientDataError);
}

TEST_CASE("timing_stats recovers the jitter of ~1900 intervals") {
    const double sigma = 3.8e-3;
    std::mt19937_64 rng(99);
    // Independent event jitter of sigma/sqrt(2) gives interval differences of std sigma.
    std::normal_distribution<double> nd(0.0, sigma / std::sqrt(2.0));
    EventSeries ref, test;
    for (int i = 0; i < 1901; ++i) {
        const double t = 0.5 + 0.83 * i;
        ref.times.push_back(t);
        test.times.push_back(t + nd(rng));
    }
    const auto tc = timing_stats(ref, test);
    REQUIRE(tc.diffs.size() == 1900);
    CHECK(tc.gaussian_fit.sigma == Approx(sigma).epsilon(0.15));
    CHECK(std::abs(tc.mean_diff) < 3.0 * sigma / std::sqrt(1900.0));
    double prev = 0.0;
    for (double x = -0.02; x <= 0.02; x += 1e-4) {
        CHECK(tc.cdf(x) >= prev);
        prev = tc.cdf(x);
    }
    CHECK(tc.cdf(-1.0) == 0.0);
    CHECK(tc.cdf(1.0) == 1.0);
}

TEST_CASE("spirometry against the closed-form forced maneuver") {
    eps::synthesis::SubjectProfile p;
    p.rc_pattern = eps::synthesis::RcPattern::forced_fvc;
    const double fs = 1000.0;
    const auto r = eps::synthesis::synth_respiration(p, fs, 40.0);
    REQUIRE(r.maneuver);
    std::vector<double> flow(r.displacement.size());
    for (std::size_t i = 0; i < flow.size(); ++i) flow[i] = -r.profile.velocity(i / fs);
    const auto res = spirometry_analyze(WaveformBuffer(flow, fs));
    REQUIRE(res);

    // Oracle: fine-grid re-integration of the closed-form flow over the forced expiration.
    const double t_exp = r.peak_times[std::distance(r.peak_times.begin(),
        std::find_if(r.peak_times.begin(), r.peak_times.end(), [&](double t) { return t > r.maneuver->first; }))];
    const double t_end = r.maneuver->second - eps::synthesis::FvcManeuverShape{}.recovery_s;
    const double h = 1e-6;
    std::vector<double> e{0.0}, tt{t_exp};
    double pef = 0.0;
    for (double t = t_exp; t < t_end - 0.5 * h; t += h) {
        const double q0 = -r.profile.velocity(t + 1e-12), q1 = -r.profile.velocity(t + h);
        pef = std::max(pef, q0);
        e.push_back(e.back() + 0.5 * h * (q0 + q1));
        tt.push_back(t + h);
    }
    const double fvc = e.back();
    auto cross = [&](double frac) {
        const auto it = std::lower_bound(e.begin(), e.end(), frac * fvc);
        return tt[static_cast<std::size_t>(it - e.begin())];
    };
    const double fef = 0.5 * fvc / (cross(0.75) - cross(0.25));

    CHECK(res->fvc == Approx(fvc).epsilon(0.02));
    CHECK(res->pef == Approx(pef).epsilon(0.02));
    CHECK(res->fef_25_75 == Approx(fef).epsilon(0.02));
    CHECK(res->t_start == Approx(t_exp).margin(2e-3));

    // Clockwise: positive flow while volume grows, negative on the return.
    CHECK(signed_area(res->fv_volume, res->fv_flow) < 0.0);
    const auto peak_it = std::max_element(res->fv_volume.begin(), res->fv_volume.end());
    const auto k = static_cast<std::size_t>(peak_it - res->fv_volume.begin());
    CHECK(res->fv_flow[k / 2] > 0.0);
    CHECK(res->fv_flow[k + (res->fv_flow.size() - k) / 2] < 0.0);

    // Volume returns to its pre-maneuver baseline.
    const auto vol = lung_volume(WaveformBuffer(flow, fs));
    const auto i0 = static_cast<std::size_t>(r.maneuver->first * fs);
    const auto i1 = static_cast<std::size_t>(r.maneuver->second * fs);
    CHECK(std::abs(vol[i1] - vol[i0]) <= 0.05 * res->fvc);
}

TEST_CASE("spirometry finds no maneuver in tidal breathing") {
    eps::synthesis::SubjectProfile p;
    const double fs = 500.0;
    const auto r = eps::synthesis::synth_respiration(p, fs, 40.0);
    std::vector<double> flow(r.displacement.size());
    for (std::size_t i = 0; i < flow.size(); ++i) flow[i] = -r.profile.velocity(i / fs);
    CHECK_FALSE(spirometry_analyze(WaveformBuffer(flow, fs)).has_value());
}

TEST_CASE("EEG slope and band powers") {
    eps::synthesis::SubjectProfile p;
    const double fs = 250.0;
    const auto open = eps::synthesis::synth_eeg(p, fs, 120.0, 8);
    const auto a = eeg_analyze(open);
    CHECK(a.gamma_slope == Approx(2.36).margin(0.1));
    CHECK(a.band_powers.theta >= 0.0);
    CHECK(a.band_powers.alpha >= 0.0);
    CHECK(a.band_powers.beta >= 0.0);
    const double total = eps::spectral::band_power(a.welch_psd, 4.0, 30.0);
    CHECK(a.band_powers.theta + a.band_powers.alpha + a.band_powers.beta <= total * (1.0 + 1e-12));

    p.eyes_closed = true;
    const auto closed = eeg_analyze(eps::synthesis::synth_eeg(p, fs, 120.0, 8));
    CHECK(closed.band_powers.alpha > a.band_powers.alpha);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> white(static_cast<std::size_t>(fs * 120.0));
    for (auto& v : white) v = nd(rng);
    CHECK(eeg_analyze(WaveformBuffer(white, fs)).gamma_slope == Approx(0.0).margin(0.1));

    CHECK_THROWS_AS(eeg_analyze(WaveformBuffer::zeros(static_cast<std::size_t>(fs * 10), fs)), eps::InsufficientDataError);
    CHECK_THROWS_AS(eeg_analyze(WaveformBuffer::zeros(static_cast<std::size_t>(fs * 40), fs)), eps::NumericalError);
}

TEST_CASE("integrate_rc chain-delay compensation advances the output") {
    const double fs = 1000.0;
    std::vector<double> x(30000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(2.0 * std::acos(-1.0) * 0.2 * i / fs);
    const WaveformBuffer rc(x, fs);
    const auto plain = integrate_rc(rc);
    const auto shifted = integrate_rc(rc, 0.06);
    REQUIRE(shifted.size() == plain.size());
    for (std::size_t i = 0; i + 60 < plain.size(); i += 997) CHECK(shifted[i] == plain[i + 60]);
    CHECK(shifted[plain.size() - 1] == plain[plain.size() - 1]);
    CHECK(integrate_rc(rc, 0.0) == plain);
    CHECK_THROWS_AS(integrate_rc(rc, -0.01), eps::DomainError);
    CHECK_THROWS_AS(integrate_rc(rc, 30.0), eps::DomainError);
}
