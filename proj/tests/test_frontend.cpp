#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "eps/frontend.hpp"
#include "eps/synthesis.hpp"

using namespace eps::frontend;
using Catch::Approx;

namespace {
constexpr double two_pi = 6.283185307179586;

double db(std::complex<double> h) { return 20.0 * std::log10(std::abs(h)); }

eps::coupling::NortonSource current_source(std::vector<double> i, double fs, std::vector<double> pli = {}) {
    const std::size_t n = i.size();
    if (pli.empty()) pli.assign(n, 0.0);
    std::vector<double> total = i;
    for (std::size_t k = 0; k < n; ++k) total[k] += pli[k];
    auto z = eps::WaveformBuffer::zeros(n, fs);
    return {eps::WaveformBuffer(total, fs), eps::WaveformBuffer(std::vector<double>(n, 1e-12), fs), 10.0, 0.3,
            eps::WaveformBuffer(i, fs), z, eps::WaveformBuffer(pli, fs), z};
}

std::vector<double> tone(double f, double amp, double fs, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = amp * std::sin(two_pi * f * k / fs);
    return x;
}

// Amplitude of the f component over the second half (start-up transients excluded).
double tone_amp(const eps::WaveformBuffer& w, double f) {
    const std::size_t n0 = w.size() / 2;
    double c = 0.0, s = 0.0;
    for (std::size_t k = n0; k < w.size(); ++k) {
        const double ph = two_pi * f * k / w.fs();
        c += w[k] * std::cos(ph);
        s += w[k] * std::sin(ph);
    }
    const double m = static_cast<double>(w.size() - n0);
    return 2.0 * std::hypot(c, s) / m;
}

FrontEndConfig quiet() {
    FrontEndConfig c;
    c.inject_noise = false;
    return c;
}
}  // namespace

TEST_CASE("open-loop TIA asymptotes") {
    FrontEndConfig cfg;
    CHECK(cfg.corner_hz() == Approx(10.61).epsilon(0.001));
    auto h0 = tia_open_loop_tf(cfg, 1e-12);
    CHECK(std::abs(h0.at_hz(1e5)) == Approx(10.0).epsilon(1e-6));
    CHECK(std::abs(h0.at_hz(1e-6)) < 1e-5);
    CHECK(std::abs(h0.at_hz(cfg.corner_hz())) == Approx(10.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("closed-loop notch depth under weak coupling") {
    FrontEndConfig cfg;
    const double c_c = 0.001e-12;
    auto h = closed_loop_tf(cfg, c_c);
    auto h0 = tia_open_loop_tf(cfg, c_c);
    const double ratio_db = db(h.at_hz(60.0)) - db(h0.at_hz(60.0));
    CHECK(ratio_db == Approx(20.0 * std::log10(1.0 / 3.0)).margin(0.5));
    // Away from the resonance the loop reduces to -H0/(1+H0).
    for (double f : {1.0, 3.0, 5.0, 700.0}) {
        const auto ref = -h0.at_hz(f) / (1.0 + h0.at_hz(f));
        CHECK(std::abs(h.at_hz(f) - ref) / std::abs(ref) < 0.02);
    }
}

TEST_CASE("full and weak-coupling forms agree for a weakly coupled sensor") {
    FrontEndConfig cfg;
    const double c_c = 0.001e-12;
    auto full = closed_loop_tf(cfg, c_c);
    auto weak = weak_coupling_tf(cfg, c_c);
    for (double f = 1.0; f <= 200.0; f += 0.05) {
        CHECK(std::abs(std::abs(full.at_hz(f)) / std::abs(weak.at_hz(f)) - 1.0) < 0.01);
    }
}

TEST_CASE("non-inverting feedback band-pass is rejected") {
    FrontEndConfig cfg;
    cfg.acl_bpf.inverting = false;
    CHECK_THROWS_AS(closed_loop_tf(cfg, 0.01e-12), eps::ConfigError);
    CHECK_THROWS_AS(tia_transimpedance_tf(cfg, 0.01e-12, true), eps::ConfigError);
    FrontEndConfig bad;
    bad.acl_bpf.q = 0.4;
    CHECK_THROWS_AS(bad.validate(), eps::ConfigError);
}

TEST_CASE("transimpedance equals closed-loop gain over the source admittance") {
    FrontEndConfig cfg;
    const double c_c = 0.5e-12;
    auto z = tia_transimpedance_tf(cfg, c_c, true);
    auto h = closed_loop_tf(cfg, c_c);
    for (double f : {0.3, 7.0, 59.5, 60.0, 61.0, 150.0}) {
        const std::complex<double> s(0.0, two_pi * f);
        CHECK(std::abs(z.at_hz(f) - h.at_hz(f) / (s * c_c)) < 1e-9 * std::abs(z.at_hz(f)));
    }
}

TEST_CASE("switched-integrator transimpedance") {
    SwitchedIntegratorConfig si;
    CHECK(switched_integrator_tz(si, 0.0).real() == Approx((1.0 / 60.0) / 10e-12).epsilon(1e-12));
    CHECK(std::abs(switched_integrator_tz(si, 1e-9)) == Approx(si.t_s / si.c_f_si).epsilon(1e-3));
    const double ref = std::abs(switched_integrator_tz(si, 0.5 / si.t_s));
    for (int n = 1; n <= 5; ++n) CHECK(std::abs(switched_integrator_tz(si, n / si.t_s)) < 1e-12 * ref);
    SwitchedIntegratorConfig exact{10e-12, 0.0625, 100e-15};
    for (int n = 1; n <= 5; ++n) CHECK(std::abs(switched_integrator_tz(exact, n / exact.t_s)) == 0.0);
    const double f = 0.5 / si.t_s;
    CHECK(ref == Approx(2.0 / (two_pi * f * si.c_f_si)).epsilon(1e-12));
    CHECK_THROWS_AS(switched_integrator_tz(si, -1.0), eps::DomainError);
}

TEST_CASE("twin-T notch") {
    auto t = twin_t_notch_tf(60.0);
    CHECK(db(t.at_hz(60.0)) <= -25.0);
    CHECK(std::abs(db(t.at_hz(0.0))) < 0.1);
    CHECK(std::abs(db(t.at_hz(1e7))) < 0.1);
    double lo = 0.0, hi = 0.0;
    for (double f = 58.0; f < 62.0; f += 1e-4) {
        if (db(t.at_hz(f)) <= -3.0103) {
            if (lo == 0.0) lo = f;
            hi = f;
        }
    }
    CHECK(hi - lo == Approx(0.8).epsilon(0.01));
    auto cascade = twin_t_notch_tf(60.0) * twin_t_notch_tf(120.0);
    CHECK(db(cascade.at_hz(60.0)) <= -25.0);
    CHECK(db(cascade.at_hz(120.0)) <= -25.0);
    CHECK_THROWS_AS(twin_t_notch_tf(0.0), eps::DomainError);
}

TEST_CASE("discretized TIA tracks the analog transimpedance") {
    const double fs = 1000.0;
    for (bool acl : {false, true}) {
        FrontEndConfig cfg;
        cfg.acl_enabled = acl;
        auto design = design_chain(cfg, fs);
        auto analog = tia_transimpedance_tf(cfg, cfg.c_c_nominal, acl);
        const double peak = db(analog.at_hz(0.01));
        for (double f = 0.1; f < fs / 10.0; f *= 1.02) {
            if (acl && std::abs(f - 60.0) < 3.0) continue;
            const double a = db(analog.at_hz(f));
            const double d = db(design.tia.response(f, fs));
            INFO("acl " << acl << " f " << f);
            if (a >= peak - 10.0) {
                CHECK(std::abs(d - a) < 0.2);
            } else {
                CHECK(d < a + 0.2);
            }
        }
        CHECK(std::abs(db(design.tia.response(60.0, fs)) - db(analog.at_hz(60.0))) < 0.2);
    }
}

TEST_CASE("zero source gives zero output") {
    const double fs = 1000.0;
    auto src = current_source(std::vector<double>(5000, 0.0), fs);
    auto out = simulate_frontend(src, quiet(), {}, 1);
    for (double v : out.ecg_channel.samples()) CHECK(v == 0.0);
    for (double v : out.rc_channel.samples()) CHECK(v == 0.0);
}

TEST_CASE("cancellation loop suppresses a line tone by at least 20 dB") {
    const double fs = 1000.0;
    const std::size_t n = 20000;
    auto src = current_source(std::vector<double>(n, 0.0), fs, tone(60.0, 1e-13, fs, n));
    auto on = quiet();
    on.notch.enabled = false;
    auto off = on;
    off.acl_enabled = false;
    const double a_on = tone_amp(simulate_frontend(src, on, {}, 1).tia_output, 60.0);
    const double a_off = tone_amp(simulate_frontend(src, off, {}, 1).tia_output, 60.0);
    CHECK(20.0 * std::log10(a_off / a_on) >= 20.0);
}

TEST_CASE("RC channel passes breathing and rejects the line") {
    const double fs = 1000.0;
    const std::size_t n = 80000;
    auto cfg = quiet();
    const double i_amp = 1e-14;
    auto breath = simulate_frontend(current_source(tone(0.25, i_amp, fs, n), fs), cfg, {}, 1);
    const double nominal = cfg.r_f * i_amp * std::pow(10.0, cfg.rc_chain.gain_db / 20.0);
    CHECK(20.0 * std::log10(tone_amp(breath.rc_channel, 0.25) / nominal) > -1.0);

    auto line = simulate_frontend(current_source(std::vector<double>(n, 0.0), fs, tone(60.0, i_amp, fs, n)), cfg, {}, 1);
    CHECK(20.0 * std::log10(tone_amp(line.rc_channel, 60.0) / nominal) <= -60.0);
}

TEST_CASE("noise-free chain is linear") {
    const double fs = 1000.0;
    eps::synthesis::SubjectProfile p;
    auto ecg = eps::synthesis::synth_ecg(p, fs, 10.0, 2);
    std::vector<double> i(ecg.ecg.size());
    for (std::size_t k = 1; k < i.size(); ++k) i[k] = 1e-12 * (ecg.ecg[k] - ecg.ecg[k - 1]) * fs;
    std::vector<double> i3 = i;
    for (auto& v : i3) v *= 3.0;
    auto a = simulate_frontend(current_source(i, fs), quiet(), {}, 1);
    auto b = simulate_frontend(current_source(i3, fs), quiet(), {}, 1);
    REQUIRE_FALSE(b.saturation.any());
    double peak = 0.0;
    for (double v : b.ecg_channel.samples()) peak = std::max(peak, std::abs(v));
    for (std::size_t k = 0; k < i.size(); ++k) {
        CHECK(std::abs(b.ecg_channel[k] - 3.0 * a.ecg_channel[k]) <= 1e-9 * peak);
        CHECK(std::abs(b.rc_channel[k] - 3.0 * a.rc_channel[k]) <= 1e-9 * std::max(peak, 1e-30));
    }
}

TEST_CASE("rail clipping is flagged") {
    const double fs = 1000.0;
    const std::size_t n = 5000;
    auto out = simulate_frontend(current_source(tone(5.0, 1e-9, fs, n), fs), quiet(), {}, 1);
    CHECK(out.saturation.tia > 0);
    CHECK(out.saturation.any());
    for (double v : out.ecg_channel.samples()) CHECK(std::abs(v) <= 4.0);
    auto small = simulate_frontend(current_source(tone(5.0, 1e-15, fs, n), fs), quiet(), {}, 1);
    CHECK_FALSE(small.saturation.any());
}

TEST_CASE("noise injection is seeded and reference output stays clean") {
    const double fs = 1000.0;
    auto src = current_source(tone(10.0, 1e-14, fs, 4000), fs);
    FrontEndConfig cfg;
    auto a = simulate_frontend(src, cfg, {}, 5);
    auto b = simulate_frontend(src, cfg, {}, 5);
    auto c = simulate_frontend(src, cfg, {}, 6);
    CHECK(a.ecg_channel == b.ecg_channel);
    CHECK_FALSE(a.ecg_channel == c.ecg_channel);
    CHECK(a.ecg_reference == c.ecg_reference);
    CHECK(a.ecg_reference.values() == simulate_frontend(src, quiet(), {}, 9).ecg_channel.values());
}

TEST_CASE("sample-rate precondition") {
    auto src = current_source(std::vector<double>(1000, 0.0), 500.0);
    CHECK_THROWS_AS(simulate_frontend(src, quiet(), {}, 1), eps::ContractError);
}

TEST_CASE("motion cancellation") {
    const double fs = 1000.0;
    MclConfig mcl;
    mcl.enabled = true;
    auto zero = eps::WaveformBuffer::zeros(4000, fs);
    auto z = mcl_apply(zero, mcl);
    for (double v : z.cancelled.samples()) CHECK(std::abs(v) <= 1e-9);

    MclConfig bad = mcl;
    bad.attenuation = 1.0;
    CHECK_THROWS_AS(mcl_apply(zero, bad), eps::ConfigError);

    // Artifact-free ECG-band content is barely touched.
    eps::synthesis::SubjectProfile p;
    auto ecg = eps::synthesis::synth_ecg(p, fs, 20.0, 4).ecg;
    auto y = mcl_apply(ecg, mcl).cancelled;
    const double before = detail::band_power(ecg.samples(), fs, 5.0, 40.0);
    const double after = detail::band_power(y.samples(), fs, 5.0, 40.0);
    CHECK(std::abs(10.0 * std::log10(after / before)) < 1.0);

    // A slow transient is cut by roughly 10 dB.
    auto art = eps::synthesis::synth_motion_artifact({5.0, 12.0}, 1.0, fs, 20.0, 3);
    const double sup = mcl_apply(art, mcl).suppression_db;
    CHECK(sup > 7.5);
    CHECK(sup < 11.5);
}

TEST_CASE("RC-path group delay matches the delay of a slow tone through the chain") {
    // Oracle: phase of a 0.2 Hz tone measured at the RC output of the noise-free chain.
    const double fs = 1000.0, f = 0.2;
    const std::size_t n = 100000;
    auto src = current_source(tone(f, 1e-12, fs, n), fs);
    const auto out = simulate_frontend(src, quiet(), {}, 1).rc_channel;
    double c = 0.0, s = 0.0, ci = 0.0, si = 0.0;
    for (std::size_t k = n / 2; k < n; ++k) {
        const double ph = two_pi * f * k / fs;
        c += out[k] * std::cos(ph);
        s += out[k] * std::sin(ph);
        ci += std::sin(ph) * std::cos(ph);
        si += std::sin(ph) * std::sin(ph);
    }
    // Output = -|H| sin(w t - w tau) for the inverting TIA; recover tau from the quadrature pair.
    const double phase = std::atan2(c, s) - std::atan2(ci, si);
    const double measured = std::remainder(phase + 3.141592653589793, two_pi) / (-two_pi * f);
    const double tau = rc_group_delay(quiet(), fs, f);
    CHECK(tau > 0.0);
    CHECK(tau == Approx(measured).margin(1.5e-3));
    CHECK_THROWS_AS(rc_group_delay(quiet(), fs, 0.0), eps::DomainError);
    CHECK_THROWS_AS(rc_group_delay(quiet(), fs, 600.0), eps::DomainError);
}
