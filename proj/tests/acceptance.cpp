// Acceptance run: one PASS/FAIL line per criterion with the measured figures and runtime.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eps/app.hpp"
#include "eps/telemetry/codec.hpp"

namespace fs = std::filesystem;
using namespace eps;

namespace {

constexpr double kTwoPi = 6.283185307179586;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string scenario_path(const std::string& name) { return std::string(EPS_SCENARIO_DIR) + "/" + name; }

double db(std::complex<double> h) { return 20.0 * std::log10(std::abs(h)); }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    }
    return sxy / sxx;
}

// Single-bin amplitude of the f component over the second half (start-up transient excluded).
double tone_amp(const WaveformBuffer& w, double f) {
    const std::size_t n0 = w.size() / 2;
    double c = 0.0, s = 0.0;
    for (std::size_t k = n0; k < w.size(); ++k) {
        const double ph = kTwoPi * f * static_cast<double>(k) / w.fs();
        c += w[k] * std::cos(ph);
        s += w[k] * std::sin(ph);
    }
    return 2.0 * std::hypot(c, s) / static_cast<double>(w.size() - n0);
}

std::vector<scenario::Recording> run_all(const std::string& file) {
    std::vector<scenario::Recording> out;
    for (const auto& c : config::expand(config::load_scenario(scenario_path(file)))) out.push_back(scenario::run_scenario(c));
    return out;
}

// ---------------------------------------------------------------- criteria

Outcome acl_notch() {
    frontend::FrontEndConfig cfg;
    const double c_c = 0.001e-12;
    const auto h = frontend::closed_loop_tf(cfg, c_c);
    const auto h0 = frontend::tia_open_loop_tf(cfg, c_c);
    const double f0 = cfg.acl_bpf.f_center;
    const double depth = db(h.at_hz(f0)) - db(h0.at_hz(f0));
    const double target = 20.0 * std::log10(1.0 / (1.0 + cfg.acl_bpf.peak_gain_a));
    // Out-of-band: compare against the loop without the band-pass, -H0/(1+H0).
    double worst = 0.0, worst_f = 0.0;
    for (double f = 0.5; f <= 490.0; f += 0.01) {
        if (std::abs(f - f0) <= 3.0) continue;
        const auto ref = -h0.at_hz(f) / (1.0 + h0.at_hz(f));
        const double dev = std::abs(db(h.at_hz(f)) - db(ref));
        if (dev > worst) {
            worst = dev;
            worst_f = f;
        }
    }
    const bool a = std::abs(depth - target) <= 0.5;
    const bool b = worst < 0.5;
    return {a && b, fmt("depth %.2f dB (target %.2f +- 0.5) %s; out-of-band max change %.2f dB at %.2f Hz (limit 0.5) %s",
                        depth, target, a ? "ok" : "miss", worst, worst_f, b ? "ok" : "miss")};
}

Outcome si_nulls() {
    frontend::SwitchedIntegratorConfig si;
    const double ref = std::abs(frontend::switched_integrator_tz(si, 0.5 / si.t_s));
    double worst = 0.0;
    for (int n = 1; n <= 5; ++n) worst = std::max(worst, std::abs(frontend::switched_integrator_tz(si, n / si.t_s)) / ref);
    const double dc = std::abs(frontend::switched_integrator_tz(si, 1e-9));
    const double dc_err = std::abs(dc / (si.t_s / si.c_f_si) - 1.0);
    return {worst < 1e-12 && dc_err < 1e-3, fmt("max null ratio %.2e (limit 1e-12); DC limit error %.2e (limit 1e-3)", worst, dc_err)};
}

Outcome noise_model() {
    const noise::NoiseSpec spec;
    const double c = 1e-12, fs = 1000.0;
    std::vector<double> acc;
    std::vector<double> freqs;
    for (int seed = 0; seed < 10; ++seed) {
        const auto psd = spectral::welch(noise::synth_noise(spec, c, noise::Architecture::continuous_time, fs, 60.0, seed));
        if (acc.empty()) {
            acc.assign(psd.power.size(), 0.0);
            freqs = psd.freqs;
        }
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += psd.power[k] / 10.0;
    }
    double worst = 0.0;
    for (double lo = 1.0; lo * 2.0 <= fs / 4.0; lo *= 2.0) {
        double meas = 0.0, model = 0.0;
        for (std::size_t k = 1; k < acc.size(); ++k) {
            if (freqs[k] < lo || freqs[k] >= 2.0 * lo) continue;
            meas += acc[k];
            model += noise::voltage_noise_psd(spec, c, freqs[k], noise::Architecture::continuous_time);
        }
        worst = std::max(worst, std::abs(10.0 * std::log10(meas / model)));
    }
    bool monotone = true, emg_lowest = true;
    for (int pf = 1; pf <= 8; ++pf) {
        std::map<noise::Band, double> v, prev;
        for (auto b : {noise::Band::ecg, noise::Band::eeg, noise::Band::emg}) {
            v[b] = noise::integrated_input_noise(spec, pf * 1e-12, noise::BandSpec::of(b), noise::Architecture::continuous_time);
            if (pf > 1) {
                const double before = noise::integrated_input_noise(spec, (pf - 1) * 1e-12, noise::BandSpec::of(b),
                                                                    noise::Architecture::continuous_time);
                monotone = monotone && v[b] < before;
            }
        }
        emg_lowest = emg_lowest && v[noise::Band::emg] < std::min(v[noise::Band::ecg], v[noise::Band::eeg]);
    }
    return {worst < 1.0 && monotone && emg_lowest,
            fmt("worst octave deviation %.2f dB (limit 1); monotone in C_c %s; EMG lowest %s", worst,
                monotone ? "yes" : "no", emg_lowest ? "yes" : "no")};
}

Outcome snr_thresholds() {
    const noise::NoiseSpec spec;
    const synthesis::SubjectProfile subject;
    const auto ecg = noise::min_coupling_for_snr(spec, subject.ecg_amplitude_v, 10.0, noise::BandSpec::of(noise::Band::ecg),
                                                 noise::Architecture::continuous_time);
    const auto eeg = noise::min_coupling_for_snr(spec, subject.eeg_rms_v, 2.0, noise::BandSpec::of(noise::Band::eeg),
                                                 noise::Architecture::continuous_time);
    const double r_ecg = ecg.capacitance / 1e-12, r_eeg = eeg.capacitance / 4e-12;
    const bool ok = ecg.in_range && eeg.in_range && r_ecg >= 0.5 && r_ecg <= 2.0 && r_eeg >= 0.5 && r_eeg <= 2.0;
    return {ok, fmt("ECG@SNR10 needs %.2f pF (target ~1); EEG@SNR2 needs %.2f pF (target ~4); factor-2 window",
                    ecg.capacitance * 1e12, eeg.capacitance * 1e12)};
}

struct Campaigns {
    std::vector<scenario::Recording> ecg, rc;
};

Outcome decay_laws(Campaigns& camp) {
    camp.ecg = run_all("ecg_distance_sweep.yaml");
    camp.rc = run_all("rc_distance_sweep.yaml");
    std::map<double, std::vector<double>> ecg_amp, rc_amp;
    for (const auto& r : camp.ecg) {
        // Dominant cardiac line located on the noise-free reference, read off the measured channel.
        const double f = spectral::spectral_peak(r.output.ecg_reference, 1.0, 40.0).frequency;
        ecg_amp[r.config.geometry.distance_m].push_back(spectral::fft_amplitude(r.output.ecg_channel, f));
    }
    for (const auto& r : camp.rc) {
        rc_amp[r.config.geometry.distance_m].push_back(
            spectral::fft_amplitude(r.output.rc_channel, r.config.subject.rr_per_min / 60.0));
    }
    auto slope = [](const std::map<double, std::vector<double>>& m) {
        std::vector<double> x, y;
        for (const auto& [d, v] : m) {
            double s = 0.0;
            for (double a : v) s += a;
            x.push_back(d);
            y.push_back(s / static_cast<double>(v.size()));
        }
        return loglog_slope(x, y);
    };
    const double se = slope(ecg_amp), sr = slope(rc_amp);
    const bool ok = std::abs(se + 2.5) <= 0.3 && std::abs(sr + 2.0) <= 0.3;
    return {ok, fmt("ECG slope %.3f over %zu recordings (target -2.5 +- 0.3); RC slope %.3f over %zu recordings (target -2.0 +- 0.3)",
                    se, camp.ecg.size(), sr, camp.rc.size())};
}

Outcome timing_pipeline(const Campaigns& camp) {
    std::vector<double> ecg_diffs, rc_diffs;
    for (const auto& r : camp.ecg) {
        const auto tc = analysis::timing_stats({r.r_times, analysis::EventKind::r_peak},
                                               analysis::detect_r_peaks(r.output.ecg_channel));
        ecg_diffs.insert(ecg_diffs.end(), tc.diffs.begin(), tc.diffs.end());
    }
    for (const auto& r : camp.rc) {
        const auto tc = analysis::timing_stats({r.respiration.peak_times, analysis::EventKind::breath_peak},
                                               analysis::detect_breath_peaks(analysis::integrate_rc(
                                                   r.output.rc_channel,
                                                   frontend::rc_group_delay(r.config.frontend, r.config.fs_hz,
                                                                            r.config.subject.rr_per_min / 60.0))));
        rc_diffs.insert(rc_diffs.end(), tc.diffs.begin(), tc.diffs.end());
    }
    const double ecg_std = analysis::fit_gaussian(ecg_diffs).sigma, rc_std = analysis::fit_gaussian(rc_diffs).sigma;

    // Detector timing on a clean template with white noise at amplitude SNR 20.
    synthesis::SubjectProfile p;
    const auto s = synthesis::synth_ecg(p, 1000.0, 60.0, 11);
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd(0.0, p.ecg_amplitude_v / 20.0);
    auto x = s.ecg.values();
    for (auto& v : x) v += nd(rng);
    const auto ev = analysis::detect_r_peaks(WaveformBuffer(x, 1000.0));
    double worst = ev.size() == s.r_times.size() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(ev.size(), s.r_times.size()); ++i) {
        worst = std::max(worst, std::abs(ev.times[i] - s.r_times[i]));
    }
    const bool ok = ecg_std >= 1e-3 && ecg_std <= 10e-3 && worst <= 2e-3 && rc_std >= 0.05 && rc_std <= 0.5;
    return {ok, fmt("ECG interval-diff std %.2f ms over %zu intervals (window 1-10); detector error %.2f ms at SNR 20 (limit 2); "
                    "RC std %.3f s over %zu intervals (window 0.05-0.5)",
                    ecg_std * 1e3, ecg_diffs.size(), worst * 1e3, rc_std, rc_diffs.size())};
}

Outcome pli_budget() {
    // Line-frequency tone tagged as PLI at the electrode; noise off so the residual is measurable.
    const double fs = 1000.0;
    const std::size_t n = 20000;
    std::vector<double> pli(n);
    for (std::size_t k = 0; k < n; ++k) pli[k] = 1e-13 * std::sin(kTwoPi * 60.0 * static_cast<double>(k) / fs);
    const auto z = WaveformBuffer::zeros(n, fs);
    const coupling::NortonSource src{WaveformBuffer(pli, fs), WaveformBuffer(std::vector<double>(n, 1e-12), fs), 10.0, 0.3,
                                     z, z, WaveformBuffer(pli, fs), z};
    frontend::FrontEndConfig full;
    full.inject_noise = false;
    auto base = full;
    base.acl_enabled = false;
    base.notch.enabled = false;
    base.aux_loop_enabled = false;
    const double a_full = tone_amp(frontend::simulate_frontend(src, full, {}, 1).ecg_channel, 60.0);
    const double a_base = tone_amp(frontend::simulate_frontend(src, base, {}, 1).ecg_channel, 60.0);
    const double atten = 20.0 * std::log10(a_base / a_full);

    // Motion-cancellation: artifact-only component isolated by subtracting a run without artifacts.
    auto artifact_power = [](const std::string& file) {
        auto cfg = config::load_scenario(scenario_path(file)).config;
        const auto with = scenario::run_scenario(cfg);
        cfg.motion.artifact_times_s.clear();
        const auto without = scenario::run_scenario(cfg);
        std::vector<double> d(with.output.ecg_reference.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = with.output.ecg_reference[i] - without.output.ecg_reference[i];
        const auto spec = fft::rfft(d);
        double p = 0.0;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            if (fft::bin_frequency(k, d.size(), cfg.fs_hz) <= cfg.frontend.mcl.artifact_band_hz) p += std::norm(spec[k]);
        }
        return p;
    };
    const double mcl = 10.0 * std::log10(artifact_power("motion_mcl_off.yaml") / artifact_power("motion_mcl_on.yaml"));
    const bool ok = atten >= 60.0 && std::abs(mcl - 9.5) <= 2.0;
    return {ok, fmt("60 Hz attenuation %.1f dB vs ACL/notch/aux-off baseline (limit 60); MCL suppression %.2f dB (target 9.5 +- 2)",
                    atten, mcl)};
}

Outcome respiration_phase() {
    scenario::ScenarioConfig cfg;
    cfg.duration_s = 60.0;
    cfg.geometry.distance_m = 0.2;
    const auto r = scenario::run_scenario(cfg);
    const double delay = frontend::rc_group_delay(cfg.frontend, cfg.fs_hz, cfg.subject.rr_per_min / 60.0);
    auto centered = [](std::span<const double> v) {
        double m = 0.0;
        for (double a : v) m += a;
        m /= static_cast<double>(v.size());
        std::vector<double> o(v.begin(), v.end());
        for (auto& a : o) a -= m;
        return o;
    };
    const auto xc = centered(r.respiration.displacement.samples());
    auto peak_lag = [&](const WaveformBuffer& y) {
        const auto yc = centered(y.samples());
        const long n = static_cast<long>(xc.size());
        long best_lag = 0;
        double best = -1e300;
        for (long lag = -500; lag <= 500; ++lag) {
            double s = 0.0;
            for (long i = std::max(0L, -lag); i < std::min(n, n - lag); ++i) {
                s += xc[static_cast<std::size_t>(i)] * yc[static_cast<std::size_t>(i + lag)];
            }
            if (s > best) {
                best = s;
                best_lag = lag;
            }
        }
        return best_lag;
    };
    const long raw = peak_lag(analysis::integrate_rc(r.output.rc_channel));
    const long lag = peak_lag(analysis::integrate_rc(r.output.rc_channel, delay));
    return {std::abs(lag) <= 1, fmt("cross-correlation peak at lag %ld samples (limit 1) at fs 1 kHz after removing the "
                                    "%.1f ms RC-path group delay (uncompensated lag %ld)",
                                    lag, delay * 1e3, raw)};
}

Outcome eeg() {
    synthesis::SubjectProfile p;
    const double gamma = analysis::eeg_analyze(synthesis::synth_eeg(p, 1000.0, 120.0, 5)).gamma_slope;
    const auto open = run_all("eeg_eyes_open.yaml").front();
    const auto closed = run_all("eeg_eyes_closed.yaml").front();
    const double a_open = analysis::eeg_analyze(open.output.ecg_channel).band_powers.alpha;
    const double a_closed = analysis::eeg_analyze(closed.output.ecg_channel).band_powers.alpha;
    const bool ok = std::abs(gamma - p.eeg_gamma) <= 0.1 && a_closed > a_open;
    return {ok, fmt("gamma %.3f (synthesized %.2f, tolerance 0.1); measured-channel alpha power closed/open %.2f (must exceed 1)",
                    gamma, p.eeg_gamma, a_closed / a_open)};
}

Outcome telemetry_link() {
    using namespace telemetry;
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> code(-32768, 32767);
    bool identity = true;
    for (int trial = 0; trial < 1000; ++trial) {
        TelemetryPacket p;
        p.node_id = static_cast<std::uint16_t>(trial);
        p.seq = static_cast<std::uint32_t>(rng());
        p.channel_count = 2;
        p.samples_per_channel = 100;
        p.payload.resize(200);
        for (auto& v : p.payload) v = static_cast<std::int16_t>(code(rng));
        identity = identity && decode_packet(encode(p)) == p;
    }
    std::vector<double> ramp(100);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 1e-3 * static_cast<double>(i);
    const auto bytes = encode_packet(1, 7, ramp, ramp);
    std::size_t flips = 0, caught = 0;
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
        auto b = bytes;
        b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        ++flips;
        try {
            decode_packet(b);
        } catch (const DecodeError&) {
            ++caught;
        }
    }

    auto cfg = config::load_scenario(scenario_path("stream_10s.yaml")).config;
    cfg.frontend.rail_v = 3.0;  // keep every sample inside the codec range for the half-LSB check
    const auto rec = scenario::run_scenario(cfg);
    InMemoryTransport link;
    const auto rep = node_stream({rec.output.ecg_channel, rec.output.rc_channel}, {}, link);
    std::vector<std::size_t> sizes;
    const auto session = base_receive(link);
    for (const auto& r : session.records) sizes.push_back(r.packet.wire_length());
    const auto out = replay(session);
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.output.ecg_channel.size(); ++i) {
        worst = std::max(worst, std::abs(out.channels[0][i] - rec.output.ecg_channel[i]));
        worst = std::max(worst, std::abs(out.channels[1][i] - rec.output.rc_channel[i]));
    }
    const bool all_414 = std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 414; });
    const bool ok = identity && caught == flips && rep.packets_sent == 100 && session.records.size() == 100 && all_414 &&
                    session.gaps.empty() && worst <= 0.5 * kVoltsPerLsb + 1e-12;
    return {ok, fmt("round trip %s; %zu/%zu bit flips detected; 10 s -> %zu packets, all 414 bytes %s; loopback max error %.3g V "
                    "(half LSB %.3g V)",
                    identity ? "identical" : "MISMATCH", caught, flips, session.records.size(), all_414 ? "yes" : "no", worst,
                    0.5 * kVoltsPerLsb)};
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / "eps_acceptance_determinism";
    fs::remove_all(root);
    auto tree = [](const fs::path& dir) {
        std::map<std::string, std::string> h;
        for (const auto& e : fs::recursive_directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            std::ifstream f(e.path(), std::ios::binary);
            std::ostringstream ss;
            ss << f.rdbuf();
            h[fs::relative(e.path(), dir).generic_string()] = config::sha256_hex(ss.str());
        }
        return h;
    };
    std::size_t files = 0;
    bool same = true;
    for (const char* s : {"golden.yaml", "fvc.yaml", "eeg_eyes_closed.yaml", "motion_mcl_on.yaml", "posture_side.yaml"}) {
        std::ostringstream log, err;
        const auto a = root / "a" / s, b = root / "b" / s;
        if (app::cmd_simulate({scenario_path(s), a.string(), std::nullopt}, log, err) != 0 ||
            app::cmd_simulate({scenario_path(s), b.string(), std::nullopt}, log, err) != 0) {
            return {false, std::string("simulate failed: ") + err.str()};
        }
        const auto ha = tree(a), hb = tree(b);
        same = same && ha == hb;
        files += ha.size();
    }
    fs::remove_all(root);
    return {same, fmt("%zu artifact files from 5 scenarios %s across two runs", files, same ? "bit-identical" : "DIFFER")};
}

}  // namespace

int main() {
    Campaigns camp;
    struct Criterion {
        std::string name;
        double runtime_limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"1  ACL notch depth and out-of-band change", 1.0, acl_notch},
        {"2  switched-integrator nulls and DC limit", 1.0, si_nulls},
        {"3  noise PSD and band trends", 30.0, noise_model},
        {"4  SNR coupling thresholds", 10.0, snr_thresholds},
        {"5  decay laws", 120.0, [&] { return decay_laws(camp); }},
        {"6  timing pipeline", 300.0, [&] { return timing_pipeline(camp); }},
        {"7  PLI budget and MCL", 60.0, pli_budget},
        {"8  respiration phase", 10.0, respiration_phase},
        {"9  EEG slope and alpha", 30.0, eeg},
        {"10 telemetry", 30.0, telemetry_link},
        {"11 determinism", 300.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.runtime_limit_s;
        const bool pass = o.pass && in_time;
        std::printf("%s  criterion %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(),
                    o.detail.c_str(), secs, c.runtime_limit_s, in_time ? "" : ", TOO SLOW");
        std::fflush(stdout);
        failures += pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
