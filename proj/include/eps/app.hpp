#pragma once

// Command implementations behind the eps command-line tool. Each returns a process exit code:
// 0 success, 2 configuration, 3 input data, 4 transport, 5 internal.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eps/analysis.hpp"
#include "eps/config.hpp"
#include "eps/frontend.hpp"
#include "eps/noise.hpp"
#include "eps/scenario.hpp"
#include "eps/spectral.hpp"
#include "eps/telemetry/session.hpp"

namespace eps::app {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kInputError = 3, kTransportError = 4, kInternalError = 5 };

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Input-data problem (missing recordings, unreadable artifacts): exit code 3.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const telemetry::TransportError& e) {
        err << "transport error: " << e.what() << '\n';
        return kTransportError;
    } catch (const telemetry::SessionError& e) {
        err << "transport error: " << e.what() << '\n';
        return kTransportError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const IoError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const InsufficientDataError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const ContractError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path.string(), "cannot open for writing");
    f << text;
    if (!f) throw IoError(path.string(), "write failed");
}

inline std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path.string(), "cannot open for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// An unreadable scenario file is a configuration problem, not an input-data one.
inline config::ScenarioFile load_config(const std::string& path) {
    try {
        return config::load_scenario(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
}


inline std::string waveform_csv(const WaveformBuffer& w, const std::string& column) {
    std::ostringstream os;
    write_csv(os, w, column);
    return os.str();
}

inline WaveformBuffer load_waveform(const fs::path& path) {
    std::istringstream is(read_text(path));
    try {
        return read_csv(is);
    } catch (const ContractError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

inline std::string events_csv(const std::vector<double>& times) {
    std::ostringstream os;
    os << "index,time_s\n";
    for (std::size_t i = 0; i < times.size(); ++i) os << i << ',' << format_double(times[i]) << '\n';
    return os.str();
}

inline std::vector<double> load_events(const fs::path& path) {
    std::istringstream is(read_text(path));
    std::string line;
    std::getline(is, line);
    std::vector<double> t;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        try {
            t.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw InputError(path.string() + ": malformed row '" + line + "'");
        }
    }
    return t;
}

inline const char* source_name(scenario::SourceKind k) { return k == scenario::SourceKind::ecg ? "ecg" : "eeg"; }
inline const char* pattern_name(synthesis::RcPattern p) {
    return p == synthesis::RcPattern::shallow ? "shallow" : "forced_fvc";
}

/// Fixed 9-significant-digit rendering for report tables, stable across runs.
inline std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
}

inline double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += std::log(x);
        my += std::log(y);
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (std::log(x) - mx) * (std::log(x) - mx);
        sxy += (std::log(x) - mx) * (std::log(y) - my);
    }
    return sxy / sxx;
}

}  // namespace detail

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

/// Writes one directory per recording plus a run manifest listing every artifact's SHA-256.
inline int cmd_simulate(const SimulateOptions& opt, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto sf = detail::load_config(opt.config_path);
        if (opt.seed) sf.config.seed = *opt.seed;
        const auto recordings = config::expand(sf);
        const fs::path out(opt.out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError(out.string(), "cannot create output directory: " + ec.message());

        json manifest;
        manifest["tool"] = "eps";
        manifest["tool_version"] = kToolVersion;
        manifest["config_file"] = fs::path(opt.config_path).filename().string();
        manifest["config_sha256"] = sf.config_hash;
        manifest["seed"] = sf.config.seed;
        manifest["recordings"] = json::array();

        for (const auto& cfg : recordings) {
            const auto rec = scenario::run_scenario(cfg);
            const fs::path dir = out / cfg.name;
            fs::create_directories(dir, ec);
            if (ec) throw IoError(dir.string(), "cannot create recording directory: " + ec.message());

            std::map<std::string, std::string> files;
            auto emit = [&](const std::string& name, const std::string& text) {
                detail::write_text(dir / name, text);
                files[name] = config::sha256_hex(text);
            };
            for (const auto& o : cfg.outputs) {
                if (o == "ecg_channel") emit("ecg_channel.csv", detail::waveform_csv(rec.output.ecg_channel, "ecg_channel_v"));
                if (o == "rc_channel") emit("rc_channel.csv", detail::waveform_csv(rec.output.rc_channel, "rc_channel_v"));
                if (o == "tia_output") emit("tia_output.csv", detail::waveform_csv(rec.output.tia_output, "tia_output_v"));
                if (o == "ecg_reference") emit("ecg_reference.csv", detail::waveform_csv(rec.output.ecg_reference, "ecg_reference_v"));
                if (o == "rc_reference") emit("rc_reference.csv", detail::waveform_csv(rec.output.rc_reference, "rc_reference_v"));
                if (o == "body_potential") emit("body_potential.csv", detail::waveform_csv(rec.body_potential, "body_potential_v"));
                if (o == "chest_displacement") {
                    emit("chest_displacement.csv", detail::waveform_csv(rec.respiration.displacement, "chest_displacement_m"));
                }
                if (o == "source_current") emit("source_current.csv", detail::waveform_csv(rec.source.i_in, "source_current_a"));
                if (o == "events") {
                    if (cfg.source == scenario::SourceKind::ecg) emit("truth_r_peaks.csv", detail::events_csv(rec.r_times));
                    emit("truth_breath_peaks.csv", detail::events_csv(rec.respiration.peak_times));
                }
            }

            json meta;
            meta["name"] = cfg.name;
            meta["source"] = detail::source_name(cfg.source);
            meta["seed"] = cfg.seed;
            meta["fs_hz"] = cfg.fs_hz;
            meta["duration_s"] = cfg.duration_s;
            meta["distance_cm"] = rec.source.distance_m * 100.0;
            meta["nominal_distance_cm"] = cfg.geometry.distance_m * 100.0;
            meta["angle_deg"] = cfg.geometry.angle_rad * 180.0 / constants::kPi;
            meta["rc_pattern"] = detail::pattern_name(cfg.subject.rc_pattern);
            meta["rr_per_min"] = cfg.subject.rr_per_min;
            meta["hr_bpm"] = cfg.subject.hr_bpm;
            meta["eyes_closed"] = cfg.subject.eyes_closed;
            meta["mcl_enabled"] = cfg.frontend.mcl.enabled;
            // Instrument calibration: RC-path group delay at the breathing rate.
            meta["rc_group_delay_s"] = frontend::rc_group_delay(cfg.frontend, cfg.fs_hz, cfg.subject.rr_per_min / 60.0);
            meta["config_sha256"] = sf.config_hash;
            if (rec.respiration.maneuver) {
                meta["maneuver_s"] = {rec.respiration.maneuver->first, rec.respiration.maneuver->second};
            }
            meta["saturated_samples"] = {{"tia", rec.output.saturation.tia},
                                         {"ecg", rec.output.saturation.ecg},
                                         {"rc", rec.output.saturation.rc}};
            emit("recording.json", meta.dump(2) + "\n");

            json entry;
            entry["name"] = cfg.name;
            entry["seed"] = cfg.seed;
            entry["files"] = files;
            manifest["recordings"].push_back(entry);
            log << "wrote " << dir.string() << '\n';
        }
        detail::write_text(out / "manifest.json", manifest.dump(2) + "\n");
        return static_cast<int>(kOk);
    });
}

// ---------------------------------------------------------------- analyze

namespace detail {

struct TimingRows {
    std::vector<std::pair<std::string, double>> diffs;  // recording, diff
    std::vector<double> pooled() const {
        std::vector<double> v;
        for (const auto& d : diffs) v.push_back(d.second);
        return v;
    }
};

inline std::string timing_table(const TimingRows& rows, double scale, const std::string& unit) {
    std::ostringstream os;
    os << "recording,interval_diff_" << unit << '\n';
    for (const auto& [name, d] : rows.diffs) os << name << ',' << num(d * scale) << '\n';
    return os.str();
}

inline std::string cdf_table(std::vector<double> v, double scale, const std::string& unit) {
    std::sort(v.begin(), v.end());
    std::ostringstream os;
    os << "interval_diff_" << unit << ",cdf\n";
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << num(v[i] * scale) << ',' << num(static_cast<double>(i + 1) / static_cast<double>(v.size())) << '\n';
    }
    return os.str();
}

inline std::string histogram_table(const std::vector<double>& v, double scale, double bin, const std::string& unit) {
    const auto fit = analysis::fit_gaussian(v);
    double lo = 1e300, hi = -1e300;
    for (double x : v) {
        lo = std::min(lo, x * scale);
        hi = std::max(hi, x * scale);
    }
    const auto first = static_cast<long>(std::floor(lo / bin));
    const auto last = static_cast<long>(std::floor(hi / bin));
    std::vector<std::size_t> counts(static_cast<std::size_t>(last - first + 1), 0);
    for (double x : v) ++counts[static_cast<std::size_t>(static_cast<long>(std::floor(x * scale / bin)) - first)];
    std::ostringstream os;
    os << "bin_center_" << unit << ",count,gaussian_fit_count\n";
    const double mu = fit.mu * scale, sigma = fit.sigma * scale;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double c = (static_cast<double>(first + static_cast<long>(k)) + 0.5) * bin;
        double g = 0.0;
        if (sigma > 0.0) {
            g = static_cast<double>(v.size()) * bin / (sigma * std::sqrt(2.0 * constants::kPi)) *
                std::exp(-0.5 * (c - mu) * (c - mu) / (sigma * sigma));
        }
        os << num(c) << ',' << counts[k] << ',' << num(g) << '\n';
    }
    return os.str();
}

inline std::vector<fs::path> find_recordings(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw InputError("'" + dir.string() + "' is not a directory");
    if (fs::exists(dir / "recording.json")) out.push_back(dir);
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_directory() && fs::exists(e.path() / "recording.json")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// Runs the analysis pipeline over every recording directory below in_dir.
inline int cmd_analyze(const std::string& in_dir, const std::string& out_dir, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto recs = detail::find_recordings(in_dir);
        if (recs.empty()) throw InputError("no recordings in '" + in_dir + "'");
        const fs::path out(out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError(out.string(), "cannot create output directory: " + ec.message());

        detail::TimingRows ecg_rows, breath_rows;
        std::ostringstream amp, spiro, eeg, notes;
        amp << "recording,distance_cm,ecg_amplitude_v,ecg_peak_hz,rc_amplitude_v\n";
        spiro << "recording,fvc_v_s,pef_v,fef_25_75_v,t_start_s,t_end_s\n";
        eeg << "recording,gamma_slope_channel,gamma_slope_source,theta_v2,alpha_v2,beta_v2\n";
        std::map<double, std::vector<double>> ecg_by_d, rc_by_d;
        std::string fv_loop;

        for (const auto& dir : recs) {
            json meta;
            try {
                meta = json::parse(detail::read_text(dir / "recording.json"));
            } catch (const json::exception& e) {
                throw InputError((dir / "recording.json").string() + ": " + e.what());
            }
            const std::string name = meta.value("name", dir.filename().string());
            const double d_cm = meta.value("nominal_distance_cm", 0.0);
            const bool is_ecg = meta.value("source", "ecg") == "ecg";
            std::string ecg_amp = "", ecg_f = "", rc_amp = "";

            if (fs::exists(dir / "ecg_channel.csv")) {
                const auto ch = detail::load_waveform(dir / "ecg_channel.csv");
                if (is_ecg) {
                    const auto pk = spectral::spectral_peak(ch, 1.0, 40.0);
                    ecg_amp = detail::num(pk.amplitude);
                    ecg_f = detail::num(pk.frequency);
                    ecg_by_d[d_cm].push_back(pk.amplitude);
                    if (fs::exists(dir / "truth_r_peaks.csv")) {
                        analysis::EventSeries ref{detail::load_events(dir / "truth_r_peaks.csv"), analysis::EventKind::r_peak};
                        try {
                            const auto tc = analysis::timing_stats(ref, analysis::detect_r_peaks(ch));
                            for (double dd : tc.diffs) ecg_rows.diffs.emplace_back(name, dd);
                        } catch (const InsufficientDataError& e) {
                            notes << "note: " << name << ": ECG timing skipped (" << e.what() << ")\n";
                        }
                    }
                } else {
                    const auto a = analysis::eeg_analyze(ch);
                    // The channel slope carries the front-end response; the source slope is the truth reference.
                    std::string source_gamma;
                    if (fs::exists(dir / "body_potential.csv")) {
                        source_gamma = detail::num(analysis::eeg_analyze(detail::load_waveform(dir / "body_potential.csv")).gamma_slope);
                    }
                    eeg << name << ',' << detail::num(a.gamma_slope) << ',' << source_gamma << ','
                        << detail::num(a.band_powers.theta) << ',' << detail::num(a.band_powers.alpha) << ','
                        << detail::num(a.band_powers.beta) << '\n';
                }
            }
            if (fs::exists(dir / "rc_channel.csv")) {
                const auto rc = detail::load_waveform(dir / "rc_channel.csv");
                try {
                    const double a = spectral::fft_amplitude(rc, meta.value("rr_per_min", 12.0) / 60.0);
                    rc_amp = detail::num(a);
                    rc_by_d[d_cm].push_back(a);
                } catch (const InsufficientDataError&) {
                }
                if (fs::exists(dir / "truth_breath_peaks.csv")) {
                    analysis::EventSeries ref{detail::load_events(dir / "truth_breath_peaks.csv"),
                                              analysis::EventKind::breath_peak};
                    try {
                        const auto tc = analysis::timing_stats(ref, analysis::detect_breath_peaks(analysis::integrate_rc(rc, meta.value("rc_group_delay_s", 0.0))));
                        for (double dd : tc.diffs) breath_rows.diffs.emplace_back(name, dd);
                    } catch (const InsufficientDataError& e) {
                        notes << "note: " << name << ": breath timing skipped (" << e.what() << ")\n";
                    }
                }
                if (meta.value("rc_pattern", "shallow") == "forced_fvc") {
                    std::vector<double> flow(rc.size());
                    for (std::size_t i = 0; i < rc.size(); ++i) flow[i] = -rc[i];
                    if (const auto s = analysis::spirometry_analyze(rc.with_samples(std::move(flow)))) {
                        spiro << name << ',' << detail::num(s->fvc) << ',' << detail::num(s->pef) << ','
                              << detail::num(s->fef_25_75) << ',' << detail::num(s->t_start) << ','
                              << detail::num(s->t_end) << '\n';
                        if (fv_loop.empty()) {
                            std::ostringstream os;
                            os << "volume_v_s,flow_v\n";
                            for (std::size_t i = 0; i < s->fv_volume.size(); i += 10) {
                                os << detail::num(s->fv_volume[i]) << ',' << detail::num(s->fv_flow[i]) << '\n';
                            }
                            fv_loop = os.str();
                        }
                    } else {
                        notes << "note: " << name << ": no forced maneuver found\n";
                    }
                }
            }
            amp << name << ',' << detail::num(d_cm) << ',' << ecg_amp << ',' << ecg_f << ',' << rc_amp << '\n';
        }

        std::ostringstream rep;
        rep << "recordings: " << recs.size() << '\n';
        auto summarize = [&](const char* label, const detail::TimingRows& rows, double scale, const char* unit,
                             double bin, const std::string& stem) {
            if (rows.diffs.empty()) return;
            const auto pooled = rows.pooled();
            const auto fit = analysis::fit_gaussian(pooled);
            rep << label << "_intervals: " << pooled.size() << '\n';
            rep << label << "_mean_diff_" << unit << ": " << detail::num(fit.mu * scale) << '\n';
            rep << label << "_std_diff_" << unit << ": " << detail::num(fit.sigma * scale) << '\n';
            detail::write_text(out / (stem + "_intervals.csv"), detail::timing_table(rows, scale, unit));
            detail::write_text(out / (stem + "_cdf.csv"), detail::cdf_table(pooled, scale, unit));
            detail::write_text(out / (stem + "_histogram.csv"), detail::histogram_table(pooled, scale, bin, unit));
        };
        summarize("ecg", ecg_rows, 1e3, "ms", 1.0, "ecg");
        summarize("breath", breath_rows, 1.0, "s", 0.05, "breath");
        auto slope = [&](const char* label, const std::map<double, std::vector<double>>& by_d) {
            if (by_d.size() < 2) return;
            std::vector<std::pair<double, double>> pts;
            for (const auto& [d, v] : by_d) {
                double m = 0.0;
                for (double x : v) m += x;
                pts.emplace_back(d, m / static_cast<double>(v.size()));
            }
            rep << label << "_decay_slope: " << detail::num(detail::loglog_slope(pts)) << '\n';
        };
        slope("ecg", ecg_by_d);
        slope("rc", rc_by_d);
        rep << notes.str();

        detail::write_text(out / "amplitude_vs_distance.csv", amp.str());
        detail::write_text(out / "spirometry.csv", spiro.str());
        detail::write_text(out / "eeg.csv", eeg.str());
        if (!fv_loop.empty()) detail::write_text(out / "fv_loop.csv", fv_loop);
        detail::write_text(out / "report.txt", rep.str());
        log << rep.str();
        return static_cast<int>(kOk);
    });
}

// ---------------------------------------------------------------- noise budget

struct NoiseBudgetOptions {
    noise::Architecture architecture = noise::Architecture::continuous_time;
    double c_lo_pf = 1.0;
    double c_hi_pf = 8.0;
    double c_step_pf = 1.0;
    std::optional<std::string> config_path;  ///< takes the noise section of a scenario
};

/// Per-term integrated input-referred noise for each band and coupling capacitance.
inline int cmd_noise_budget(const NoiseBudgetOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        noise::NoiseSpec spec;
        if (opt.config_path) spec = detail::load_config(*opt.config_path).config.noise;
        if (!(opt.c_lo_pf > 0.0) || !(opt.c_hi_pf >= opt.c_lo_pf) || !(opt.c_step_pf > 0.0)) {
            throw ConfigError("capacitance range must satisfy 0 < lo <= hi and step > 0");
        }
        const char* arch = opt.architecture == noise::Architecture::continuous_time ? "continuous_time" : "switched_integrator";
        out << "c_c_pf,band,f1_hz,f2_hz,architecture,term_shot_v,term_en_v,term_thermal_v,term_reset_v,total_v\n";
        for (double c = opt.c_lo_pf; c <= opt.c_hi_pf + 1e-9; c += opt.c_step_pf) {
            for (auto [band, label] : {std::pair{noise::Band::ecg, "ecg"}, std::pair{noise::Band::eeg, "eeg"},
                                       std::pair{noise::Band::emg, "emg"}}) {
                const auto b = noise::BandSpec::of(band);
                const auto t = noise::integrated_noise_terms(spec, c * 1e-12, b, opt.architecture);
                const double total = noise::integrated_input_noise(spec, c * 1e-12, b, opt.architecture);
                out << detail::num(c) << ',' << label << ',' << detail::num(b.f1) << ',' << detail::num(b.f2) << ','
                    << arch << ',' << detail::num(t.shot) << ',' << detail::num(t.en) << ',' << detail::num(t.thermal)
                    << ',' << detail::num(t.reset) << ',' << detail::num(total) << '\n';
            }
        }
        return static_cast<int>(kOk);
    });
}

// ---------------------------------------------------------------- frequency response

struct FreqResponseOptions {
    std::optional<std::string> config_path;
    double f_lo = 0.1;
    double f_hi = 400.0;
    int points_per_decade = 200;
};

/// Analog TIA transimpedance with and without the cancellation loop, the switched-integrator
/// transimpedance, and the discretized ECG/RC channel responses (current to output voltage).
inline int cmd_freq_response(const FreqResponseOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        scenario::ScenarioConfig cfg;
        if (opt.config_path) cfg = detail::load_config(*opt.config_path).config;
        if (!(opt.f_lo > 0.0) || !(opt.f_hi > opt.f_lo) || opt.points_per_decade < 1) {
            throw ConfigError("frequency range must satisfy 0 < f_lo < f_hi");
        }
        const auto& fe = cfg.frontend;
        const double c_c = fe.c_c_nominal;
        const auto z_off = frontend::tia_transimpedance_tf(fe, c_c, false);
        const auto z_on = frontend::tia_transimpedance_tf(fe, c_c, true);
        const auto design = frontend::design_chain(fe, cfg.fs_hz);
        const double ecg_gain = std::pow(10.0, fe.ecg_chain.midband_gain_db / 20.0);
        const double rc_gain = std::pow(10.0, fe.rc_chain.gain_db / 20.0);
        auto db = [](double v) { return 20.0 * std::log10(std::max(v, 1e-300)); };

        out << "f_hz,z_acl_off_db_ohm,z_acl_on_db_ohm,z_si_db_ohm,ecg_chain_db_v_per_a,rc_chain_db_v_per_a\n";
        const double decades = std::log10(opt.f_hi / opt.f_lo);
        const auto n = static_cast<int>(std::ceil(decades * opt.points_per_decade));
        for (int i = 0; i <= n; ++i) {
            const double f = opt.f_lo * std::pow(10.0, decades * i / n);
            const double z_si = std::abs(frontend::switched_integrator_tz(frontend::SwitchedIntegratorConfig{}, f));
            std::string ecg = "", rc = "";
            if (f < 0.5 * cfg.fs_hz) {
                const auto tia = design.tia.response(f, cfg.fs_hz) * design.notches.response(f, cfg.fs_hz);
                ecg = detail::num(db(std::abs(tia * design.ecg.response(f, cfg.fs_hz)) * ecg_gain));
                rc = detail::num(db(std::abs(tia * design.rc.response(f, cfg.fs_hz)) * rc_gain));
            }
            out << detail::num(f) << ',' << detail::num(db(std::abs(z_off.at_hz(f)))) << ','
                << detail::num(db(std::abs(z_on.at_hz(f)))) << ',' << detail::num(db(z_si)) << ',' << ecg << ',' << rc
                << '\n';
        }
        return static_cast<int>(kOk);
    });
}

// ---------------------------------------------------------------- telemetry

struct StreamOptions {
    std::string config_path;
    std::string endpoint;
    telemetry::Pace pace = telemetry::Pace::realtime;
    std::optional<std::uint64_t> seed;
    std::uint16_t node_id = 1;
};

/// Simulates one recording and streams its ECG and RC channels as telemetry packets.
inline int cmd_stream(const StreamOptions& opt, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto sf = detail::load_config(opt.config_path);
        if (opt.seed) sf.config.seed = *opt.seed;
        if (sf.sweep) throw ConfigError("stream takes a single recording; remove the sweep section");
        if (sf.config.fs_hz != telemetry::kNodeSampleRate) throw ConfigError("stream requires fs_hz: 1000");
        const auto rec = scenario::run_scenario(sf.config);
        auto tx = telemetry::UdpTransport::connect_to(telemetry::Endpoint::parse(opt.endpoint));
        telemetry::NodeOptions node;
        node.node_id = opt.node_id;
        node.pace = opt.pace;
        const auto rep = telemetry::node_stream({rec.output.ecg_channel, rec.output.rc_channel}, node, tx);
        log << "sent " << rep.packets_sent << " packets (" << rep.saturated_packets << " saturated, "
            << rep.dropped_tail_samples << " tail samples dropped)\n";
        return static_cast<int>(kOk);
    });
}

struct ServeOptions {
    std::string endpoint;
    std::string session_path;
    std::chrono::milliseconds idle_timeout{2000};
};

/// Receives one session until the link stays idle, then writes the session file.
inline int cmd_serve(const ServeOptions& opt, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto rx = telemetry::UdpTransport::bind_local(telemetry::Endpoint::parse(opt.endpoint));
        telemetry::BaseOptions base;
        base.idle_timeout = opt.idle_timeout;
        const auto session = telemetry::base_receive(rx, base);
        telemetry::write_session(session, opt.session_path);
        log << "received " << session.records.size() << " packets, " << session.gaps.size() << " gaps, "
            << session.anomalies.size() << " anomalies\n";
        for (const auto& a : session.anomalies) log << "anomaly seq=" << a.seq << ": " << a.detail << '\n';
        return static_cast<int>(kOk);
    });
}

/// Replays a session file into a CSV with a validity column and a gap table.
inline int cmd_replay(const std::string& session_path, const std::string& out_dir, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto session = telemetry::read_session(session_path);
        const auto r = telemetry::replay(session);
        const fs::path out(out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError(out.string(), "cannot create output directory: " + ec.message());
        std::ostringstream csv;
        csv << "time_s";
        for (std::size_t c = 0; c < r.channels.size(); ++c) csv << ",ch" << c << "_v";
        csv << ",valid\n";
        for (std::size_t i = 0; i < r.valid.size(); ++i) {
            csv << format_double(static_cast<double>(i) / telemetry::kNodeSampleRate);
            for (const auto& ch : r.channels) csv << ',' << format_double(ch[i]);
            csv << ',' << (r.valid[i] ? 1 : 0) << '\n';
        }
        detail::write_text(out / "replay.csv", csv.str());
        std::ostringstream gaps;
        gaps << "first_seq,last_seq,first_sample,end_sample\n";
        for (std::size_t k = 0; k < session.gaps.size(); ++k) {
            gaps << session.gaps[k].first << ',' << session.gaps[k].last;
            if (k < r.gap_samples.size()) gaps << ',' << r.gap_samples[k].first << ',' << r.gap_samples[k].second;
            gaps << '\n';
        }
        detail::write_text(out / "gaps.csv", gaps.str());
        log << "replayed " << r.valid.size() << " samples per channel, " << session.gaps.size() << " gaps\n";
        return static_cast<int>(kOk);
    });
}

}  // namespace eps::app
