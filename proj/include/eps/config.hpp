#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "eps/core/constants.hpp"
#include "eps/core/error.hpp"
#include "eps/scenario.hpp"

namespace eps::config {

/// Config problem located at a line of the source file.
class ConfigFieldError : public ConfigError {
public:
    ConfigFieldError(const std::string& file, int line, const std::string& field, const std::string& what)
        : ConfigError(file + ":" + std::to_string(line) + ": " + field + ": " + what), line_(line), field_(field) {}
    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    int line_;
    std::string field_;
};

/// Parameter varied across the recordings of a sweep.
enum class SweepParameter { distance_cm, angle_deg };

struct SweepSpec {
    SweepParameter parameter = SweepParameter::distance_cm;
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;
    int repeats = 1;

    std::vector<double> values() const {
        std::vector<double> v;
        const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (int i = 0; i < n; ++i) v.push_back(start + i * step);
        return v;
    }
};

struct ScenarioFile {
    scenario::ScenarioConfig config;
    std::optional<SweepSpec> sweep;
    std::string config_hash;  ///< SHA-256 of the source text, hex
};

inline const std::set<std::string>& known_outputs() {
    static const std::set<std::string> k{"ecg_channel",   "rc_channel",        "tia_output",     "ecg_reference",
                                         "rc_reference",  "body_potential",    "chest_displacement",
                                         "source_current", "events"};
    return k;
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("sha256: digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

namespace detail {

// Mapping node whose keys must all be consumed before finish().
class Section {
public:
    Section(YAML::Node node, std::string path, std::string file)
        : node_(std::move(node)), path_(std::move(path)), file_(std::move(file)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, path_.empty() ? "<root>" : path_, "expected a mapping");
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        seen_.insert(key);
        const YAML::Node v = node_[key];
        try {
            out = v.as<T>();
        } catch (const YAML::Exception&) {
            fail(v, field(key), "wrong type");
        }
    }

    /// Number scaled to SI, with an optional lower bound check.
    void number(const std::string& key, double& out, double scale = 1.0) {
        if (!has(key)) return;
        double raw = 0.0;
        get(key, raw);
        if (!std::isfinite(raw)) fail(node_[key], field(key), "must be finite");
        out = raw * scale;
    }
    void positive(const std::string& key, double& out, double scale = 1.0) {
        number(key, out, scale);
        if (has(key) && !(out > 0.0)) fail(node_[key], field(key), "must be positive");
    }
    void non_negative(const std::string& key, double& out, double scale = 1.0) {
        number(key, out, scale);
        if (has(key) && !(out >= 0.0)) fail(node_[key], field(key), "must be non-negative");
    }

    template <class E>
    void choice(const std::string& key, E& out, const std::vector<std::pair<std::string, E>>& options) {
        if (!has(key)) return;
        std::string s;
        get(key, s);
        for (const auto& [name, value] : options) {
            if (name == s) {
                out = value;
                return;
            }
        }
        std::string allowed;
        for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o.first;
        fail(node_[key], field(key), "'" + s + "' is not one of {" + allowed + "}");
    }

    Section sub(const std::string& key) {
        if (has(key)) seen_.insert(key);
        return Section(has(key) ? node_[key] : YAML::Node(), field(key), file_);
    }

    YAML::Node raw(const std::string& key) {
        if (has(key)) seen_.insert(key);
        return has(key) ? node_[key] : YAML::Node();
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) fail(kv.first, field(key), "unknown key");
        }
    }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& fld, const std::string& what) const {
        throw ConfigFieldError(file_, at.Mark().line + 1, fld, what);
    }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const std::string& file() const { return file_; }

private:
    YAML::Node node_;
    std::string path_;
    std::string file_;
    std::set<std::string> seen_;
};

inline std::vector<double> number_list(Section& s, const std::string& key) {
    std::vector<double> out;
    s.get(key, out);
    return out;
}

}  // namespace detail

/// Parses scenario text. Every key is optional; unknown keys and out-of-range values are rejected
/// with their line number, and the assembled config is validated as a whole.
inline ScenarioFile parse_scenario(const std::string& text, const std::string& file = "<string>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigFieldError(file, e.mark.line + 1, "<syntax>", e.msg);
    }
    ScenarioFile out;
    out.config_hash = sha256_hex(text);
    auto& c = out.config;
    detail::Section top(root, "", file);

    top.get("name", c.name);
    top.choice("source", c.source, {{"ecg", scenario::SourceKind::ecg}, {"eeg", scenario::SourceKind::eeg}});
    top.positive("fs_hz", c.fs_hz);
    top.positive("duration_s", c.duration_s);
    if (top.has("seed")) {
        long long seed = 0;
        top.get("seed", seed);
        if (seed < 0) top.fail(root["seed"], "seed", "must be non-negative");
        c.seed = static_cast<std::uint64_t>(seed);
    }

    {
        auto s = top.sub("subject");
        auto& p = c.subject;
        s.positive("hr_bpm", p.hr_bpm);
        if (s.has("hr_trajectory")) {
            std::vector<std::vector<double>> traj;
            s.get("hr_trajectory", traj);
            p.hr_trajectory.clear();
            for (const auto& pt : traj) {
                if (pt.size() != 2) s.fail(s.raw("hr_trajectory"), s.field("hr_trajectory"), "entries must be [t_s, bpm]");
                p.hr_trajectory.emplace_back(pt[0], pt[1]);
            }
        }
        s.non_negative("hrv_sigma_ms", p.hrv_sigma_s, 1e-3);
        s.positive("ecg_amplitude_mv", p.ecg_amplitude_v, 1e-3);
        s.positive("rr_per_min", p.rr_per_min);
        s.choice("rc_pattern", p.rc_pattern,
                 {{"shallow", synthesis::RcPattern::shallow}, {"forced_fvc", synthesis::RcPattern::forced_fvc}});
        s.positive("chest_amplitude_mm", p.chest_amplitude_m, 1e-3);
        s.non_negative("rr_cycle_jitter", p.rr_cycle_jitter);
        s.non_negative("eeg_gamma", p.eeg_gamma);
        s.positive("eeg_rms_uv", p.eeg_rms_v, 1e-6);
        s.get("eyes_closed", p.eyes_closed);
        s.positive("eyes_closed_alpha_gain", p.eyes_closed_alpha_gain);
        s.non_negative("blink_rate_per_min", p.blink_rate_per_min);
        s.non_negative("bcg_amplitude_um", c.bcg_amplitude_m, 1e-6);
        s.finish();
    }
    {
        auto s = top.sub("geometry");
        auto& g = c.geometry;
        s.positive("electrode_side_cm", g.electrode_side_m, 1e-2);
        s.positive("distance_cm", g.distance_m, 1e-2);
        s.number("angle_deg", g.angle_rad, constants::kPi / 180.0);
        s.positive("ecg_decay_exponent", g.ecg_decay_exponent);
        s.positive("rc_decay_exponent", g.rc_decay_exponent);
        s.positive("field_sharing_reference_cm", g.field_sharing_reference_m, 1e-2);
        scenario::Posture posture = scenario::Posture::supine_up;
        double custom = 1.0;
        s.choice("posture", posture,
                 {{"supine_up", scenario::Posture::supine_up}, {"side", scenario::Posture::side},
                  {"custom", scenario::Posture::custom}});
        s.non_negative("posture_attenuation", custom);
        if (s.has("posture_attenuation") && posture != scenario::Posture::custom) {
            s.fail(s.raw("posture_attenuation"), s.field("posture_attenuation"), "only allowed with posture: custom");
        }
        g.posture_attenuation = scenario::posture_attenuation(posture, custom);
        s.non_negative("distance_jitter_cm", c.source_options.distance_jitter_m, 1e-2);
        s.number("body_potential_v", c.source_options.v_body_dc);
        s.finish();
    }
    {
        auto s = top.sub("tribo");
        s.number("initial_scale", c.tribo.initial_scale);
        s.positive("tau_s", c.tribo.tau_s);
        s.finish();
    }
    {
        auto s = top.sub("frontend");
        auto& f = c.frontend;
        s.positive("r_f_gohm", f.r_f, 1e9);
        s.positive("c_f_pf", f.c_f, 1e-12);
        s.positive("c_c_nominal_pf", f.c_c_nominal, 1e-12);
        s.get("acl_enabled", f.acl_enabled);
        s.positive("acl_gain", f.acl_bpf.peak_gain_a);
        s.positive("acl_q", f.acl_bpf.q);
        s.positive("acl_f0_hz", f.acl_bpf.f_center);
        s.get("aux_loop_enabled", f.aux_loop_enabled);
        s.non_negative("aux_loop_attenuation_db", f.aux_loop_attenuation_db);
        s.get("notch_enabled", f.notch.enabled);
        s.positive("notch_depth_db", f.notch.depth_db);
        s.positive("notch_width_hz", f.notch.width_hz);
        if (s.has("notch_f0_hz")) {
            s.positive("notch_f0_hz", f.notch_f0);
            f.notch_2f0 = 2.0 * f.notch_f0;
        }
        s.number("ecg_gain_db", f.ecg_chain.midband_gain_db);
        s.positive("ecg_f_low_hz", f.ecg_chain.f_low);
        s.positive("ecg_f_high_hz", f.ecg_chain.f_high);
        s.number("rc_gain_db", f.rc_chain.gain_db);
        s.positive("rc_f_high_hz", f.rc_chain.f_high);
        s.get("mcl_enabled", f.mcl.enabled);
        s.non_negative("mcl_attenuation", f.mcl.attenuation);
        s.positive("mcl_cutoff_hz", f.mcl.estimator_cutoff);
        s.positive("rail_v", f.rail_v);
        s.get("inject_noise", f.inject_noise);
        s.finish();
    }
    {
        auto s = top.sub("noise");
        auto& n = c.noise;
        s.non_negative("e_n_white_nv", n.e_n_white, 1e-9);
        s.non_negative("e_n_corner_hz", n.e_n_corner);
        s.non_negative("i_b_fa", n.i_b_eff, 1e-15);
        s.non_negative("c_in_pf", n.c_in, 1e-12);
        s.positive("r_in_ohm", n.r_in);
        s.positive("r_leak_ohm", n.r_leak);
        s.positive("temperature_k", n.temperature);
        s.finish();
    }
    // The TIA feedback network is configured once, under frontend.
    c.noise.r_f = c.frontend.r_f;
    c.noise.c_f = c.frontend.c_f;
    {
        auto s = top.sub("pli");
        s.get("enabled", c.pli.enabled);
        s.positive("f0_hz", c.pli.f0_hz);
        s.non_negative("fundamental_v", c.pli.fundamental_v);
        s.non_negative("second_harmonic_v", c.pli.second_harmonic_v);
        s.number("drift_ppm", c.pli.drift_ppm);
        s.finish();
    }
    {
        auto s = top.sub("motion");
        c.motion.artifact_times_s = detail::number_list(s, "artifact_times_s");
        s.non_negative("artifact_amplitude_fa", c.motion.artifact_amplitude_a, 1e-15);
        s.finish();
    }
    if (top.has("outputs")) {
        const auto node = top.raw("outputs");
        std::vector<std::string> outs;
        try {
            outs = node.as<std::vector<std::string>>();
        } catch (const YAML::Exception&) {
            top.fail(node, "outputs", "expected a list of names");
        }
        for (const auto& o : outs) {
            if (!known_outputs().count(o)) top.fail(node, "outputs", "unknown output '" + o + "'");
        }
        c.outputs = outs;
    }
    if (top.has("sweep")) {
        auto s = top.sub("sweep");
        SweepSpec sw;
        s.choice("parameter", sw.parameter,
                 {{"geometry.distance_cm", SweepParameter::distance_cm}, {"geometry.angle_deg", SweepParameter::angle_deg}});
        s.number("start", sw.start);
        s.number("stop", sw.stop);
        s.positive("step", sw.step);
        if (s.has("repeats")) {
            s.get("repeats", sw.repeats);
            if (sw.repeats < 1) s.fail(s.raw("repeats"), s.field("repeats"), "must be >= 1");
        }
        if (!(sw.stop >= sw.start)) s.fail(s.raw("stop"), s.field("stop"), "must be >= start");
        if (sw.parameter == SweepParameter::distance_cm && !(sw.start > 0.0)) {
            s.fail(s.raw("start"), s.field("start"), "distance must be positive");
        }
        s.finish();
        out.sweep = sw;
    }
    top.finish();

    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigFieldError(file, 1, "<scenario>", e.what());
    }
    return out;
}

inline ScenarioFile load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path, "cannot open scenario file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), path);
}

/// One config per recording: the base config for plain scenarios, value x repeat for sweeps.
/// Recording names encode the swept value and repeat; seeds are derived per recording.
inline std::vector<scenario::ScenarioConfig> expand(const ScenarioFile& sf) {
    if (!sf.sweep) return {sf.config};
    std::vector<scenario::ScenarioConfig> out;
    const auto& sw = *sf.sweep;
    std::uint64_t index = 0;
    for (double v : sw.values()) {
        for (int r = 0; r < sw.repeats; ++r, ++index) {
            auto c = sf.config;
            std::ostringstream name;
            name << sf.config.name;
            if (sw.parameter == SweepParameter::distance_cm) {
                c.geometry.distance_m = v * 1e-2;
                name << "_d" << v << "cm";
            } else {
                c.geometry.angle_rad = v * constants::kPi / 180.0;
                name << "_a" << v << "deg";
            }
            name << "_r" << r;
            c.name = name.str();
            c.seed = scenario::derive_seed(sf.config.seed, 1000 + index);
            c.validate();
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace eps::config
