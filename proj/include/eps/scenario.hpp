#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eps/core/error.hpp"
#include "eps/core/waveform.hpp"
#include "eps/coupling.hpp"
#include "eps/frontend.hpp"
#include "eps/noise.hpp"
#include "eps/synthesis.hpp"

namespace eps::scenario {

/// Which body potential drives the surface-potential coupling path.
enum class SourceKind { ecg, eeg };

struct PliSpec {
    bool enabled = true;
    double f0_hz = 60.0;
    double fundamental_v = 0.2;
    double second_harmonic_v = 0.05;
    double drift_ppm = 0.0;
};

struct MotionSpec {
    std::vector<double> artifact_times_s;
    double artifact_amplitude_a = 0.0;
};

/// Sleep-posture presets scale only the cardiac surface-potential path.
enum class Posture { supine_up, side, custom };

inline double posture_attenuation(Posture p, double custom_value) {
    switch (p) {
        case Posture::supine_up: return 1.0;
        case Posture::side: return 0.5;
        case Posture::custom: return custom_value;
    }
    return 1.0;
}

struct ScenarioConfig {
    std::string name = "scenario";
    SourceKind source = SourceKind::ecg;
    double fs_hz = 1000.0;
    double duration_s = 30.0;
    std::uint64_t seed = 1;

    synthesis::SubjectProfile subject;
    double bcg_amplitude_m = 0.0;
    coupling::CouplingGeometry geometry;
    coupling::NortonSourceOptions source_options;
    coupling::TriboelectricState tribo;
    frontend::FrontEndConfig frontend;
    noise::NoiseSpec noise;
    PliSpec pli;
    MotionSpec motion;
    /// Artifacts written by the simulate command.
    std::vector<std::string> outputs{"ecg_channel", "rc_channel", "events"};

    void validate() const {
        if (name.empty()) throw ConfigError("name must not be empty");
        if (!(fs_hz > 0.0)) throw ConfigError("fs_hz must be positive");
        if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
        if (fs_hz < 4.0 * frontend.ecg_chain.f_high) throw ConfigError("fs_hz must be at least 4x the ECG upper cutoff");
        if (bcg_amplitude_m < 0.0) throw ConfigError("bcg amplitude must be non-negative");
        if (pli.enabled && (!(pli.f0_hz > 0.0) || pli.f0_hz >= 0.5 * fs_hz)) throw ConfigError("pli f0 must lie in (0, fs/2)");
        if (motion.artifact_amplitude_a < 0.0) throw ConfigError("artifact amplitude must be non-negative");
        if (source_options.distance_jitter_m < 0.0) throw ConfigError("distance jitter must be non-negative");
        try {
            subject.validate();
            geometry.validate();
            tribo.validate();
            noise.validate();
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        frontend.validate();
    }
};

/// Independent, reproducible sub-seeds for each random stage of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kSeedEcg = 1, kSeedResp, kSeedEeg, kSeedArtifact, kSeedCoupling, kSeedNoise };

/// Ground truth plus every intermediate of one simulated recording.
struct Recording {
    ScenarioConfig config;
    WaveformBuffer body_potential;  ///< ECG or EEG surface potential [V]
    std::vector<double> r_times;    ///< empty for EEG sources
    synthesis::RespirationSynthesis respiration;
    coupling::NortonSource source;
    frontend::FrontEndOutput output;
};

inline Recording run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const double fs = cfg.fs_hz, dur = cfg.duration_s;

    std::optional<WaveformBuffer> potential;
    std::vector<double> r_times;
    if (cfg.source == SourceKind::ecg) {
        auto e = synthesis::synth_ecg(cfg.subject, fs, dur, derive_seed(cfg.seed, kSeedEcg));
        potential = std::move(e.ecg);
        r_times = std::move(e.r_times);
    } else {
        potential = synthesis::synth_eeg(cfg.subject, fs, dur, derive_seed(cfg.seed, kSeedEeg));
        // Cardiac timing still drives the BCG when enabled.
        r_times = synthesis::synth_ecg(cfg.subject, fs, dur, derive_seed(cfg.seed, kSeedEcg)).r_times;
    }
    auto resp = synthesis::synth_respiration(cfg.subject, fs, dur, derive_seed(cfg.seed, kSeedResp));

    coupling::SubjectSignals sig{*potential, resp.displacement, std::nullopt, std::nullopt, std::nullopt};
    if (cfg.bcg_amplitude_m > 0.0) sig.bcg_displacement = synthesis::synth_bcg_displacement(r_times, cfg.bcg_amplitude_m, fs, dur);
    if (cfg.pli.enabled) {
        sig.pli_potential = synthesis::synth_pli(cfg.pli.f0_hz, {cfg.pli.fundamental_v, cfg.pli.second_harmonic_v},
                                                 cfg.pli.drift_ppm, fs, dur);
    }
    if (!cfg.motion.artifact_times_s.empty() && cfg.motion.artifact_amplitude_a > 0.0) {
        sig.motion_artifact = synthesis::synth_motion_artifact(cfg.motion.artifact_times_s, cfg.motion.artifact_amplitude_a,
                                                               fs, dur, derive_seed(cfg.seed, kSeedArtifact));
    }
    auto src = coupling::build_norton_source(sig, cfg.geometry, cfg.tribo, cfg.source_options,
                                             derive_seed(cfg.seed, kSeedCoupling));
    auto out = frontend::simulate_frontend(src, cfg.frontend, cfg.noise, derive_seed(cfg.seed, kSeedNoise));
    if (cfg.source == SourceKind::eeg) r_times.clear();
    return Recording{cfg, std::move(*potential), std::move(r_times), std::move(resp), std::move(src), std::move(out)};
}

}  // namespace eps::scenario
