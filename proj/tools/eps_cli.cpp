#include <iostream>

#include <CLI11.hpp>

#include "eps/app.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Electric-potential sensing simulator"};
    cli.require_subcommand(1);
    cli.set_version_flag("--version", eps::app::kToolVersion);

    eps::app::SimulateOptions sim;
    std::uint64_t sim_seed = 0;
    auto* simulate = cli.add_subcommand("simulate", "Synthesize recordings from a scenario file");
    simulate->add_option("--config", sim.config_path, "Scenario YAML")->required();
    simulate->add_option("--out", sim.out_dir, "Output directory")->required();
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "Override the scenario seed");

    std::string an_in, an_out;
    auto* analyze = cli.add_subcommand("analyze", "Run the analysis pipeline over simulated recordings");
    analyze->add_option("--in", an_in, "Recordings directory (simulate output)")->required();
    analyze->add_option("--out", an_out, "Report directory")->required();

    eps::app::NoiseBudgetOptions nb;
    std::string nb_arch = "ct";
    auto* noise = cli.add_subcommand("noise-budget", "Integrated input noise versus coupling capacitance");
    noise->add_option("--config", nb.config_path, "Scenario YAML supplying the noise section");
    noise->add_option("--architecture", nb_arch, "ct (continuous-time) or si (switched integrator)")
        ->check(CLI::IsMember({"ct", "si"}));
    noise->add_option("--c-min-pf", nb.c_lo_pf, "Smallest coupling capacitance");
    noise->add_option("--c-max-pf", nb.c_hi_pf, "Largest coupling capacitance");
    noise->add_option("--c-step-pf", nb.c_step_pf, "Capacitance step");

    eps::app::FreqResponseOptions fr;
    auto* freq = cli.add_subcommand("freq-response", "Transimpedance and channel magnitude responses");
    freq->add_option("--config", fr.config_path, "Scenario YAML supplying the front-end section");
    freq->add_option("--f-min", fr.f_lo, "Lowest frequency [Hz]");
    freq->add_option("--f-max", fr.f_hi, "Highest frequency [Hz]");
    freq->add_option("--points-per-decade", fr.points_per_decade, "Sweep density");

    eps::app::StreamOptions st;
    std::uint64_t st_seed = 0;
    bool st_fast = false;
    auto* stream = cli.add_subcommand("stream", "Simulate one recording and send it as telemetry packets");
    stream->add_option("--config", st.config_path, "Scenario YAML")->required();
    stream->add_option("--endpoint", st.endpoint, "Receiver host:port")->required();
    auto* st_seed_opt = stream->add_option("--seed", st_seed, "Override the scenario seed");
    stream->add_option("--node-id", st.node_id, "Node identifier");
    stream->add_flag("--fast", st_fast, "Send without real-time pacing");

    eps::app::ServeOptions sv;
    int sv_idle_ms = 2000;
    auto* serve = cli.add_subcommand("serve", "Receive one telemetry session and write it to disk");
    serve->add_option("--endpoint", sv.endpoint, "Local host:port to bind")->required();
    serve->add_option("--out", sv.session_path, "Session file")->required();
    serve->add_option("--idle-timeout-ms", sv_idle_ms, "End the session after this much silence")
        ->check(CLI::PositiveNumber);

    std::string rp_in, rp_out;
    auto* replay = cli.add_subcommand("replay", "Convert a session file to CSV");
    replay->add_option("--in", rp_in, "Session file")->required();
    replay->add_option("--out", rp_out, "Output directory")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : eps::app::kConfigError;
    }

    if (simulate->parsed()) {
        if (*seed_opt) sim.seed = sim_seed;
        return eps::app::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (analyze->parsed()) return eps::app::cmd_analyze(an_in, an_out, std::cout, std::cerr);
    if (noise->parsed()) {
        nb.architecture = nb_arch == "si" ? eps::noise::Architecture::switched_integrator
                                          : eps::noise::Architecture::continuous_time;
        return eps::app::cmd_noise_budget(nb, std::cout, std::cerr);
    }
    if (freq->parsed()) return eps::app::cmd_freq_response(fr, std::cout, std::cerr);
    if (stream->parsed()) {
        if (*st_seed_opt) st.seed = st_seed;
        st.pace = st_fast ? eps::telemetry::Pace::accelerated : eps::telemetry::Pace::realtime;
        return eps::app::cmd_stream(st, std::cout, std::cerr);
    }
    if (serve->parsed()) {
        sv.idle_timeout = std::chrono::milliseconds(sv_idle_ms);
        return eps::app::cmd_serve(sv, std::cout, std::cerr);
    }
    if (replay->parsed()) return eps::app::cmd_replay(rp_in, rp_out, std::cout, std::cerr);
    return eps::app::kInternalError;
}
