// spade: command-line front end for the Fisher scans, Monte Carlo sweeps and hologram checks.
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 numerical self-check failure.

#include <chrono>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spade/cli/commands.hpp"
#include "spade/cli/config.hpp"

namespace {

using spade::cli::ConfigError;
using spade::cli::ExperimentConfig;
using spade::cli::Json;

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::vector<std::string>> schemes;
    std::optional<std::string> motion;
    std::optional<double> amplitude;
    std::optional<double> frequency;
    std::optional<double> phase;
    std::optional<std::size_t> frames;
    std::optional<double> b_over_nu;
    std::optional<std::string> axis;
    std::optional<std::vector<double>> values;
    std::optional<bool> jitter;
    std::optional<double> jitter_sd_ms;
    std::optional<int> hg_modes;
    std::optional<double> nu_di;
    std::optional<double> nu_hg;
    std::optional<double> nu_pm;
    std::optional<double> carrier_period_x_px;
    std::optional<double> carrier_period_y_px;
};

void add_overrides(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config, "JSON config file (flags below win over file values)");
    app->add_option("-o,--output", o.output, "output directory");
    app->add_option("--seed", o.seed, "master RNG seed");
    app->add_option("--trials", o.trials, "Monte Carlo trials per sweep point");
    app->add_option("--schemes", o.schemes, "comma-separated list of di, hg, pm")->delimiter(',');
    app->add_option("--motion", o.motion, "sinusoid | square | fundamental");
    app->add_option("--amplitude", o.amplitude, "oscillation amplitude A in units of sigma");
    app->add_option("--frequency", o.frequency, "dimensionless frequency f = f_o / f_s");
    app->add_option("--phase", o.phase, "phase in radians");
    app->add_option("--frames", o.frames, "frames per run N");
    app->add_option("--b-over-nu", o.b_over_nu, "background per detector relative to nu");
    app->add_option("--axis", o.axis, "sweep axis: frequency | b_over_nu | displacement");
    app->add_option("--values", o.values, "comma-separated sweep values")->delimiter(',');
    app->add_flag("--jitter,!--no-jitter", o.jitter, "random trigger delay per run");
    app->add_option("--jitter-sd-ms", o.jitter_sd_ms, "trigger delay standard deviation in ms");
    app->add_option("--hg-modes", o.hg_modes, "number of HG modes");
    app->add_option("--nu-di", o.nu_di, "photons per frame for direct imaging");
    app->add_option("--nu-hg", o.nu_hg, "photons per frame for HG-SPADE");
    app->add_option("--nu-pm", o.nu_pm, "photons per frame for PM-SPADE");
    app->add_option("--carrier-period-x", o.carrier_period_x_px, "hologram x carrier period in pixels");
    app->add_option("--carrier-period-y", o.carrier_period_y_px, "hologram y carrier period in pixels");
}

template <class T>
void put(Json& j, std::initializer_list<const char*> path, const std::optional<T>& v) {
    if (!v) return;
    Json* node = &j;
    for (auto it = path.begin(); it != path.end(); ++it) {
        if (std::next(it) == path.end()) {
            (*node)[*it] = *v;
        } else {
            node = &(*node)[*it];
        }
    }
}

ExperimentConfig resolve(const Overrides& o) {
    Json j = o.config ? spade::cli::load_json_file(*o.config) : spade::cli::to_json(ExperimentConfig{});
    if (!o.config) j["sweep"] = Json::object();
    put(j, {"output"}, o.output);
    put(j, {"seed"}, o.seed);
    put(j, {"trials"}, o.trials);
    put(j, {"schemes"}, o.schemes);
    put(j, {"motion", "kind"}, o.motion);
    put(j, {"motion", "amplitude_sigma"}, o.amplitude);
    put(j, {"motion", "frequency"}, o.frequency);
    put(j, {"motion", "phase_rad"}, o.phase);
    put(j, {"schedule", "frames"}, o.frames);
    put(j, {"noise", "b_over_nu"}, o.b_over_nu);
    put(j, {"sweep", "axis"}, o.axis);
    put(j, {"sweep", "values"}, o.values);
    put(j, {"schedule", "jitter", "enabled"}, o.jitter);
    put(j, {"schedule", "jitter", "sd_ms"}, o.jitter_sd_ms);
    put(j, {"hg", "modes"}, o.hg_modes);
    put(j, {"noise", "photons", "di"}, o.nu_di);
    put(j, {"noise", "photons", "hg"}, o.nu_hg);
    put(j, {"noise", "photons", "pm"}, o.nu_pm);
    put(j, {"holo", "carrier_period_x_px"}, o.carrier_period_x_px);
    put(j, {"holo", "carrier_period_y_px"}, o.carrier_period_y_px);
    return spade::cli::from_json(j);
}

int run(const std::string& command, const Overrides& o) {
    const auto config = resolve(o);
    if (command == "validate-config") {
        std::cout << spade::cli::to_json(config).dump(2) << '\n';
        return 0;
    }
    const std::size_t workers = spade::cli::worker_count();
    const auto start = std::chrono::steady_clock::now();
    spade::cli::CommandOutput out;
    if (command == "fisher-scan") out = spade::cli::cmd_fisher_scan(config);
    if (command == "ideal-sweep") out = spade::cli::cmd_ideal_sweep(config, workers);
    if (command == "noise-sweep") out = spade::cli::cmd_noise_sweep(config, workers);
    if (command == "jitter-study") out = spade::cli::cmd_jitter_study(config, workers);
    if (command == "holo") out = spade::cli::cmd_holo(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& path : spade::cli::write_outputs(out, config, wall, workers)) std::cout << path << '\n';
    for (const auto& note : out.notes) std::cerr << "self-check: " << note << '\n';
    if (!out.self_check_passed) {
        std::cerr << command << ": numerical self-check failed\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency estimation of an oscillating point source with SPADE and direct imaging"};
    app.require_subcommand(1);
    Overrides o;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"fisher-scan", "per-photon Fisher information versus b/nu, or gamma versus displacement"},
        {"ideal-sweep", "Monte Carlo mean and nu*Var of f_hat versus frequency without background"},
        {"noise-sweep", "Monte Carlo mean and nu*Var of f_hat versus b/nu with CRB and QCRB"},
        {"jitter-study", "sinusoid versus square wave under a random trigger delay"},
        {"holo", "write the PM hologram and check its Fourier-plane readout"},
        {"validate-config", "check a config and print it with all defaults filled in"},
    };
    for (const auto& [name, help] : commands) add_overrides(app.add_subcommand(name, help), o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, o);
    } catch (const ConfigError& e) {
        std::cerr << command << ": invalid configuration\n" << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << '\n';
        return 1;
    }
}
