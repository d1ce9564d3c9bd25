// Command-line front end: dataset generation, decomposition runs, and the
// cable-tension pipeline.
#include "stfd/generators.hpp"
#include "stfd/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

void add_common_flags(CLI::App* cmd, stfd::RunConfig& config, std::string& mode,
                      std::string& config_path) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--input", config.input_path, "input dataset (.csv or .json)");
    cmd->add_option("--output", config.output_dir, "output directory");
    cmd->add_option("--mode", mode, "periodic | nonperiodic | robust");
    cmd->add_option("--seed", config.seed, "PRNG seed");
    cmd->add_option("--tol", config.driver.residual_tol, "relative residual stop tolerance");
    cmd->add_option("--max-components", config.driver.max_components, "component cap");
    cmd->add_option("--gn-epsilon0", config.driver.gn.epsilon_0,
                    "phase-update stop tolerance (negative = auto)");
    cmd->add_option("--alm-gamma", config.driver.alm.gamma, "ALM penalty parameter");
}

stfd::RunConfig merge(const std::string& config_path, const stfd::RunConfig& cli_values,
                      CLI::App* cmd, const std::string& mode) {
    stfd::RunConfig config =
        config_path.empty() ? stfd::RunConfig{} : stfd::parse_config_file(config_path);

    // Command line overrides the config file.
    auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (passed("--input")) config.input_path = cli_values.input_path;
    if (passed("--output")) config.output_dir = cli_values.output_dir;
    if (passed("--seed")) config.seed = cli_values.seed;
    if (passed("--tol")) config.driver.residual_tol = cli_values.driver.residual_tol;
    if (passed("--max-components"))
        config.driver.max_components = cli_values.driver.max_components;
    if (passed("--gn-epsilon0")) config.driver.gn.epsilon_0 = cli_values.driver.gn.epsilon_0;
    if (passed("--alm-gamma")) config.driver.alm.gamma = cli_values.driver.alm.gamma;
    if (!mode.empty()) stfd::apply_config_entry(config, "mode", mode);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse time-frequency decomposition of signal ensembles"};
    app.require_subcommand(1);

    stfd::RunConfig cli_values;
    std::string mode, config_path;

    CLI::App* decompose = app.add_subcommand("decompose", "decompose a dataset into modes");
    add_common_flags(decompose, cli_values, mode, config_path);

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset");
    std::string kind = "example1";
    std::string gen_output = "dataset.csv";
    generate->add_option("--kind", kind, "example1 | two_chirp | cable");
    generate->add_option("--seed", cli_values.seed, "PRNG seed");
    generate->add_option("--samples", cli_values.n_samples, "samples per signal");
    generate->add_option("--signals", cli_values.m_signals, "number of signals");
    generate->add_option("--noise", cli_values.noise_scale, "noise scale");
    generate->add_option("--output", gen_output, "output CSV path");

    CLI::App* cable = app.add_subcommand("cable", "multi-mode cable tension estimation");
    add_common_flags(cable, cli_values, mode, config_path);
    std::string modes_arg = "1,2,3,4,5";
    double mass = 1.0, length = 1.0;
    cable->add_option("--modes", modes_arg, "comma-separated harmonic numbers");
    cable->add_option("--mass-density", mass, "cable mass density (kg/m)");
    cable->add_option("--length", length, "cable length (m)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            stfd::SignalEnsemble ensemble;
            if (kind == "example1") {
                ensemble = stfd::generate_example1(cli_values.seed, cli_values.n_samples,
                                                   cli_values.m_signals, cli_values.noise_scale);
            } else if (kind == "two_chirp") {
                ensemble = stfd::generate_two_chirp(cli_values.n_samples, cli_values.m_signals);
            } else if (kind == "cable") {
                stfd::CableSpec spec;
                spec.modes = {1, 2, 3, 4, 5};
                ensemble = stfd::generate_cable(cli_values.seed, spec, cli_values.n_samples,
                                                cli_values.m_signals, cli_values.noise_scale);
            } else {
                throw stfd::Error(stfd::ErrorKind::InvalidArgument, "unknown kind: " + kind);
            }
            stfd::write_ensemble_csv(gen_output, ensemble);
            return 0;
        }

        stfd::RunConfig config;
        if (decompose->parsed()) {
            config = merge(config_path, cli_values, decompose, mode);
        } else {
            config = merge(config_path, cli_values, cable, mode);
            config.cable_mode = true;
            config.cable.mass_density = mass;
            config.cable.length = length;
            if (cable->count("--modes") > 0 || config.cable.modes.size() <= 1)
                stfd::apply_config_entry(config, "cable_modes", modes_arg);
        }
        return stfd::run(config);
    } catch (const stfd::Error& e) {
        fprintf(stderr, "%s\n", stfd::error_json(e).c_str());
        return 2;
    }
}
