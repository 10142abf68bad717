// Command-line driver: run a scenario, run the oracle suite, or sweep
// coupling tolerances.

#include <CLI11.hpp>

#include <iostream>

#include "poroflow/scenarios.hpp"

using namespace poroflow;

namespace {

int report(const RunSummary& s) {
    for (const auto& [k, v] : s.results) std::cout << k << " = " << v << "\n";
    if (s.exit_code == exit_ok) {
        std::cout << "wrote " << s.files.size() << " file(s)\n";
    } else {
        std::cerr << "error: " << s.message << "\n";
    }
    return s.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"poroflow: coupled flow and deformation in porous media"};
    app.require_subcommand(1);

    std::string config_path;
    std::string scheme;
    double tol = 0.0;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "run a scenario configuration");
    run->add_option("config", config_path, "scenario configuration (YAML)")->required();
    run->add_option("--scheme", scheme, "fully_coupled | lockstep | subcycle | jacobi");
    run->add_option("--tol", tol, "coupling tolerance");
    run->add_option("--out", out_dir, "output directory");

    auto* verify = app.add_subcommand("verify", "run the oracle suite");

    std::string tols = "1e-3..1e-9";
    auto* sweep = app.add_subcommand("sweep", "tolerance study for lockstep and jacobi");
    sweep->add_option("config", config_path, "scenario configuration (YAML)")->required();
    sweep->add_option("--tols", tols, "range 1e-3..1e-9 or comma list");
    sweep->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config_error;
    }

    if (*verify) return run_verification_suite(std::cout) ? exit_ok : exit_not_converged;

    ScenarioConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::ios_base::failure& e) {
        std::cerr << e.what() << "\n";
        return exit_io_error;
    }

    if (*run) {
        RunOptions opts;
        try {
            if (!scheme.empty()) opts.scheme = scheme_from_string(scheme);
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return exit_config_error;
        }
        if (run->count("--tol")) opts.tol = tol;
        if (!out_dir.empty()) opts.out_dir = out_dir;
        return report(run_scenario(config, opts));
    }

    std::vector<double> list;
    try {
        list = parse_tolerance_range(tols);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    std::optional<std::string> dir;
    if (!out_dir.empty()) dir = out_dir;
    return report(run_sweep(config, list, dir));
}
