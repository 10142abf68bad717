/**
 * @file scenarios.hpp
 * @brief The four built-in scenarios, their runners and the CLI-facing
 *        run/sweep/verify entry points.
 *
 *  - manufactured: steady 1D strip with the closed-form solution as oracle;
 *  - terzaghi:     consolidating column under F(t) = 100 (1 - cos 75 t),
 *                  compared against the convolution oracle at the top;
 *  - subsidence:   steady drawdown at a central well, coupled vs frozen porosity;
 *  - five_spot:    two-phase water flood between corner wells.
 */
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "poroflow/config.hpp"
#include "poroflow/coupling.hpp"
#include "poroflow/output.hpp"

namespace poroflow {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_not_converged = 3;
inline constexpr int exit_io_error = 4;

/// Elementwise first Lame parameter around `mean`:
///  layered:  mean (1 + a sign(sin(6 pi y / ly)))
///  harmonic: mean (1 + a sin(2 pi x / lx) sin(2 pi y / ly))
/// evaluated at element centres. Both modes are deterministic; the seed is
/// recorded for provenance only.
std::vector<double> gen_heterogeneous_field(const Mesh& mesh, HeterogeneityMode mode,
                                            double amplitude, unsigned seed, double mean);

struct ScenarioSetup {
    Problem problem;
    FieldState initial;
    CouplingConfig coupling;
};

ScenarioSetup build_manufactured(const ScenarioConfig& config);
ScenarioSetup build_terzaghi(const ScenarioConfig& config);
ScenarioSetup build_subsidence(const ScenarioConfig& config, bool frozen_porosity);
ScenarioSetup build_five_spot(const ScenarioConfig& config, bool constant_permeability);

TerzaghiParams terzaghi_params(const ScenarioConfig& config);

struct ManufacturedErrors {
    double u = 0.0;
    double p = 0.0;
    double v = 0.0;
    double phi = 0.0;
};

ManufacturedErrors manufactured_errors(const Mesh& mesh, const FieldState& state,
                                       const ManufacturedConstants& constants);

struct ManufacturedRun {
    CouplingResult result;
    ManufacturedErrors errors;
};

ManufacturedRun run_manufactured(const ScenarioConfig& config, const StepObserver& observer = {});

struct TerzaghiRun {
    CouplingResult result;
    std::vector<double> times;
    std::vector<double> u_numeric;   // top-surface u_y
    std::vector<double> u_analytic;
    double relative_linf = 0.0;      // max |numeric - analytic| / max |analytic|
    double max_richardson = 0.0;     // worst oracle quadrature check
};

TerzaghiRun run_terzaghi(const ScenarioConfig& config, const StepObserver& observer = {});

struct SubsidenceRun {
    CouplingResult coupled;
    std::optional<CouplingResult> frozen;
    std::vector<double> times;
    std::vector<double> subsidence_coupled;  // -u_y at the top centre
    std::vector<double> subsidence_frozen;
    std::vector<double> profile_x;           // top surface
    std::vector<double> profile_coupled;
    std::vector<double> profile_frozen;
    double min_porosity_ratio = 1.0;         // min phi / phi0, coupled run
};

SubsidenceRun run_subsidence(const ScenarioConfig& config, const StepObserver& observer = {});

struct FiveSpotRun {
    CouplingResult result;
    std::vector<double> times;
    std::vector<double> producer_sw;      // max wetting saturation over producers
    std::vector<double> balance_error;    // per step, worst substep
    double breakthrough_time = -1.0;      // -1 if no breakthrough before t_end
    double max_balance_error = 0.0;
    double min_sn = 1.0;
    double max_sn = 0.0;
    double max_asymmetry = 0.0;           // max |S(i,j) - S(j,i)| over all steps
    int clamped = 0;
};

FiveSpotRun run_five_spot(const ScenarioConfig& config, bool constant_permeability,
                          const StepObserver& observer = {});

struct RunOptions {
    std::optional<CouplingScheme> scheme;
    std::optional<double> tol;
    std::optional<std::string> out_dir;
};

struct RunSummary {
    int exit_code = exit_ok;
    std::string message;
    std::vector<std::string> files;
    std::vector<std::pair<std::string, std::string>> results;
};

/// Runs the configured scenario and writes VTK/CSV/manifest into the output
/// directory. Never throws; failures map to the documented exit codes.
RunSummary run_scenario(ScenarioConfig config, const RunOptions& options = {});

/// "1e-3..1e-9" (every decade) or a comma-separated list.
std::vector<double> parse_tolerance_range(const std::string& text);

/// Tolerance study: every tolerance x {lockstep, jacobi}; writes sweep.csv.
RunSummary run_sweep(ScenarioConfig config, const std::vector<double>& tols,
                     const std::optional<std::string>& out_dir = {});

/// Oracle checks; one line per check on `out`. Returns true when all pass.
bool run_verification_suite(std::ostream& out);

}  // namespace poroflow
