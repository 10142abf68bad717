/**
 * @file coupling.hpp
 * @brief Coupling algorithms between the flow, solid and porosity subsystems.
 *
 *  - fully_coupled: one block (u, p, phi) system per Picard/Newton iteration;
 *  - lockstep:      flow -> solid -> porosity in sequence, iterated (Gauss-Seidel);
 *  - subcycle:      lockstep with the flow advanced in n substeps per solid step;
 *  - jacobi:        flow and solid solved against the previous iterate, then
 *                   exchanged (optionally on two threads).
 *
 * Every time step starts from the previous step's state (warm start). The
 * outer iteration stops when converged() reports the fieldwise relative
 * change below tol.
 */
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "poroflow/assembly.hpp"

namespace poroflow {

enum class CouplingScheme { fully_coupled, lockstep, subcycle, jacobi };

std::string to_string(CouplingScheme scheme);
CouplingScheme scheme_from_string(const std::string& s);

enum class Linearization { picard, newton };

struct CouplingConfig {
    CouplingScheme scheme = CouplingScheme::lockstep;
    double tol = 1e-9;
    int max_outer_iters = 500;
    int n_subcycles = 1;
    double dt = steady_dt;  // steady_dt: a single steady solve
    double t_end = 1.0;
    Linearization linearization = Linearization::picard;
    bool concurrent_jacobi = true;
    double inner_tol = 1e-12;  // flow Picard loop (pressure-dependent viscosity or damage)
    int max_inner_iters = 200;
    int stagnation_window = 10;
    double stagnation_reduction = 1e-3;

    bool steady() const;
    int step_count() const;
    void validate() const;
};

struct ConvergenceReport {
    int outer_iterations = 0;
    std::vector<double> history;  // residual after each outer iteration
    int flow_solves = 0;
    int solid_solves = 0;
    double wall_time = 0.0;  // seconds
    bool converged = false;
    std::string failure;     // empty, "max_outer_iters" or "stagnation"

    void absorb(const ConvergenceReport& step);
};

struct StepReport {
    int step = 0;
    double time = 0.0;
    ConvergenceReport report;
    SaturationStepReport saturation;
    double max_trace_norm = 0.0;
};

struct CouplingResult {
    FieldState state;
    ConvergenceReport report;  // aggregated over all steps
    std::vector<StepReport> steps;
    int strain_warnings = 0;   // steps where max ||grad u||_* exceeded the threshold
};

struct Convergence {
    bool converged = false;
    double residual = 0.0;
};

/// max over u, p, phi of ||next - prev|| / (||next|| + 1e-14).
Convergence converged(const FieldState& prev, const FieldState& next, double tol);

using StepObserver = std::function<void(const FieldState&, const StepReport&)>;

CouplingResult solve_fully_coupled(const Problem& problem, const FieldState& state,
                                   const CouplingConfig& config, const StepObserver& observer = {});
CouplingResult solve_lockstep(const Problem& problem, const FieldState& state,
                              const CouplingConfig& config, const StepObserver& observer = {});
CouplingResult solve_subcycle(const Problem& problem, const FieldState& state,
                              const CouplingConfig& config, const StepObserver& observer = {});
CouplingResult solve_jacobi(const Problem& problem, const FieldState& state,
                            const CouplingConfig& config, const StepObserver& observer = {});

/// Dispatches on config.scheme.
CouplingResult solve_coupled(const Problem& problem, const FieldState& state,
                             const CouplingConfig& config, const StepObserver& observer = {});

}  // namespace poroflow
