/**
 * @file assembly.hpp
 * @brief Discretisation of the flow, solid and saturation subsystems on a
 *        structured quadrilateral mesh.
 *
 * Unknown layout:
 *  - displacement u: nodal, bilinear;
 *  - pressure p: nodal, bilinear;
 *  - porosity phi and recovered fluid velocity v: one value per element,
 *    evaluated at the element centre;
 *  - non-wetting saturation S_n: one value per node control volume (the
 *    dual cell of the control-volume finite element scheme).
 *
 * Single-phase flow is pressure-primal: v = (rho_f b_f - grad p) / alpha is
 * substituted into  d(phi)/dt + div(phi v) = 0  and v is recovered after the
 * pressure solve. The solid balance is quasi-static,
 *   div(T_e - (p - p_ref) I) + rho_f b_f + rho_s b_s = 0,
 * i.e. the drag on the solid is carried by the pore-pressure split of the
 * solid stress (optionally as an explicit drag load instead).
 */
#pragma once

#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "poroflow/constitutive.hpp"
#include "poroflow/linalg.hpp"
#include "poroflow/mesh.hpp"

namespace poroflow {

struct FieldState {
    std::vector<Vec2> u;          // nodal displacement
    std::vector<Vec2> u_old;      // nodal displacement at the previous time level
    std::vector<double> p;        // nodal pressure
    std::vector<Vec2> v;          // elemental fluid (or total Darcy) velocity
    std::vector<double> phi;      // elemental porosity
    std::vector<double> phi_old;  // elemental porosity at the previous time level
    std::vector<double> s_n;      // nodal non-wetting saturation (two-phase only)
    double time = 0.0;

    static FieldState initial(const Mesh& mesh, double phi0, bool two_phase,
                              double initial_pressure = 0.0, double initial_sn = 1.0);
    void check_consistent(const Mesh& mesh) const;
};

enum class RelPermCurve { quadratic, linear };

struct TwoPhaseParams {
    double rho_w = 1.0;
    double rho_n = 1.0;
    RelPermCurve curve = RelPermCurve::quadratic;
};

enum class Phase { wetting, nonwetting };

struct Materials {
    SolidParams solid;
    std::vector<double> lambda_field;  // per element; empty means uniform solid.lambda
    FluidParams fluid;
    PorosityModel porosity;
    PermeabilityModel permeability;    // two-phase mobility model
    TwoPhaseParams two_phase;
    std::function<Vec2(Vec2)> fluid_body_force;  // b_f, acceleration
    std::function<Vec2(Vec2)> solid_body_force;  // b_s, acceleration
    std::function<Vec2(Vec2)> solid_extra_load;  // force per volume

    SolidParams solid_at(int element) const;
    void validate(const Mesh& mesh) const;
};

struct TractionLoad {
    Side side = Side::top;
    std::function<Vec2(double)> traction;  // traction vector as a function of time
};

struct RateWell {
    int node = -1;
    double rate = 0.0;  // volumetric source, positive for injection
};

struct BoundaryConditions {
    std::map<int, double> pressure;                     // node -> value
    std::map<std::pair<int, int>, double> displacement;  // (node, component) -> value
    std::vector<TractionLoad> tractions;
    std::vector<RateWell> rate_wells;
    std::vector<Side> drained;
    std::vector<int> injectors;  // pressure-controlled nodes injecting the wetting phase
    double reference_pressure = 0.0;  // pore pressure carried by the in-situ stress
    std::function<void(double, BoundaryConditions&)> schedule;  // time-dependent updates

    void set_pressure(int node, double value);
    void set_displacement(int node, int component, double value);
    /// Perfectly drained side: pressure Dirichlet at the ambient value.
    void drain(const Mesh& mesh, Side side, double ambient);
    void fix_component(const Mesh& mesh, Side side, int component, double value = 0.0);
};

class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SolidCouplingForm { pressure_split, drag };

struct PhysicsOptions {
    bool two_phase = false;
    /// Include d(phi)/dt in the mass balance. Off for steady problems.
    bool storage = true;
    SolidCouplingForm solid_form = SolidCouplingForm::pressure_split;
    SolveOptions linear;
    int max_cfl_substeps = 100000;
};

struct Problem {
    Mesh mesh;
    Materials materials;
    BoundaryConditions bcs;
    PhysicsOptions options;
};

inline constexpr double steady_dt = std::numeric_limits<double>::infinity();

// --- pointwise helpers -----------------------------------------------------

Tensor2 displacement_gradient(const Mesh& mesh, const std::vector<Vec2>& u, int element);
double element_pressure(const Mesh& mesh, const std::vector<double>& p, int element);

/// Porosity per element from the current displacement and pressure.
std::vector<double> compute_porosity(const Problem& problem, const FieldState& state);
std::vector<Tensor2> compute_porosity_sensitivity(const Problem& problem, const FieldState& state);

/// Single-phase drag alpha = mu(p)/k per element (Barus viscosity at the
/// element pressure).
std::vector<double> compute_drag(const Problem& problem, const std::vector<double>& p);

/// Solid stress T0 + T_e - (p - p_ref) I per element.
std::vector<Tensor2> compute_stress(const Problem& problem, const FieldState& state);

/// Two-phase mobility alpha^(f) per element (constant or damage-modified).
std::vector<double> compute_mobility(const Problem& problem, const FieldState& state);

double max_trace_norm(const Mesh& mesh, const std::vector<Vec2>& u);

// --- single-phase flow -----------------------------------------------------

/// Galerkin pressure system about the supplied state (Picard linearisation
/// of viscosity). `phi` is the porosity at the new time level; the storage
/// term uses state.phi_old. dt = steady_dt (or storage off) drops it.
SparseSystem assemble_flow(const Problem& problem, const FieldState& state,
                           const std::vector<double>& phi, const std::vector<double>& drag,
                           double dt);

/// Elementwise v = (rho_f b_f - grad p) / alpha at element centres.
std::vector<Vec2> recover_velocity(const Mesh& mesh, const std::vector<double>& p,
                                   const std::vector<double>& drag, double rho_f,
                                   const std::function<Vec2(Vec2)>& body_force);

/// Two-phase Darcy velocities v = -alpha kr(S) (grad p + rho b) per element.
std::vector<Vec2> recover_phase_velocity(const Problem& problem, const FieldState& state,
                                         const std::vector<double>& mobility, Phase phase);

// --- solid -------------------------------------------------------------------

/// Elastic stiffness with pore-pressure (or drag) and body loads; Dirichlet
/// rows eliminated symmetrically.
SparseSystem assemble_solid(const Problem& problem, const FieldState& state, double dt);

enum class Constituent { fluid, solid };

/// Interaction load  int N_a alpha (v_other - v_self)  for one constituent;
/// the fluid and solid vectors sum to zero for the same velocity pair.
Vector assemble_interaction(const Mesh& mesh, const std::vector<double>& alpha,
                            const std::vector<Vec2>& v_fluid, const std::vector<Vec2>& v_solid,
                            Constituent constituent);

// --- two-phase ---------------------------------------------------------------

double phase_mobility(double saturation, Phase phase, RelPermCurve curve = RelPermCurve::quadratic);

struct CvEdge {
    int i = -1;
    int j = -1;
    double transmissibility = 0.0;
};

/// Node-to-node transmissibilities T_ij = -sum_e alpha_e K^e_ij of the
/// bilinear stiffness; fluxes F_ij = T_ij (p_i - p_j) are conservative
/// across node control volumes.
std::vector<CvEdge> cvfem_edges(const Mesh& mesh, const std::vector<double>& mobility);

/// Control-volume sizes: sum over elements of int N_i.
std::vector<double> control_volumes(const Mesh& mesh);
/// Element porosity averaged onto node control volumes.
std::vector<double> control_volume_porosity(const Mesh& mesh, const std::vector<double>& phi);

/// Total-mobility pressure system with upstream (by `upwind_p`) mobility.
SparseSystem assemble_two_phase_pressure(const Problem& problem, const FieldState& state,
                                         const std::vector<CvEdge>& edges,
                                         const std::vector<double>& phi,
                                         const std::vector<double>& upwind_p, double dt);

struct SaturationStepReport {
    int substeps = 0;
    int clamped = 0;
    double injected_w = 0.0;   // wetting volume entering through wells
    double produced_w = 0.0;   // wetting volume leaving through wells
    double injected_n = 0.0;
    double produced_n = 0.0;
    double mass_w_before = 0.0;
    double mass_w_after = 0.0;
    double mass_n_before = 0.0;
    double mass_n_after = 0.0;
    double max_balance_error = 0.0;  // per substep, relative, both phases
};

class CflViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Explicit upwind control-volume update of S_n over dt with the total
/// fluxes implied by `p` (solved with the same `edges`/`upwind_p`).
/// Porosity varies linearly from phi_old to phi over the step.
SaturationStepReport advance_saturation(const Problem& problem, FieldState& state,
                                        const std::vector<CvEdge>& edges,
                                        const std::vector<double>& upwind_p,
                                        const std::vector<double>& phi_old,
                                        const std::vector<double>& phi, double dt);

// --- monolithic --------------------------------------------------------------

struct MonolithicLayout {
    int nodes = 0;
    int elements = 0;
    int u_offset() const { return 0; }
    int p_offset() const { return 2 * nodes; }
    int phi_offset() const { return 3 * nodes; }
    int size() const { return 3 * nodes + elements; }
};

Vector pack_state(const MonolithicLayout& layout, const FieldState& state);
void unpack_state(const MonolithicLayout& layout, const Vector& x, FieldState& state);

/// Residual and Jacobian of the block system over (u, p, phi). With
/// `newton` the derivative of the flow mobility with respect to phi and of
/// phi with respect to p are included; otherwise mobility and viscosity are
/// lagged (Picard). Dirichlet rows are identity with zero residual.
struct MonolithicSystem {
    SparseMatrix jacobian;
    Vector residual;
};

/// Two-phase runs take the total mobility from state.s_n, upwinded by `upwind_p`.
MonolithicSystem assemble_monolithic(const Problem& problem, const FieldState& state, double dt,
                                     bool newton, const std::vector<double>& upwind_p = {});

/// Throws SingularSystem when the displacement constraints leave a rigid mode.
void check_solid_constraints(const Problem& problem);
/// Throws SingularSystem when no pressure Dirichlet value is present.
void check_flow_constraints(const Problem& problem);

/// Imposes Dirichlet values of `bcs` into the state.
void impose_dirichlet(const BoundaryConditions& bcs, FieldState& state);

/// Symmetric elimination of Dirichlet values from an assembled system: the
/// fixed rows become diagonal, fixed columns move to the right-hand side.
void eliminate_dirichlet(SparseSystem& system, const std::vector<std::pair<int, double>>& fixed);

/// Volumetric flux per well node over the last solve (positive = injection),
/// recovered from the discrete mass balance residual.
std::map<int, double> well_fluxes(const Problem& problem, const FieldState& state,
                                  const std::vector<double>& phi, const std::vector<double>& drag,
                                  double dt);

}  // namespace poroflow
