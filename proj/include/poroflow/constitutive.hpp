/**
 * @file constitutive.hpp
 * @brief Pointwise material laws for the fluid-saturated porous solid.
 *
 * All functions here are pure: they can be called from concurrent assembly
 * workers without synchronisation.
 */
#pragma once

#include <stdexcept>
#include <string>

#include "poroflow/tensor.hpp"

namespace poroflow {

class MaterialError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Porosity model left the admissible range (pore collapse).
class PoreCollapse : public std::runtime_error {
public:
    PoreCollapse(int element, const std::string& what);
    int element() const { return element_; }

private:
    int element_;
};

struct SolidParams {
    double lambda = 1.0;  // first Lame parameter [Pa]
    double mu = 0.5;      // shear modulus [Pa]
    double rho = 1.0;     // bulk solid density [kg/m^3]

    void validate() const;
    double p_wave_modulus() const { return lambda + 2.0 * mu; }
};

struct FluidParams {
    double mu0 = 1.0;   // reference viscosity [Pa s]
    double beta = 0.0;  // Barus exponent [1/Pa]
    double rho = 1.0;   // bulk fluid density [kg/m^3]
    double k = 1.0;     // intrinsic permeability [m^2]

    void validate() const;
};

enum class PorosityKind { rational, exponential, large_deformation, frozen };

struct PorosityModel {
    PorosityKind kind = PorosityKind::rational;
    double phi0 = 0.1;
    double c_r = 0.0;    // rock compressibility (large_deformation) [1/Pa]
    double p_ref = 0.0;  // reference pressure (large_deformation) [Pa]

    void validate() const;
};

std::string to_string(PorosityKind kind);
PorosityKind porosity_kind_from_string(const std::string& s);

enum class PermeabilityKind { constant, damage };

struct PermeabilityModel {
    PermeabilityKind kind = PermeabilityKind::constant;
    double alpha0 = 1.0;
    double zeta = 0.0;
    Tensor2 insitu_stress;  // T0

    void validate() const;
};

std::string to_string(PermeabilityKind kind);
PermeabilityKind permeability_kind_from_string(const std::string& s);

Tensor2 linearized_strain(const Tensor2& grad_u);

/// T_e = lambda tr(eps) I + 2 mu eps
Tensor2 solid_effective_stress(const Tensor2& eps, const SolidParams& params);

/// T = T_e - p I
Tensor2 total_solid_stress(const Tensor2& effective, double pressure);

/// Largest Barus exponent accepted before exp() leaves the representable range.
inline constexpr double barus_exponent_limit = 700.0;

double barus_viscosity(double pressure, const FluidParams& params);

/// alpha = mu / k. The same coefficient multiplies (v_f - v_s) in the fluid
/// balance and (v_s - v_f) in the solid balance.
double drag_coefficient(double viscosity, double permeability);

/// Porosity from the current deformation. `element` only labels errors.
double porosity_update(const PorosityModel& model, const Tensor2& grad_u, double pressure,
                       int element = -1);

/// Derivative of porosity_update with respect to the displacement gradient,
/// returned as a tensor of partials d(phi)/d(grad_u(i,j)).
Tensor2 porosity_sensitivity(const PorosityModel& model, const Tensor2& grad_u, double pressure);

/// alpha = alpha0 (1 + zeta ||T - T0|| / ||T0||), Frobenius norm.
double damage_permeability(const PermeabilityModel& model, const Tensor2& stress);

/// tr sqrt(A^T A): the sum of the singular values.
double trace_norm(const Tensor2& a);

/// Default threshold above which the small-strain assumption is reported as violated.
inline constexpr double small_strain_threshold = 0.05;

}  // namespace poroflow
