#include "poroflow/constitutive.hpp"

#include <cmath>
#include <sstream>

namespace poroflow {

PoreCollapse::PoreCollapse(int element, const std::string& what)
    : std::runtime_error("pore collapse in element " + std::to_string(element) + ": " + what),
      element_(element) {}

void SolidParams::validate() const {
    if (!(mu > 0.0)) throw MaterialError("solid.mu must be positive");
    if (!(lambda + 2.0 * mu / 3.0 >= 0.0)) {
        throw MaterialError("solid bulk modulus lambda + 2 mu / 3 must be nonnegative");
    }
    if (!(rho > 0.0)) throw MaterialError("solid.rho must be positive");
}

void FluidParams::validate() const {
    if (!(mu0 > 0.0)) throw MaterialError("fluid.mu0 must be positive");
    if (!(beta >= 0.0)) throw MaterialError("fluid.beta must be nonnegative");
    if (!(k > 0.0)) throw MaterialError("fluid.k must be positive");
    if (!(rho > 0.0)) throw MaterialError("fluid.rho must be positive");
}

void PorosityModel::validate() const {
    if (!(phi0 > 0.0 && phi0 < 1.0)) throw MaterialError("porosity.phi0 must lie in (0,1)");
}

void PermeabilityModel::validate() const {
    if (!(alpha0 > 0.0)) throw MaterialError("permeability.alpha0 must be positive");
    if (!(zeta >= 0.0)) throw MaterialError("permeability.zeta must be nonnegative");
    if (kind == PermeabilityKind::damage && !(frobenius(insitu_stress) > 0.0)) {
        throw MaterialError("damage permeability needs a nonzero in-situ stress");
    }
}

std::string to_string(PorosityKind kind) {
    switch (kind) {
        case PorosityKind::rational: return "rational";
        case PorosityKind::exponential: return "exponential";
        case PorosityKind::large_deformation: return "large_deformation";
        case PorosityKind::frozen: return "frozen";
    }
    return "unknown";
}

PorosityKind porosity_kind_from_string(const std::string& s) {
    if (s == "rational") return PorosityKind::rational;
    if (s == "exponential") return PorosityKind::exponential;
    if (s == "large_deformation") return PorosityKind::large_deformation;
    if (s == "frozen") return PorosityKind::frozen;
    throw MaterialError("unknown porosity model '" + s + "'");
}

std::string to_string(PermeabilityKind kind) {
    return kind == PermeabilityKind::constant ? "constant" : "damage";
}

PermeabilityKind permeability_kind_from_string(const std::string& s) {
    if (s == "constant") return PermeabilityKind::constant;
    if (s == "damage") return PermeabilityKind::damage;
    throw MaterialError("unknown permeability model '" + s + "'");
}

Tensor2 linearized_strain(const Tensor2& g) {
    const double off = 0.5 * (g.xy + g.yx);
    return {g.xx, off, off, g.yy};
}

Tensor2 solid_effective_stress(const Tensor2& eps, const SolidParams& p) {
    return p.lambda * eps.trace() * Tensor2::identity() + 2.0 * p.mu * eps;
}

Tensor2 total_solid_stress(const Tensor2& effective, double pressure) {
    return effective - pressure * Tensor2::identity();
}

double barus_viscosity(double pressure, const FluidParams& params) {
    const double exponent = params.beta * pressure;
    if (exponent > barus_exponent_limit) {
        std::ostringstream os;
        os << "Barus exponent beta*p = " << exponent << " exceeds " << barus_exponent_limit;
        throw std::overflow_error(os.str());
    }
    return params.mu0 * std::exp(exponent);
}

double drag_coefficient(double viscosity, double permeability) {
    if (!(permeability > 0.0)) throw MaterialError("permeability must be positive");
    return viscosity / permeability;
}

double porosity_update(const PorosityModel& model, const Tensor2& grad_u, double pressure,
                       int element) {
    const double phi0 = model.phi0;
    double phi = phi0;
    switch (model.kind) {
        case PorosityKind::frozen:
            return phi0;
        case PorosityKind::rational: {
            const double denom = 1.0 + (1.0 - phi0) * grad_u.trace();
            if (!(denom > 0.0)) throw PoreCollapse(element, "rational denominator <= 0");
            phi = phi0 / denom;
            break;
        }
        case PorosityKind::exponential:
            phi = 1.0 - (1.0 - phi0) / std::exp(grad_u.trace());
            break;
        case PorosityKind::large_deformation: {
            const Tensor2 f = Tensor2::identity() + grad_u;
            const double j = f.det();
            if (!(j > 0.0)) throw PoreCollapse(element, "det F <= 0");
            const double c_phi = 1.0 + model.c_r * (pressure - model.p_ref);
            phi = c_phi * (1.0 - (1.0 - phi0) / j);
            break;
        }
    }
    if (!(phi > 0.0 && phi < 1.0)) {
        std::ostringstream os;
        os << "porosity " << phi << " outside (0,1)";
        throw PoreCollapse(element, os.str());
    }
    return phi;
}

Tensor2 porosity_sensitivity(const PorosityModel& model, const Tensor2& grad_u,
                             double pressure) {
    const double phi0 = model.phi0;
    switch (model.kind) {
        case PorosityKind::frozen:
            return {};
        case PorosityKind::rational: {
            const double denom = 1.0 + (1.0 - phi0) * grad_u.trace();
            const double d = -phi0 * (1.0 - phi0) / (denom * denom);
            return Tensor2::diag(d, d);
        }
        case PorosityKind::exponential: {
            const double d = (1.0 - phi0) * std::exp(-grad_u.trace());
            return Tensor2::diag(d, d);
        }
        case PorosityKind::large_deformation: {
            const Tensor2 f = Tensor2::identity() + grad_u;
            const double j = f.det();
            const double c_phi = 1.0 + model.c_r * (pressure - model.p_ref);
            const double dphi_dj = c_phi * (1.0 - phi0) / (j * j);
            // d det F / d F = cofactor(F)
            const Tensor2 cof{f.yy, -f.yx, -f.xy, f.xx};
            return dphi_dj * cof;
        }
    }
    return {};
}

double damage_permeability(const PermeabilityModel& model, const Tensor2& stress) {
    if (model.kind == PermeabilityKind::constant) return model.alpha0;
    const double ref = frobenius(model.insitu_stress);
    if (!(ref > 0.0)) throw MaterialError("damage permeability needs a nonzero in-situ stress");
    return model.alpha0 * (1.0 + model.zeta * frobenius(stress - model.insitu_stress) / ref);
}

double trace_norm(const Tensor2& a) {
    // (s1 + s2)^2 = s1^2 + s2^2 + 2 s1 s2 = ||A||_F^2 + 2 |det A|
    const double f2 = a.xx * a.xx + a.xy * a.xy + a.yx * a.yx + a.yy * a.yy;
    return std::sqrt(f2 + 2.0 * std::abs(a.det()));
}

}  // namespace poroflow
