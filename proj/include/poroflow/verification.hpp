/**
 * @file verification.hpp
 * @brief Analytic reference solutions and error norms.
 *
 * Two oracles are provided:
 *  - the one-dimensional manufactured steady solution on the unit interval;
 *  - the top-surface displacement of a saturated half-space under the
 *    transient surface load F(t) = 100 (1 - cos 75 t), written as a
 *    convolution with an exponentially damped modified Bessel kernel.
 */
#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "poroflow/mesh.hpp"

namespace poroflow {

struct ManufacturedConstants {
    double u0 = 0.01;      // displacement amplitude [m]
    double v0 = 1.0;       // fluid velocity amplitude [m/s]
    double p0 = 1.0;       // pressure at x = 0 [Pa]
    double lambda = 1.0;
    double mu = 0.5;
    double alpha = 1.0;    // drag coefficient
    double phi0 = 0.1;
    double rho_f = 1.0;
    double rho_s = 1.0;
};

struct ManufacturedFields {
    double u = 0.0;
    double eps = 0.0;
    double stress = 0.0;  // effective solid stress
    double v = 0.0;
    double p = 0.0;
    double phi = 0.0;
};

ManufacturedFields ms_exact(double x, const ManufacturedConstants& c);

struct ManufacturedBodyForces {
    double fluid = 0.0;
    double solid = 0.0;
};

/// Body forces exactly as prescribed for the manufactured problem.
ManufacturedBodyForces ms_body_forces(double x, const ManufacturedConstants& c);

/// Extra solid load density that cancels the flow-to-solid coupling load
/// (-grad p + rho_f b_f) of the exact fields, so that u0 sin(pi x) also
/// solves the pore-pressure-loaded solid balance.
double ms_coupling_compensation(double x, const ManufacturedConstants& c);

double terzaghi_forcing(double t);

struct TerzaghiParams {
    double n_f = 0.3;
    double n_s = 0.7;
    double rho_f = 1.0;
    double rho_s = 1.0;
    double lambda = 1.0e5;
    double mu = 1.0e5;
    double k_c = 1.0e6;

    double c() const { return (lambda + 2.0 * mu) * n_f * n_f; }
    double a() const { return (n_s * n_s * rho_f + n_f * n_f * rho_s) / c(); }
    double b() const { return n_f * n_f * k_c / c(); }
    void validate() const;
};

class QuadratureNotConverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TerzaghiResult {
    double u_y = 0.0;
    int panels = 0;            // panel count actually used
    double richardson = 0.0;   // |I(2n) - I(n)| / |I(2n)|
};

/// Surface (z = 0) displacement at time t by composite Simpson quadrature.
/// The panel count is doubled from quad_n until two successive estimates
/// agree to 1e-6 relative; QuadratureNotConverged after 6 doublings.
TerzaghiResult terzaghi_analytic(double t, const TerzaghiParams& params, int quad_n = 2000,
                                 const std::function<double(double)>& forcing = terzaghi_forcing);

/// Modified Bessel function of the first kind, order zero.
double bessel_i0(double z);
/// exp(-z) I0(z), finite for all z >= 0.
double bessel_i0_scaled(double z);
/// The two evaluation branches (power series, and the trapezoidal rule on
/// the integral representation) exposed for continuity checks. Above
/// z = 30 the scaled function switches to the asymptotic expansion.
double bessel_i0_series_branch(double z);
double bessel_i0_scaled_large_branch(double z);
inline constexpr double bessel_branch_point = 3.75;

struct L2Error {
    double value = 0.0;
    bool relative = true;  // false when the exact field has zero norm
};

/// Relative L2 error of a nodal (bilinear) field, integrated with a 3x3
/// Gauss rule.
L2Error l2_error_nodal(const Mesh& mesh, const std::vector<double>& numeric,
                       const std::function<double(Vec2)>& exact);

/// Relative L2 error of an elementwise field sampled at element centres
/// (midpoint rule).
L2Error l2_error_cell(const Mesh& mesh, const std::vector<double>& numeric,
                      const std::function<double(Vec2)>& exact);

}  // namespace poroflow
