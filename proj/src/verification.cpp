#include "poroflow/verification.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace poroflow {

using std::numbers::pi;

ManufacturedFields ms_exact(double x, const ManufacturedConstants& c) {
    const double s = std::sin(pi * x);
    const double co = std::cos(pi * x);
    ManufacturedFields f;
    f.u = c.u0 * s;
    f.eps = c.u0 * pi * co;
    f.stress = (c.lambda + 2.0 * c.mu) * c.u0 * pi * co;
    f.v = c.v0 * (1.0 + (1.0 - c.phi0) * c.u0 * pi * co);
    f.p = -c.alpha * c.v0 * (x + (1.0 - c.phi0) * c.u0 * s) + c.p0;
    f.phi = c.phi0 / (1.0 + (1.0 - c.phi0) * c.u0 * pi * co);
    return f;
}

ManufacturedBodyForces ms_body_forces(double x, const ManufacturedConstants& c) {
    return {0.0, c.u0 * pi * pi / c.rho_s * (c.lambda + 2.0 * c.mu) * std::sin(pi * x)};
}

double ms_coupling_compensation(double x, const ManufacturedConstants& c) {
    // The solid balance carries -dp/dx + rho_f b_f = alpha v(x); cancel it.
    return -c.alpha * ms_exact(x, c).v;
}

double terzaghi_forcing(double t) { return 100.0 * (1.0 - std::cos(75.0 * t)); }

void TerzaghiParams::validate() const {
    if (std::abs(n_f + n_s - 1.0) > 1e-12) throw std::invalid_argument("n_f + n_s must equal 1");
    if (!(c() > 0.0)) throw std::invalid_argument("Terzaghi c must be positive");
    if (!(a() > 0.0)) throw std::invalid_argument("Terzaghi a must be positive");
    if (!(b() >= 0.0)) throw std::invalid_argument("Terzaghi b must be nonnegative");
}

double bessel_i0_series_branch(double z) {
    const double q = 0.25 * z * z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

double bessel_i0_scaled_large_branch(double z) {
    // exp(-z) I0(z) = (1/pi) int_0^pi exp(-2 z sin^2(theta/2)) dtheta; the
    // trapezoidal rule on this periodic integrand converges geometrically,
    // with aliasing error ~ I_N(z)/I_0(z) ~ exp(-N^2 / 2z).
    const int n = 32 + static_cast<int>(std::ceil(8.0 * std::sqrt(z)));
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double half = pi * k / n;
        const double s = std::sin(half);
        sum += std::exp(-2.0 * z * s * s);
    }
    return sum / n;
}

namespace {

// Hankel expansion; at z > 30 the terms shrink below 1e-16 long before the
// series starts to diverge.
double bessel_i0_scaled_asymptotic(double z) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 30; ++k) {
        const double m = 2.0 * k - 1.0;
        term *= m * m / (8.0 * k * z);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum / std::sqrt(2.0 * pi * z);
}

constexpr double asymptotic_point = 30.0;

}  // namespace

double bessel_i0(double z) {
    z = std::abs(z);
    if (z <= bessel_branch_point) return bessel_i0_series_branch(z);
    return std::exp(z) * bessel_i0_scaled(z);
}

double bessel_i0_scaled(double z) {
    z = std::abs(z);
    if (z <= bessel_branch_point) return std::exp(-z) * bessel_i0_series_branch(z);
    if (z > asymptotic_point) return bessel_i0_scaled_asymptotic(z);
    return bessel_i0_scaled_large_branch(z);
}

namespace {

// Substituting tau = s^2 removes the tau^{-1/2} behaviour of the kernel at
// large b tau / 2a, leaving a smooth integrand in s.
double simpson_convolution(double t, double a, double b, int panels,
                           const std::function<double(double)>& forcing) {
    const double upper = std::sqrt(t);
    const double h = upper / panels;
    auto g = [&](double s) {
        const double tau = s * s;
        return forcing(t - tau) * bessel_i0_scaled(b * tau / (2.0 * a)) * 2.0 * s;
    };
    double sum = g(0.0) + g(upper);
    for (int i = 1; i < panels; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * g(i * h);
    return sum * h / 3.0;
}

}  // namespace

TerzaghiResult terzaghi_analytic(double t, const TerzaghiParams& params, int quad_n,
                                 const std::function<double(double)>& forcing) {
    params.validate();
    if (quad_n < 100) throw std::invalid_argument("quad_n must be >= 100");
    if (quad_n % 2 != 0) ++quad_n;
    TerzaghiResult res;
    res.panels = quad_n;
    if (t <= 0.0) return res;

    const double a = params.a();
    const double b = params.b();
    const double scale = -1.0 / (std::sqrt(a) * (params.lambda + 2.0 * params.mu));
    int n = quad_n;
    double coarse = simpson_convolution(t, a, b, n, forcing);
    for (int doubling = 0; doubling <= 6; ++doubling) {
        const double fine = simpson_convolution(t, a, b, 2 * n, forcing);
        const double denom = std::abs(fine);
        const double diff = std::abs(fine - coarse);
        const double rel = denom > 0.0 ? diff / denom : diff;
        if (rel <= 1e-6) {
            res.u_y = scale * fine;
            res.panels = n;
            res.richardson = rel;
            return res;
        }
        coarse = fine;
        n *= 2;
    }
    std::ostringstream os;
    os << "Terzaghi convolution not converged at t = " << t << " with " << n << " panels";
    throw QuadratureNotConverged(os.str());
}

L2Error l2_error_nodal(const Mesh& mesh, const std::vector<double>& numeric,
                       const std::function<double(Vec2)>& exact) {
    static const QuadratureRule rule = QuadratureRule::gauss(3);
    double err2 = 0.0;
    double ref2 = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        for (const auto& qp : rule.points) {
            const auto sv = shape_eval(coords, qp.point, e);
            Vec2 x;
            double uh = 0.0;
            for (int a = 0; a < 4; ++a) {
                x += sv.values[a] * coords[a];
                uh += sv.values[a] * numeric[conn[a]];
            }
            const double ue = exact(x);
            const double w = qp.weight * sv.jac_det;
            err2 += w * (uh - ue) * (uh - ue);
            ref2 += w * ue * ue;
        }
    }
    if (ref2 > 0.0) return {std::sqrt(err2 / ref2), true};
    return {std::sqrt(err2), false};
}

L2Error l2_error_cell(const Mesh& mesh, const std::vector<double>& numeric,
                      const std::function<double(Vec2)>& exact) {
    double err2 = 0.0;
    double ref2 = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double w = mesh.element_area(e);
        const double ue = exact(mesh.element_center(e));
        err2 += w * (numeric[e] - ue) * (numeric[e] - ue);
        ref2 += w * ue * ue;
    }
    if (ref2 > 0.0) return {std::sqrt(err2 / ref2), true};
    return {std::sqrt(err2), false};
}

}  // namespace poroflow
