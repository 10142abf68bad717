#include <doctest.h>

#include <cmath>

#include "poroflow/verification.hpp"

using namespace poroflow;

TEST_CASE("manufactured fields satisfy the steady equations") {
    const ManufacturedConstants c;
    const double h = 1e-5;
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        const auto f = ms_exact(x, c);
        const auto fp = ms_exact(x + h, c);
        const auto fm = ms_exact(x - h, c);
        const double dp = (fp.p - fm.p) / (2.0 * h);
        CHECK(std::abs(c.alpha * f.v + dp) <= 1e-9);
        CHECK(std::abs(f.phi * f.v - c.phi0 * c.v0) <= 1e-14);
        const double dflux = (fp.phi * fp.v - fm.phi * fm.v) / (2.0 * h);
        CHECK(std::abs(dflux) <= 1e-10);
    }
}

TEST_CASE("manufactured closed forms at x = 0") {
    const ManufacturedConstants c;
    const auto f = ms_exact(0.0, c);
    CHECK(f.u == 0.0);
    CHECK(f.p == doctest::Approx(c.p0));
    CHECK(f.eps == doctest::Approx(0.01 * M_PI));
    CHECK(f.phi == doctest::Approx(0.097251).epsilon(1e-5));
}

TEST_CASE("manufactured solid balance is consistent") {
    // d(T_e)/dx - (dp/dx - rho_f b_f) + rho_s b_s + compensation = 0, with the
    // compensation load cancelling the pore-pressure coupling of the exact fields.
    const ManufacturedConstants c;
    const double h = 1e-4;
    for (int i = 1; i < 100; ++i) {
        const double x = i / 100.0;
        const double dT = (ms_exact(x + h, c).stress - ms_exact(x - h, c).stress) / (2.0 * h);
        const double dp = (ms_exact(x + h, c).p - ms_exact(x - h, c).p) / (2.0 * h);
        const auto b = ms_body_forces(x, c);
        const double r = dT - dp + c.rho_f * b.fluid + c.rho_s * b.solid + ms_coupling_compensation(x, c);
        CHECK(std::abs(r) <= 1e-6);
    }
}

TEST_CASE("Bessel I0") {
    CHECK(bessel_i0(0.0) == 1.0);
    CHECK(bessel_i0(1.0) == doctest::Approx(1.2660658777520082).epsilon(1e-15));
    // branch continuity at the switch point
    const double z = bessel_branch_point;
    const double a = std::exp(-z) * bessel_i0_series_branch(z);
    const double b = bessel_i0_scaled_large_branch(z);
    CHECK(std::abs(a - b) / a <= 1e-7);
    // against the defining series on [0, 20]
    for (int k = 0; k <= 80; ++k) {
        const double x = 0.25 * k;
        const double s = bessel_i0_series_branch(x);
        CHECK(std::abs(bessel_i0(x) - s) / s <= 1e-8);
    }
    // the asymptotic range joins the quadrature branch smoothly
    for (double x : {30.0 + 1e-9, 35.0, 60.0})
        CHECK(bessel_i0_scaled(x) == doctest::Approx(bessel_i0_scaled_large_branch(x)).epsilon(1e-13));
    CHECK(bessel_i0_scaled(100.0) == doctest::Approx(0.03994437929909668).epsilon(1e-13));
    CHECK(bessel_i0_scaled(1e6) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 1e6)).epsilon(1e-6));
}

TEST_CASE("Terzaghi forcing") {
    CHECK(terzaghi_forcing(0.0) == 0.0);
    CHECK(terzaghi_forcing(M_PI / 75.0) == doctest::Approx(200.0));
}

TEST_CASE("Terzaghi oracle") {
    const TerzaghiParams p;
    CHECK(terzaghi_analytic(0.0, p).u_y == 0.0);
    CHECK(terzaghi_analytic(0.1, p, 2000, [](double) { return 0.0; }).u_y == 0.0);
    for (double t : {0.01, 0.05, 0.1, 0.2}) {
        const auto r = terzaghi_analytic(t, p);
        CHECK(r.richardson <= 1e-6);
        CHECK(r.u_y < 0.0);
    }
    CHECK_THROWS(terzaghi_analytic(0.1, p, 10));
}

TEST_CASE("Terzaghi oracle: degenerate b = 0 has a closed form") {
    TerzaghiParams p;
    p.k_c = 0.0;
    const double fbar = 3.0;
    const double t = 0.07;
    const auto r = terzaghi_analytic(t, p, 2000, [&](double) { return fbar; });
    const double expected = -fbar * t / (std::sqrt(p.a()) * (p.lambda + 2.0 * p.mu));
    CHECK(r.u_y == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("L2 errors") {
    const Mesh m = build_structured_grid(8, 4, 1.0, 1.0);
    auto f = [](Vec2 x) { return 1.0 + x.x * x.y; };
    std::vector<double> nodal(m.node_count());
    for (int n = 0; n < m.node_count(); ++n) nodal[n] = f(m.nodes[n]);
    // bilinear exact field is reproduced exactly
    CHECK(l2_error_nodal(m, nodal, f).value <= 1e-14);
    // constant offset on a unit-norm field
    std::vector<double> shifted(m.node_count(), 1.0 + 0.01);
    const auto e = l2_error_nodal(m, shifted, [](Vec2) { return 1.0; });
    CHECK(e.relative);
    CHECK(e.value == doctest::Approx(0.01).epsilon(1e-12));
    // zero exact field falls back to the absolute norm
    const auto z = l2_error_nodal(m, std::vector<double>(m.node_count(), 0.5), [](Vec2) { return 0.0; });
    CHECK_FALSE(z.relative);
    CHECK(z.value == doctest::Approx(0.5));
    std::vector<double> cells(m.element_count());
    for (int e2 = 0; e2 < m.element_count(); ++e2) cells[e2] = 2.0;
    CHECK(l2_error_cell(m, cells, [](Vec2) { return 2.0; }).value == 0.0);
}

TEST_CASE("nodal interpolation error converges at second order") {
    auto f = [](Vec2 x) { return std::sin(M_PI * x.x); };
    double prev = 0.0;
    for (int n : {16, 32, 64}) {
        const Mesh m = build_structured_grid(n, 1, 1.0, 1.0);
        std::vector<double> v(m.node_count());
        for (int k = 0; k < m.node_count(); ++k) v[k] = f(m.nodes[k]);
        const double e = l2_error_nodal(m, v, f).value;
        if (prev > 0.0) CHECK(prev / e == doctest::Approx(4.0).epsilon(0.02));
        prev = e;
    }
}
