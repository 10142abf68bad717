// Acceptance checks: one PASS/FAIL line per criterion, with the measured
// quantities. Exit status is nonzero if any check fails, except checks listed
// as known failures (their assertion contradicts the model as specified).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "poroflow/scenarios.hpp"

using namespace poroflow;

namespace {

int unexpected_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail, bool known_failure = false) {
    std::printf("%s criterion %s: %s%s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str(),
                !pass && known_failure ? " [known failure]" : "");
    std::fflush(stdout);
    if (!pass && !known_failure) ++unexpected_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double max_err(const ManufacturedErrors& e) { return std::max({e.u, e.p, e.v, e.phi}); }

ScenarioConfig manufactured(CouplingScheme scheme, double tol, int nx = 200) {
    auto c = ScenarioConfig::defaults(ScenarioKind::manufactured);
    c.mesh.nx = nx;
    c.coupling.scheme = scheme;
    c.coupling.tol = tol;
    return c;
}

const std::vector<CouplingScheme> all_schemes = {CouplingScheme::fully_coupled, CouplingScheme::lockstep,
                                                 CouplingScheme::subcycle, CouplingScheme::jacobi};

// Fourth-order derivative by Richardson extrapolation of central differences.
template <class F>
double derivative(F f, double x, double h = 1e-3) {
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

double max_abs_diff(const FieldState& a, const FieldState& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i)
        d = std::max({d, std::abs(a.p[i] - b.p[i]), std::abs(a.u[i].x - b.u[i].x), std::abs(a.u[i].y - b.u[i].y)});
    for (std::size_t e = 0; e < a.phi.size(); ++e) d = std::max(d, std::abs(a.phi[e] - b.phi[e]));
    return d;
}

void criterion_1() {
    std::vector<FieldState> states;
    double worst = 0.0;
    bool all_converged = true;
    std::string detail;
    for (auto s : all_schemes) {
        const auto run = run_manufactured(manufactured(s, 1e-9));
        all_converged = all_converged && run.result.report.converged;
        worst = std::max(worst, max_err(run.errors));
        detail += to_string(s) + " " + fmt(max_err(run.errors)) + ", ";
        states.push_back(run.result.state);
    }
    double agree = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
        for (std::size_t j = 0; j < states.size(); ++j)
            if (i != j) agree = std::max(agree, converged(states[j], states[i], 0.0).residual);
    report("1", all_converged && worst < 1e-3 && agree <= 1e-7,
           "manufactured max L2 error per scheme: " + detail + "max pairwise relative difference " + fmt(agree) +
               " (limits 1e-3, 1e-7)");
}

void criterion_2() {
    std::vector<ManufacturedErrors> errs;
    for (int nx : {50, 100, 200, 400}) errs.push_back(run_manufactured(manufactured(CouplingScheme::lockstep, 1e-12, nx)).errors);
    double ru = 1e9, rp = 1e9;
    for (std::size_t i = 1; i < errs.size(); ++i) {
        ru = std::min(ru, std::log2(errs[i - 1].u / errs[i].u));
        rp = std::min(rp, std::log2(errs[i - 1].p / errs[i].p));
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "min observed rate u %.4f, p %.4f over 50/100/200/400 (limit 1.9)", ru, rp);
    report("2", ru >= 1.9 && rp >= 1.9, buf);
}

void criterion_3() {
    const std::vector<double> tols = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
    std::vector<int> gs_iters, j_iters;
    bool monotone = true;
    std::string errs_text;
    for (auto scheme : {CouplingScheme::lockstep, CouplingScheme::jacobi}) {
        std::vector<double> errs;
        for (double tol : tols) {
            const auto run = run_manufactured(manufactured(scheme, tol));
            errs.push_back(max_err(run.errors));
            (scheme == CouplingScheme::lockstep ? gs_iters : j_iters).push_back(run.result.report.outer_iterations);
        }
        // Above the plateau the error may not grow as the tolerance tightens.
        // The plateau starts once tol is below 1% of the attained error, so the
        // iteration error (of order tol) cannot move it by more than 1%; there
        // it may not drop by more than 1%.
        const double floor = errs.back();
        for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
            if (tols[k + 1] >= floor / 100.0) monotone = monotone && errs[k + 1] <= errs[k];
            else monotone = monotone && errs[k + 1] >= 0.99 * errs[k];
        }
        errs_text += to_string(scheme) + " errors " + fmt(errs.front()) + ".." + fmt(errs.back()) + "; ";
    }
    bool ordered = true;
    std::string counts = "iterations lockstep/jacobi:";
    for (std::size_t k = 0; k < tols.size(); ++k) {
        ordered = ordered && j_iters[k] >= gs_iters[k];
        counts += " " + std::to_string(gs_iters[k]) + "/" + std::to_string(j_iters[k]);
    }
    report("3a", monotone, errs_text + "non-increasing until the discretisation plateau");
    report("3b", ordered, counts + " (jacobi >= lockstep)");
}

void criterion_4() {
    auto check = [](const ScenarioSetup& s, const std::string& name, std::string& detail) {
        auto cfg = s.coupling;
        cfg.tol = 1e-9;
        cfg.scheme = CouplingScheme::lockstep;
        const auto a = solve_coupled(s.problem, s.initial, cfg);
        cfg.scheme = CouplingScheme::subcycle;
        cfg.n_subcycles = 1;
        const auto b = solve_coupled(s.problem, s.initial, cfg);
        const double d = max_abs_diff(a.state, b.state);
        detail += name + " max difference " + fmt(d) + ", iterations " + std::to_string(a.report.outer_iterations) +
                  "/" + std::to_string(b.report.outer_iterations) + "; ";
        return a.report.converged && d <= 1e-12 && a.report.outer_iterations == b.report.outer_iterations;
    };
    std::string detail;
    const bool ms = check(build_manufactured(manufactured(CouplingScheme::lockstep, 1e-9)), "manufactured", detail);
    const bool sb = check(build_subsidence(ScenarioConfig::defaults(ScenarioKind::subsidence), false), "subsidence", detail);
    report("4", ms && sb, detail + "subcycle(n=1) vs lockstep");
}

void criterion_5() {
    const auto run = run_terzaghi(ScenarioConfig::defaults(ScenarioKind::terzaghi));
    report("5", run.result.report.converged && run.relative_linf <= 0.03 && run.max_richardson <= 1e-6,
           "Terzaghi top u_y relative Linf " + fmt(run.relative_linf) + " (limit 3e-2), oracle Richardson " +
               fmt(run.max_richardson) + " (limit 1e-6), " + std::to_string(run.times.size()) + " steps");
}

void criterion_6() {
    const auto run = run_subsidence(ScenarioConfig::defaults(ScenarioKind::subsidence));
    bool ordered = run.frozen.has_value() && !run.subsidence_coupled.empty();
    for (std::size_t k = 0; ordered && k < run.subsidence_coupled.size(); ++k)
        ordered = run.subsidence_coupled[k] > run.subsidence_frozen[k];
    const double c = run.subsidence_coupled.back();
    const double f = run.subsidence_frozen.back();
    report("6", ordered && c - f > 0.0,
           "final subsidence coupled " + fmt(c) + " > frozen " + fmt(f) + ", under-prediction by frozen porosity " +
               fmt(100.0 * (c - f) / c) + "% (informative)");
}

void criterion_7() {
    auto homogeneous = ScenarioConfig::defaults(ScenarioKind::five_spot);
    homogeneous.heterogeneity.mode = HeterogeneityMode::none;
    const auto h = run_five_spot(homogeneous, false);
    report("7a", h.min_sn >= -1e-10 && h.max_sn <= 1.0 + 1e-10 && h.clamped == 0,
           "homogeneous five-spot S_n range [" + fmt(h.min_sn) + ", " + fmt(h.max_sn) + "], clamped " +
               std::to_string(h.clamped));
    report("7b", h.max_balance_error <= 1e-10, "worst per-step relative phase balance error " + fmt(h.max_balance_error));
    report("7c", h.max_asymmetry <= 1e-10, "max |S(x,y) - S(y,x)| " + fmt(h.max_asymmetry));

    const auto cfg = ScenarioConfig::defaults(ScenarioKind::five_spot);
    const auto damaged = run_five_spot(cfg, false);
    const auto constant = run_five_spot(cfg, true);
    const bool found = damaged.breakthrough_time > 0.0 && constant.breakthrough_time > 0.0;
    const double rel = found ? std::abs(damaged.breakthrough_time - constant.breakthrough_time) / constant.breakthrough_time : 0.0;
    report("7d", found && rel > 0.01,
           "breakthrough damage " + fmt(damaged.breakthrough_time) + " vs constant permeability " +
               fmt(constant.breakthrough_time) + ", relative difference " + fmt(rel) + " (limit > 1e-2)");
}

void criterion_8() {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto tensor = [&] { return Tensor2{u(rng), u(rng), u(rng), u(rng)}; };
    std::vector<std::string> failed;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    // mesh
    {
        const Mesh m = build_structured_grid(7, 5, 2.0, 0.5);
        double worst = 0.0;
        for (int e = 0; e < m.element_count(); ++e) {
            for (const auto& qp : QuadratureRule::standard().points) {
                const auto s = shape_eval(m.element_coords(e), qp.point, e);
                double sum = -1.0;
                Vec2 g{};
                for (int a = 0; a < 4; ++a) {
                    sum += s.values[a];
                    g += s.gradients[a];
                }
                worst = std::max({worst, std::abs(sum), std::abs(g.x), std::abs(g.y)});
            }
        }
        need(worst <= 1e-12, "partition of unity");
        need(std::abs(integrate_area(m) - 1.0) <= 1e-10, "quadrature area");
    }
    // constitutive
    {
        const SolidParams sp{1.3, 0.7, 1.0};
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const Tensor2 e1 = linearized_strain(tensor()), e2 = linearized_strain(tensor());
            const Tensor2 d = solid_effective_stress(2.0 * e1 - 0.5 * e2, sp) -
                              (2.0 * solid_effective_stress(e1, sp) - 0.5 * solid_effective_stress(e2, sp));
            worst = std::max({worst, std::abs(d.xx), std::abs(d.xy), std::abs(d.yx), std::abs(d.yy)});
        }
        need(worst <= 1e-12, "stress linearity");
        const FluidParams f{2.0, 0.4, 1.0, 1.0};
        const double l0 = std::log(barus_viscosity(-1.0, f)), l1 = std::log(barus_viscosity(0.5, f)),
                     l2 = std::log(barus_viscosity(2.0, f));
        need(barus_viscosity(0.0, f) == 2.0 && std::abs((l2 - l1) - (l1 - l0)) <= 1e-12, "Barus");
        bool tri = true;
        for (int k = 0; k < 200; ++k) {
            const Tensor2 a = tensor(), b = tensor();
            tri = tri && trace_norm(a + b) <= trace_norm(a) + trace_norm(b) + 1e-14 &&
                  std::abs(trace_norm(-3.0 * a) - 3.0 * trace_norm(a)) <= 1e-13 * (1.0 + trace_norm(a));
        }
        need(tri, "trace norm");
        PermeabilityModel pm{PermeabilityKind::damage, 1.0, 2.0, Tensor2::diag(-1.0, -2.0)};
        double prev = 0.0;
        bool mono = true;
        for (int k = 0; k <= 50; ++k) {
            const double a = damage_permeability(pm, pm.insitu_stress + Tensor2{0.1 * k, 0.02 * k, 0.02 * k, -0.05 * k});
            mono = mono && a >= prev;
            prev = a;
        }
        need(mono, "damage monotone");
        // each porosity law against its own closed-form slope
        const double phi0 = 0.25, h = 1e-6;
        auto slope = [&](PorosityKind k) {
            const PorosityModel m{k, phi0};
            return (porosity_update(m, Tensor2::diag(h, 0.0), 0.0) - porosity_update(m, Tensor2::diag(-h, 0.0), 0.0)) / (2.0 * h);
        };
        need(std::abs(slope(PorosityKind::rational) + phi0 * (1.0 - phi0)) <= 1e-8 &&
                 std::abs(slope(PorosityKind::exponential) - (1.0 - phi0)) <= 1e-8,
             "porosity slopes");
        const Mesh m = build_structured_grid(3, 3, 1.0, 1.0);
        std::vector<double> alpha(m.element_count());
        std::vector<Vec2> vf(m.element_count()), vs(m.element_count());
        for (int e = 0; e < m.element_count(); ++e) {
            alpha[e] = 0.5 + u(rng) * 0.25;
            vf[e] = {u(rng), u(rng)};
            vs[e] = {u(rng), u(rng)};
        }
        const auto a = assemble_interaction(m, alpha, vf, vs, Constituent::fluid);
        const auto b = assemble_interaction(m, alpha, vf, vs, Constituent::solid);
        bool third = true;
        for (std::size_t i = 0; i < a.size(); ++i) third = third && a[i] + b[i] == 0.0;
        need(third, "drag cancellation");
    }
    // linalg
    {
        bool agree = true, monotone = true;
        for (int n : {10, 25, 50}) {
            std::vector<std::vector<double>> b(n, std::vector<double>(n));
            for (auto& row : b)
                for (auto& x : row) x = u(rng);
            std::vector<Triplet> t;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = i == j ? 0.1 * n : 0.0;
                    for (int k = 0; k < n; ++k) s += b[k][i] * b[k][j];
                    t.push_back({i, j, s});
                }
            const auto a = SparseMatrix::from_triplets(n, t);
            Vector rhs(n);
            for (auto& x : rhs) x = u(rng);
            const auto d = solve(a, rhs, {SolveMethod::direct});
            const auto c = solve(a, rhs, {SolveMethod::cg, 1e-13});
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                num += (c.x[i] - d.x[i]) * (c.x[i] - d.x[i]);
                den += d.x[i] * d.x[i];
            }
            agree = agree && c.report.converged && std::sqrt(num / den) <= 1e-8;
            const auto& e = c.report.energy_history;
            for (std::size_t k = 1; k < e.size(); ++k) monotone = monotone && e[k] <= e[k - 1] + 1e-13 * std::abs(e.back());
        }
        need(agree, "cg vs direct");
        need(monotone, "pcg monotone (A-norm error)");
    }
    // verification
    {
        const ManufacturedConstants mc;
        double darcy = 0.0, mass = 0.0, solid = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double x = i / 100.0;
            const auto f = ms_exact(x, mc);
            const double dp = derivative([&](double s) { return ms_exact(s, mc).p; }, x);
            const double dflux = derivative([&](double s) { const auto g = ms_exact(s, mc); return g.phi * g.v; }, x);
            const double dT = derivative([&](double s) { return ms_exact(s, mc).stress; }, x);
            const auto bf = ms_body_forces(x, mc);
            darcy = std::max(darcy, std::abs(mc.alpha * f.v + dp));
            mass = std::max(mass, std::abs(dflux));
            solid = std::max(solid, std::abs(dT - dp + mc.rho_f * bf.fluid + mc.rho_s * bf.solid +
                                             ms_coupling_compensation(x, mc)));
        }
        need(darcy <= 1e-10 && mass <= 1e-10, "manufactured flow equations");
        need(solid <= 1e-10, "manufactured solid balance");
        double rich = 0.0;
        for (double t : {0.02, 0.05, 0.1, 0.2}) rich = std::max(rich, terzaghi_analytic(t, TerzaghiParams{}).richardson);
        need(rich <= 1e-6, "Terzaghi quadrature");
        double bessel = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double z = 0.1 * k;
            const double s = bessel_i0_series_branch(z);
            bessel = std::max(bessel, std::abs(bessel_i0(z) - s) / s);
        }
        need(bessel <= 1e-8, "Bessel series");
    }
    std::string detail = "property suite (partition of unity, linearity, monotonicity, drag cancellation, Bessel, CG): ";
    if (failed.empty()) detail += "all hold";
    for (const auto& f : failed) detail += f + "; ";
    report("8", failed.empty(), detail);

    // The literal slope-agreement assertion compares -phi0(1-phi0) with
    // (1-phi0); these differ for every admissible phi0.
    const double phi0 = 0.25, h = 1e-6;
    auto slope = [&](PorosityKind k) {
        const PorosityModel m{k, phi0};
        return (porosity_update(m, Tensor2::diag(h, 0.0), 0.0) - porosity_update(m, Tensor2::diag(-h, 0.0), 0.0)) / (2.0 * h);
    };
    const double sr = slope(PorosityKind::rational), se = slope(PorosityKind::exponential);
    report("8-porosity-slope-agreement", std::abs(sr - se) <= 1e-8,
           "rational slope " + fmt(sr) + " vs exponential slope " + fmt(se) +
               "; the two laws have opposite-signed slopes at zero strain",
           true);
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    auto timed = [](const char* name, void (*f)()) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            f();
        } catch (const std::exception& e) {
            report(name, false, std::string("threw: ") + e.what());
        }
        std::printf("  (%.1f s)\n", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
    timed("1", criterion_1);
    timed("2", criterion_2);
    timed("3", criterion_3);
    timed("4", criterion_4);
    timed("5", criterion_5);
    timed("6", criterion_6);
    timed("7", criterion_7);
    timed("8", criterion_8);
    std::printf("%d unexpected failure(s), %.1f s total\n", unexpected_failures,
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return unexpected_failures == 0 ? 0 : 1;
}
