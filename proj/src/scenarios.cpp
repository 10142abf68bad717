#include "poroflow/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace poroflow {

using std::numbers::pi;

std::vector<double> gen_heterogeneous_field(const Mesh& mesh, HeterogeneityMode mode,
                                            double amplitude, unsigned /*seed*/, double mean) {
    if (!(amplitude >= 0.0 && amplitude < 1.0))
        throw std::invalid_argument("heterogeneity amplitude must lie in [0,1)");
    std::vector<double> out(mesh.element_count(), mean);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Vec2 c = mesh.element_center(e);
        double s = 0.0;
        if (mode == HeterogeneityMode::layered) {
            const double w = std::sin(2.0 * pi * c.y / mesh.ly * 3.0);
            s = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        } else if (mode == HeterogeneityMode::harmonic) {
            s = std::sin(2.0 * pi * c.x / mesh.lx) * std::sin(2.0 * pi * c.y / mesh.ly);
        }
        out[e] = mean * (1.0 + amplitude * s);
    }
    return out;
}

namespace {

Materials base_materials(const ScenarioConfig& c) {
    Materials m;
    m.solid = c.solid;
    m.fluid = c.fluid;
    m.porosity = c.porosity;
    m.permeability = c.permeability;
    m.two_phase = c.two_phase;
    return m;
}

PhysicsOptions base_options(const ScenarioConfig& c) {
    PhysicsOptions o;
    o.linear = c.linear;
    return o;
}

double top_centre_uy(const Mesh& mesh, const FieldState& st) {
    const auto& top = mesh.boundary_nodes(Side::top);
    if (mesh.nx % 2 == 0) return st.u[top[mesh.nx / 2]].y;
    double s = 0.0;
    for (int n : top) s += st.u[n].y;
    return mesh.nx == 1 ? s / static_cast<double>(top.size())
                        : 0.5 * (st.u[top[mesh.nx / 2]].y + st.u[top[mesh.nx / 2 + 1]].y);
}

void add_wells(const ScenarioConfig& c, const Mesh& mesh, BoundaryConditions& bcs) {
    for (const auto& w : c.wells) {
        const int node = mesh.nearest_node({w.x, w.y});
        if (w.control == WellControl::pressure) {
            bcs.set_pressure(node, w.value);
            if (w.role == WellRole::injector) bcs.injectors.push_back(node);
        } else {
            bcs.rate_wells.push_back({node, w.value});
        }
    }
}

}  // namespace

TerzaghiParams terzaghi_params(const ScenarioConfig& c) {
    TerzaghiParams t;
    t.n_f = c.porosity.phi0;
    t.n_s = 1.0 - c.porosity.phi0;
    t.rho_f = c.fluid.rho;
    t.rho_s = c.solid.rho;
    t.lambda = c.solid.lambda;
    t.mu = c.solid.mu;
    t.k_c = c.terzaghi.k_c;
    return t;
}

ScenarioSetup build_manufactured(const ScenarioConfig& c) {
    const auto mc = c.manufactured.constants;
    ScenarioSetup s;
    s.problem.mesh = build_structured_grid(c.mesh.nx, c.mesh.ny, c.mesh.lx, c.mesh.ly);
    s.problem.materials = base_materials(c);
    s.problem.materials.solid_body_force = [mc](Vec2 x) { return Vec2{ms_body_forces(x.x, mc).solid, 0.0}; };
    s.problem.materials.fluid_body_force = [mc](Vec2 x) { return Vec2{ms_body_forces(x.x, mc).fluid, 0.0}; };
    s.problem.materials.solid_extra_load = [mc](Vec2 x) { return Vec2{ms_coupling_compensation(x.x, mc), 0.0}; };
    s.problem.options = base_options(c);
    s.problem.options.storage = false;
    const auto& mesh = s.problem.mesh;
    auto& bcs = s.problem.bcs;
    const double x_left = 0.0;
    const double x_right = mesh.lx;
    for (int n : mesh.boundary_nodes(Side::left)) bcs.set_pressure(n, ms_exact(x_left, mc).p);
    for (int n : mesh.boundary_nodes(Side::right)) bcs.set_pressure(n, ms_exact(x_right, mc).p);
    for (int n : mesh.boundary_nodes(Side::left)) bcs.set_displacement(n, 0, ms_exact(x_left, mc).u);
    for (int n : mesh.boundary_nodes(Side::right)) bcs.set_displacement(n, 0, ms_exact(x_right, mc).u);
    for (int n = 0; n < mesh.node_count(); ++n) bcs.set_displacement(n, 1, 0.0);
    s.initial = FieldState::initial(mesh, c.porosity.phi0, false);
    impose_dirichlet(bcs, s.initial);
    s.coupling = c.coupling;
    return s;
}

ScenarioSetup build_terzaghi(const ScenarioConfig& c) {
    ScenarioSetup s;
    s.problem.mesh = build_structured_grid(c.mesh.nx, c.mesh.ny, c.mesh.lx, c.mesh.ly);
    s.problem.materials = base_materials(c);
    // The column consolidates with coefficient (lambda + 2 mu) / k_c when
    // alpha = phi0 k_c / (1 - phi0), matching the oracle's 1/b.
    const double phi0 = c.porosity.phi0;
    const double alpha = phi0 * c.terzaghi.k_c / (1.0 - phi0);
    s.problem.materials.fluid.k = c.fluid.mu0 / alpha;
    s.problem.options = base_options(c);
    s.problem.options.storage = true;
    const auto& mesh = s.problem.mesh;
    auto& bcs = s.problem.bcs;
    bcs.drain(mesh, Side::top, 0.0);
    bcs.fix_component(mesh, Side::left, 0);
    bcs.fix_component(mesh, Side::right, 0);
    bcs.fix_component(mesh, Side::bottom, 1);
    bcs.tractions.push_back({Side::top, [](double t) { return Vec2{0.0, -terzaghi_forcing(t)}; }});
    s.initial = FieldState::initial(mesh, phi0, false);
    impose_dirichlet(bcs, s.initial);
    s.coupling = c.coupling;
    return s;
}

ScenarioSetup build_subsidence(const ScenarioConfig& c, bool frozen) {
    ScenarioSetup s;
    s.problem.mesh = build_structured_grid(c.mesh.nx, c.mesh.ny, c.mesh.lx, c.mesh.ly);
    s.problem.materials = base_materials(c);
    if (frozen) s.problem.materials.porosity.kind = PorosityKind::frozen;
    s.problem.options = base_options(c);
    s.problem.options.storage = false;
    const auto& mesh = s.problem.mesh;
    auto& bcs = s.problem.bcs;
    bcs.drain(mesh, Side::top, 0.0);
    bcs.fix_component(mesh, Side::left, 0);
    bcs.fix_component(mesh, Side::right, 0);
    bcs.fix_component(mesh, Side::bottom, 1);
    // Wells start at ambient and are ramped linearly to their values at t_end.
    std::vector<std::pair<int, double>> pressure_wells;
    std::vector<RateWell> rate_wells;
    for (const auto& w : c.wells) {
        const int node = mesh.nearest_node({w.x, w.y});
        if (w.control == WellControl::pressure) {
            bcs.set_pressure(node, 0.0);
            pressure_wells.emplace_back(node, w.value);
        } else {
            bcs.rate_wells.push_back({node, 0.0});
            rate_wells.push_back({node, w.value});
        }
    }
    const double t_end = c.coupling.t_end;
    bcs.schedule = [pressure_wells, rate_wells, t_end](double t, BoundaryConditions& b) {
        const double ramp = std::min(1.0, t / t_end);
        for (const auto& [node, value] : pressure_wells) b.pressure[node] = ramp * value;
        for (std::size_t i = 0; i < rate_wells.size(); ++i) b.rate_wells[i].rate = ramp * rate_wells[i].rate;
    };
    s.initial = FieldState::initial(mesh, c.porosity.phi0, false);
    impose_dirichlet(bcs, s.initial);
    s.coupling = c.coupling;
    return s;
}

ScenarioSetup build_five_spot(const ScenarioConfig& c, bool constant_permeability) {
    ScenarioSetup s;
    s.problem.mesh = build_structured_grid(c.mesh.nx, c.mesh.ny, c.mesh.lx, c.mesh.ly);
    const auto& mesh = s.problem.mesh;
    s.problem.materials = base_materials(c);
    if (constant_permeability) s.problem.materials.permeability.kind = PermeabilityKind::constant;
    s.problem.materials.lambda_field = gen_heterogeneous_field(
        mesh, c.heterogeneity.mode, c.heterogeneity.amplitude, c.heterogeneity.seed, c.solid.lambda);
    s.problem.options = base_options(c);
    s.problem.options.two_phase = true;
    s.problem.options.storage = c.porosity.kind != PorosityKind::frozen;
    auto& bcs = s.problem.bcs;
    bcs.fix_component(mesh, Side::left, 0);
    bcs.fix_component(mesh, Side::right, 0);
    bcs.fix_component(mesh, Side::bottom, 1);
    bcs.fix_component(mesh, Side::top, 1);
    add_wells(c, mesh, bcs);
    s.initial = FieldState::initial(mesh, c.porosity.phi0, true, 0.0, c.five_spot.initial_sn);
    impose_dirichlet(bcs, s.initial);
    s.coupling = c.coupling;
    return s;
}

ManufacturedErrors manufactured_errors(const Mesh& mesh, const FieldState& st,
                                       const ManufacturedConstants& mc) {
    std::vector<double> ux(st.u.size()), vx(st.v.size());
    for (std::size_t i = 0; i < ux.size(); ++i) ux[i] = st.u[i].x;
    for (std::size_t e = 0; e < vx.size(); ++e) vx[e] = st.v[e].x;
    ManufacturedErrors err;
    err.u = l2_error_nodal(mesh, ux, [&](Vec2 x) { return ms_exact(x.x, mc).u; }).value;
    err.p = l2_error_nodal(mesh, st.p, [&](Vec2 x) { return ms_exact(x.x, mc).p; }).value;
    err.v = l2_error_cell(mesh, vx, [&](Vec2 x) { return ms_exact(x.x, mc).v; }).value;
    err.phi = l2_error_cell(mesh, st.phi, [&](Vec2 x) { return ms_exact(x.x, mc).phi; }).value;
    return err;
}

ManufacturedRun run_manufactured(const ScenarioConfig& c, const StepObserver& observer) {
    const auto s = build_manufactured(c);
    ManufacturedRun run;
    run.result = solve_coupled(s.problem, s.initial, s.coupling, observer);
    run.errors = manufactured_errors(s.problem.mesh, run.result.state, c.manufactured.constants);
    return run;
}

TerzaghiRun run_terzaghi(const ScenarioConfig& c, const StepObserver& observer) {
    const auto s = build_terzaghi(c);
    TerzaghiRun run;
    const auto& mesh = s.problem.mesh;
    run.result = solve_coupled(s.problem, s.initial, s.coupling,
                               [&](const FieldState& st, const StepReport& sr) {
                                   run.times.push_back(st.time);
                                   run.u_numeric.push_back(top_centre_uy(mesh, st));
                                   if (observer) observer(st, sr);
                               });
    const auto tp = terzaghi_params(c);
    double max_err = 0.0;
    double max_ref = 0.0;
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        const auto r = terzaghi_analytic(run.times[i], tp);
        run.u_analytic.push_back(r.u_y);
        run.max_richardson = std::max(run.max_richardson, r.richardson);
        max_err = std::max(max_err, std::abs(run.u_numeric[i] - r.u_y));
        max_ref = std::max(max_ref, std::abs(r.u_y));
    }
    run.relative_linf = max_ref > 0.0 ? max_err / max_ref : max_err;
    return run;
}

SubsidenceRun run_subsidence(const ScenarioConfig& c, const StepObserver& observer) {
    SubsidenceRun run;
    auto one = [&](bool frozen, std::vector<double>& series, std::vector<double>& profile) {
        const auto s = build_subsidence(c, frozen);
        const auto& mesh = s.problem.mesh;
        const bool record_times = !frozen;
        auto result = solve_coupled(s.problem, s.initial, s.coupling,
                                    [&](const FieldState& st, const StepReport& sr) {
                                        if (record_times) run.times.push_back(st.time);
                                        series.push_back(-top_centre_uy(mesh, st));
                                        if (observer) observer(st, sr);
                                    });
        profile.clear();
        run.profile_x.clear();
        for (int n : mesh.boundary_nodes(Side::top)) {
            run.profile_x.push_back(mesh.nodes[n].x);
            profile.push_back(result.state.u[n].y);
        }
        if (!frozen) {
            for (double phi : result.state.phi)
                run.min_porosity_ratio = std::min(run.min_porosity_ratio, phi / c.porosity.phi0);
        }
        return result;
    };
    run.coupled = one(false, run.subsidence_coupled, run.profile_coupled);
    if (c.subsidence.compare_frozen) run.frozen = one(true, run.subsidence_frozen, run.profile_frozen);
    return run;
}

FiveSpotRun run_five_spot(const ScenarioConfig& c, bool constant_permeability,
                          const StepObserver& observer) {
    const auto s = build_five_spot(c, constant_permeability);
    const auto& mesh = s.problem.mesh;
    std::vector<int> producers;
    for (const auto& w : c.wells) {
        if (w.role == WellRole::producer) producers.push_back(mesh.nearest_node({w.x, w.y}));
    }
    const bool square = mesh.nx == mesh.ny && mesh.lx == mesh.ly;
    FiveSpotRun run;
    double prev_t = s.initial.time;
    double prev_sw = 0.0;
    for (int n : producers) prev_sw = std::max(prev_sw, 1.0 - s.initial.s_n[n]);
    const double threshold = c.five_spot.breakthrough_threshold;
    run.result = solve_coupled(s.problem, s.initial, s.coupling,
                               [&](const FieldState& st, const StepReport& sr) {
                                   double sw = 0.0;
                                   for (int n : producers) sw = std::max(sw, 1.0 - st.s_n[n]);
                                   if (run.breakthrough_time < 0.0 && sw >= threshold) {
                                       const double f = (threshold - prev_sw) / (sw - prev_sw);
                                       run.breakthrough_time = prev_t + f * (st.time - prev_t);
                                   }
                                   prev_t = st.time;
                                   prev_sw = sw;
                                   run.times.push_back(st.time);
                                   run.producer_sw.push_back(sw);
                                   run.balance_error.push_back(sr.saturation.max_balance_error);
                                   run.max_balance_error = std::max(run.max_balance_error, sr.saturation.max_balance_error);
                                   run.clamped += sr.saturation.clamped;
                                   for (double v : st.s_n) {
                                       run.min_sn = std::min(run.min_sn, v);
                                       run.max_sn = std::max(run.max_sn, v);
                                   }
                                   if (square) {
                                       for (int j = 0; j <= mesh.ny; ++j)
                                           for (int i = 0; i <= mesh.nx; ++i)
                                               run.max_asymmetry = std::max(
                                                   run.max_asymmetry,
                                                   std::abs(st.s_n[mesh.node_index(i, j)] -
                                                            st.s_n[mesh.node_index(j, i)]));
                                   }
                                   if (observer) observer(st, sr);
                               });
    return run;
}

// --- run_scenario ------------------------------------------------------------

namespace {

std::string join(const std::string& dir, const std::string& name) { return dir + "/" + name; }

TimeseriesRow base_row(const StepReport& sr, const CouplingConfig& cc) {
    TimeseriesRow r;
    r.time = sr.time;
    r.scheme = to_string(cc.scheme);
    r.tol = cc.tol;
    r.outer_iters = sr.report.outer_iterations;
    r.flow_solves = sr.report.flow_solves;
    r.solid_solves = sr.report.solid_solves;
    r.residual = sr.report.history.empty() ? 0.0 : sr.report.history.back();
    return r;
}

VtkExtras stress_extras(const Problem& problem, const FieldState& st) {
    VtkExtras x;
    std::vector<double> t;
    for (const auto& s : compute_stress(problem, st)) t.push_back(frobenius(s));
    x.cell_scalars.emplace_back("stress_norm", std::move(t));
    return x;
}

class NotConverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require_converged(const CouplingResult& r, const std::string& what) {
    if (!r.report.converged) {
        const double t = r.steps.empty() ? 0.0 : r.steps.back().time;
        throw NotConverged(what + ": coupling did not converge at t = " + format_number(t) + " (" +
                           r.report.failure + ")");
    }
}

struct Writer {
    std::string dir;
    std::vector<std::string> files;

    std::string path(const std::string& name) {
        files.push_back(name);
        return join(dir, name);
    }
};

void snapshot(Writer& w, const Problem& problem, const FieldState& st, const std::string& stem, int step,
              int interval) {
    if (interval <= 0 || step % interval != 0) return;
    std::ostringstream name;
    name << stem << "_" << std::setw(5) << std::setfill('0') << step << ".vtk";
    write_vtk(problem.mesh, st, w.path(name.str()), stress_extras(problem, st));
}

void run_manufactured_outputs(const ScenarioConfig& c, Writer& w, RunSummary& sum) {
    const auto s = build_manufactured(c);
    const auto result = solve_coupled(s.problem, s.initial, s.coupling);
    const auto err = manufactured_errors(s.problem.mesh, result.state, c.manufactured.constants);
    write_vtk(s.problem.mesh, result.state, w.path("fields.vtk"), stress_extras(s.problem, result.state));
    Timeseries ts;
    ts.extra_columns = {"error_v", "error_phi"};
    for (const auto& sr : result.steps) {
        auto row = base_row(sr, s.coupling);
        row.error_u = err.u;
        row.error_p = err.p;
        row.extra = {err.v, err.phi};
        ts.rows.push_back(row);
    }
    write_timeseries(ts, w.path("timeseries.csv"));
    {
        const auto p = w.path("errors.csv");
        std::ofstream out(p);
        if (!out) throw OutputError(p, "cannot open for writing");
        out << "field,relative_l2_error\n"
            << "u," << format_number(err.u) << "\np," << format_number(err.p) << "\nv,"
            << format_number(err.v) << "\nphi," << format_number(err.phi) << "\n";
        if (!out) throw OutputError(p, "write failed");
    }
    sum.results = {{"error_u", format_number(err.u)},
                   {"error_p", format_number(err.p)},
                   {"error_v", format_number(err.v)},
                   {"error_phi", format_number(err.phi)},
                   {"outer_iterations", std::to_string(result.report.outer_iterations)},
                   {"flow_solves", std::to_string(result.report.flow_solves)},
                   {"solid_solves", std::to_string(result.report.solid_solves)}};
    require_converged(result, "manufactured");
}

void run_terzaghi_outputs(const ScenarioConfig& c, Writer& w, RunSummary& sum) {
    const auto s = build_terzaghi(c);
    std::vector<StepReport> reports;
    const auto run = run_terzaghi(c, [&](const FieldState& st, const StepReport& sr) {
        reports.push_back(sr);
        snapshot(w, s.problem, st, "terzaghi", sr.step, c.output.vtk_interval);
    });
    write_vtk(s.problem.mesh, run.result.state, w.path("fields.vtk"), stress_extras(s.problem, run.result.state));
    Timeseries ts;
    ts.extra_columns = {"u_y", "u_y_analytic"};
    for (std::size_t i = 0; i < reports.size(); ++i) {
        auto row = base_row(reports[i], s.coupling);
        row.error_u = std::abs(run.u_numeric[i] - run.u_analytic[i]);
        row.extra = {run.u_numeric[i], run.u_analytic[i]};
        ts.rows.push_back(row);
    }
    write_timeseries(ts, w.path("timeseries.csv"));
    sum.results = {{"relative_linf_error", format_number(run.relative_linf)},
                   {"oracle_max_richardson", format_number(run.max_richardson)},
                   {"steps", std::to_string(run.result.steps.size())},
                   {"outer_iterations", std::to_string(run.result.report.outer_iterations)},
                   {"strain_warnings", std::to_string(run.result.strain_warnings)}};
    require_converged(run.result, "terzaghi");
}

void run_subsidence_outputs(const ScenarioConfig& c, Writer& w, RunSummary& sum) {
    const auto s = build_subsidence(c, false);
    std::vector<StepReport> reports;
    const auto run = run_subsidence(c, [&](const FieldState&, const StepReport& sr) { reports.push_back(sr); });
    write_vtk(s.problem.mesh, run.coupled.state, w.path("fields_coupled.vtk"),
              stress_extras(s.problem, run.coupled.state));
    if (run.frozen) {
        const auto sf = build_subsidence(c, true);
        write_vtk(sf.problem.mesh, run.frozen->state, w.path("fields_frozen.vtk"),
                  stress_extras(sf.problem, run.frozen->state));
    }
    Timeseries ts;
    ts.extra_columns = {"porosity_coupled", "subsidence"};
    const std::size_t nc = run.subsidence_coupled.size();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const bool coupled = i < nc;
        auto row = base_row(reports[i], s.coupling);
        row.extra = {coupled ? 1.0 : 0.0,
                     coupled ? run.subsidence_coupled[i] : run.subsidence_frozen[i - nc]};
        ts.rows.push_back(row);
    }
    write_timeseries(ts, w.path("timeseries.csv"));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        if (run.frozen && i < run.subsidence_frozen.size()) {
            const double f = run.subsidence_frozen[i];
            rows.push_back({run.times[i], run.subsidence_coupled[i], f,
                            f != 0.0 ? run.subsidence_coupled[i] / f : 0.0});
        } else {
            rows.push_back({run.times[i], run.subsidence_coupled[i]});
        }
    }
    write_table(run.frozen ? std::vector<std::string>{"time", "coupled", "frozen", "ratio"}
                           : std::vector<std::string>{"time", "coupled"},
                rows, w.path("subsidence.csv"));
    rows.clear();
    for (std::size_t i = 0; i < run.profile_x.size(); ++i) {
        if (run.frozen) rows.push_back({run.profile_x[i], run.profile_coupled[i], run.profile_frozen[i]});
        else rows.push_back({run.profile_x[i], run.profile_coupled[i]});
    }
    write_table(run.frozen ? std::vector<std::string>{"x", "u_y_coupled", "u_y_frozen"}
                           : std::vector<std::string>{"x", "u_y_coupled"},
                rows, w.path("profile.csv"));
    sum.results.emplace_back("subsidence_coupled", format_number(run.subsidence_coupled.back()));
    sum.results.emplace_back("min_porosity_ratio", format_number(run.min_porosity_ratio));
    if (run.frozen) {
        const double f = run.subsidence_frozen.back();
        sum.results.emplace_back("subsidence_frozen", format_number(f));
        sum.results.emplace_back("ratio_coupled_over_frozen", format_number(run.subsidence_coupled.back() / f));
        sum.results.emplace_back("frozen_underprediction_percent",
                                 format_number(100.0 * (1.0 - f / run.subsidence_coupled.back())));
    }
    require_converged(run.coupled, "subsidence (coupled porosity)");
    if (run.frozen) require_converged(*run.frozen, "subsidence (frozen porosity)");
}

void run_five_spot_outputs(const ScenarioConfig& c, Writer& w, RunSummary& sum) {
    const bool compare = c.five_spot.compare_constant && c.permeability.kind == PermeabilityKind::damage;
    Timeseries ts;
    ts.extra_columns = {"constant_permeability", "producer_sw", "balance_error", "clamped"};
    std::vector<std::vector<double>> bt;
    auto one = [&](bool constant) {
        const auto s = build_five_spot(c, constant);
        const std::string stem = constant ? "five_spot_constant" : "five_spot";
        std::vector<StepReport> reports;
        auto run = run_five_spot(c, constant, [&](const FieldState& st, const StepReport& sr) {
            reports.push_back(sr);
            snapshot(w, s.problem, st, stem, sr.step, c.output.vtk_interval);
        });
        write_vtk(s.problem.mesh, run.result.state, w.path(stem + "_final.vtk"),
                  stress_extras(s.problem, run.result.state));
        for (std::size_t i = 0; i < reports.size(); ++i) {
            auto row = base_row(reports[i], s.coupling);
            row.extra = {constant ? 1.0 : 0.0, run.producer_sw[i], run.balance_error[i],
                         static_cast<double>(reports[i].saturation.clamped)};
            ts.rows.push_back(row);
        }
        bt.push_back({constant ? 1.0 : 0.0, run.breakthrough_time});
        const std::string tag = constant ? "constant_" : "";
        sum.results.emplace_back(tag + "breakthrough_time", format_number(run.breakthrough_time));
        sum.results.emplace_back(tag + "max_balance_error", format_number(run.max_balance_error));
        sum.results.emplace_back(tag + "saturation_range",
                                 "[" + format_number(run.min_sn) + ", " + format_number(run.max_sn) + "]");
        sum.results.emplace_back(tag + "clamped", std::to_string(run.clamped));
        return run;
    };
    const auto main = one(c.permeability.kind == PermeabilityKind::constant);
    std::optional<FiveSpotRun> other;
    if (compare) other = one(true);
    write_timeseries(ts, w.path("timeseries.csv"));
    write_table({"constant_permeability", "breakthrough_time"}, bt, w.path("breakthrough.csv"));
    if (other && main.breakthrough_time > 0.0 && other->breakthrough_time > 0.0) {
        sum.results.emplace_back(
            "breakthrough_relative_difference",
            format_number(std::abs(main.breakthrough_time - other->breakthrough_time) / other->breakthrough_time));
    }
    require_converged(main.result, "five_spot");
    if (other) require_converged(other->result, "five_spot (constant permeability)");
}

}  // namespace

RunSummary run_scenario(ScenarioConfig config, const RunOptions& options) {
    RunSummary sum;
    Writer w;
    Manifest manifest;
    manifest.scenario = to_string(config.scenario);
    manifest.config_echo = config.source_text;
    try {
        if (options.scheme) config.coupling.scheme = *options.scheme;
        if (options.tol) config.coupling.tol = *options.tol;
        if (options.out_dir) config.output.directory = *options.out_dir;
        config.validate();
        manifest.resolved = describe(config);
        w.dir = config.output.directory;
        ensure_directory(w.dir);
        switch (config.scenario) {
            case ScenarioKind::manufactured: run_manufactured_outputs(config, w, sum); break;
            case ScenarioKind::terzaghi: run_terzaghi_outputs(config, w, sum); break;
            case ScenarioKind::subsidence: run_subsidence_outputs(config, w, sum); break;
            case ScenarioKind::five_spot: run_five_spot_outputs(config, w, sum); break;
        }
        sum.exit_code = exit_ok;
        sum.message = "ok";
    } catch (const ConfigError& e) {
        sum.exit_code = exit_config_error;
        sum.message = std::string("configuration error: ") + e.what();
    } catch (const OutputError& e) {
        sum.exit_code = exit_io_error;
        sum.message = std::string("I/O error: ") + e.what();
    } catch (const std::ios_base::failure& e) {
        sum.exit_code = exit_io_error;
        sum.message = std::string("I/O error: ") + e.what();
    } catch (const std::exception& e) {
        sum.exit_code = exit_not_converged;
        sum.message = std::string("solver failure: ") + e.what();
    }
    sum.files = w.files;
    if (!w.dir.empty() && sum.exit_code != exit_io_error) {
        manifest.status = sum.message;
        manifest.exit_code = sum.exit_code;
        manifest.files = w.files;
        manifest.results = sum.results;
        try {
            write_manifest(manifest, join(w.dir, "manifest.txt"));
            sum.files.push_back("manifest.txt");
        } catch (const OutputError& e) {
            sum.exit_code = exit_io_error;
            sum.message = std::string("I/O error: ") + e.what();
        }
    }
    return sum;
}

std::vector<double> parse_tolerance_range(const std::string& text) {
    std::vector<double> out;
    const auto dots = text.find("..");
    try {
        if (dots != std::string::npos) {
            const double a = std::stod(text.substr(0, dots));
            const double b = std::stod(text.substr(dots + 2));
            if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("tolerances must be positive");
            const int ea = static_cast<int>(std::lround(std::log10(a)));
            const int eb = static_cast<int>(std::lround(std::log10(b)));
            const int step = ea <= eb ? 1 : -1;
            for (int e = ea;; e += step) {
                out.push_back(std::pow(10.0, e));
                if (e == eb) break;
            }
        } else {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
        }
    } catch (const std::logic_error&) {
        throw ConfigError("invalid tolerance list '" + text + "'");
    }
    for (double t : out)
        if (!(t > 0.0)) throw ConfigError("tolerances must be positive");
    if (out.empty()) throw ConfigError("empty tolerance list");
    return out;
}

RunSummary run_sweep(ScenarioConfig config, const std::vector<double>& tols,
                     const std::optional<std::string>& out_dir) {
    RunSummary sum;
    try {
        if (out_dir) config.output.directory = *out_dir;
        config.validate();
        if (config.scenario != ScenarioKind::manufactured && config.scenario != ScenarioKind::terzaghi)
            throw ConfigError("sweep needs an oracle: use the manufactured or terzaghi scenario");
        ensure_directory(config.output.directory);
        Timeseries ts;
        ts.extra_columns = {"error_v", "error_phi"};
        for (const auto scheme : {CouplingScheme::lockstep, CouplingScheme::jacobi}) {
            for (double tol : tols) {
                ScenarioConfig c = config;
                c.coupling.scheme = scheme;
                c.coupling.tol = tol;
                TimeseriesRow row;
                row.scheme = to_string(scheme);
                row.tol = tol;
                CouplingResult result;
                if (c.scenario == ScenarioKind::manufactured) {
                    auto run = run_manufactured(c);
                    result = std::move(run.result);
                    row.error_u = run.errors.u;
                    row.error_p = run.errors.p;
                    row.extra = {run.errors.v, run.errors.phi};
                } else {
                    auto run = run_terzaghi(c);
                    result = std::move(run.result);
                    row.error_u = run.relative_linf;
                    row.extra = {std::nullopt, std::nullopt};
                }
                row.time = result.state.time;
                row.outer_iters = result.report.outer_iterations;
                row.flow_solves = result.report.flow_solves;
                row.solid_solves = result.report.solid_solves;
                row.residual = result.report.history.empty() ? 0.0 : result.report.history.back();
                ts.rows.push_back(row);
                if (!result.report.converged && sum.exit_code == exit_ok) {
                    sum.exit_code = exit_not_converged;
                    sum.message = to_string(scheme) + " did not converge at tol " + format_number(tol);
                }
            }
        }
        write_timeseries(ts, join(config.output.directory, "sweep.csv"));
        sum.files.push_back("sweep.csv");
        if (sum.exit_code == exit_ok) sum.message = "ok";
    } catch (const ConfigError& e) {
        sum.exit_code = exit_config_error;
        sum.message = std::string("configuration error: ") + e.what();
    } catch (const OutputError& e) {
        sum.exit_code = exit_io_error;
        sum.message = std::string("I/O error: ") + e.what();
    } catch (const std::exception& e) {
        sum.exit_code = exit_not_converged;
        sum.message = std::string("solver failure: ") + e.what();
    }
    return sum;
}

bool run_verification_suite(std::ostream& out) {
    bool all = true;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << "\n";
        all = all && ok;
    };
    try {
        // Closed forms.
        const ManufacturedConstants mc;
        double worst = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double x = i / 100.0;
            const double h = 1e-5;
            const auto f = ms_exact(x, mc);
            const double dp = (ms_exact(x + h, mc).p - ms_exact(x - h, mc).p) / (2 * h);
            worst = std::max(worst, std::abs(mc.alpha * f.v + dp));
            worst = std::max(worst, std::abs(f.phi * f.v - mc.phi0 * mc.v0));
        }
        check("manufactured closed forms", worst < 1e-8, "max residual " + format_number(worst));
        check("bessel I0(1)", std::abs(bessel_i0(1.0) - 1.2660658777520082) < 1e-12,
              format_number(bessel_i0(1.0)));
        const double b1 = std::exp(-3.75) * bessel_i0_series_branch(3.75);
        const double b2 = bessel_i0_scaled_large_branch(3.75);
        check("bessel branch continuity", std::abs(b1 - b2) / b1 < 1e-7, format_number(std::abs(b1 - b2) / b1));
        const auto tz = terzaghi_analytic(0.1, TerzaghiParams{});
        check("terzaghi oracle quadrature", tz.richardson <= 1e-6, "richardson " + format_number(tz.richardson));

        // Manufactured solution, every scheme.
        const auto base = ScenarioConfig::defaults(ScenarioKind::manufactured);
        std::vector<FieldState> states;
        for (auto scheme : {CouplingScheme::fully_coupled, CouplingScheme::lockstep, CouplingScheme::subcycle,
                            CouplingScheme::jacobi}) {
            auto c = base;
            c.coupling.scheme = scheme;
            const auto run = run_manufactured(c);
            const auto& e = run.errors;
            const double m = std::max({e.u, e.p, e.v, e.phi});
            check("manufactured " + to_string(scheme), run.result.report.converged && m < 1e-3,
                  "max rel L2 " + format_number(m) + ", iterations " +
                      std::to_string(run.result.report.outer_iterations));
            states.push_back(run.result.state);
        }
        double agree = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j)
                agree = std::max(agree, converged(states[j], states[i], 0.0).residual);
        check("scheme agreement", agree < 1e-7, "max pairwise " + format_number(agree));

        // Mesh convergence.
        std::vector<ManufacturedErrors> errs;
        for (int n : {50, 100, 200, 400}) {
            auto c = base;
            c.mesh.nx = n;
            errs.push_back(run_manufactured(c).errors);
        }
        double rate_u = 1e9, rate_p = 1e9;
        for (std::size_t i = 1; i < errs.size(); ++i) {
            rate_u = std::min(rate_u, std::log2(errs[i - 1].u / errs[i].u));
            rate_p = std::min(rate_p, std::log2(errs[i - 1].p / errs[i].p));
        }
        check("convergence order", rate_u >= 1.9 && rate_p >= 1.9,
              "min rate u " + format_number(rate_u) + ", p " + format_number(rate_p));

        // Consolidation against the convolution oracle.
        const auto tr = run_terzaghi(ScenarioConfig::defaults(ScenarioKind::terzaghi));
        check("terzaghi", tr.result.report.converged && tr.relative_linf <= 0.03,
              "relative Linf " + format_number(tr.relative_linf));
    } catch (const std::exception& e) {
        check("verification suite", false, e.what());
    }
    return all;
}

}  // namespace poroflow
