#include "poroflow/coupling.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

namespace poroflow {

std::string to_string(CouplingScheme scheme) {
    switch (scheme) {
        case CouplingScheme::fully_coupled: return "fully_coupled";
        case CouplingScheme::lockstep: return "lockstep";
        case CouplingScheme::subcycle: return "subcycle";
        case CouplingScheme::jacobi: return "jacobi";
    }
    return "unknown";
}

CouplingScheme scheme_from_string(const std::string& s) {
    if (s == "fully_coupled") return CouplingScheme::fully_coupled;
    if (s == "lockstep") return CouplingScheme::lockstep;
    if (s == "subcycle") return CouplingScheme::subcycle;
    if (s == "jacobi") return CouplingScheme::jacobi;
    throw std::invalid_argument("unknown coupling scheme '" + s + "'");
}

bool CouplingConfig::steady() const { return !std::isfinite(dt); }

int CouplingConfig::step_count() const {
    if (steady()) return 1;
    return std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9)));
}

void CouplingConfig::validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("coupling.tol must be positive");
    if (max_outer_iters < 1) throw std::invalid_argument("coupling.max_outer_iters must be >= 1");
    if (n_subcycles < 1) throw std::invalid_argument("coupling.n_subcycles must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("coupling.dt must be positive");
    if (!steady() && !(t_end > 0.0)) throw std::invalid_argument("coupling.t_end must be positive");
    if (!(inner_tol > 0.0)) throw std::invalid_argument("coupling.inner_tol must be positive");
}

void ConvergenceReport::absorb(const ConvergenceReport& step) {
    outer_iterations += step.outer_iterations;
    history.insert(history.end(), step.history.begin(), step.history.end());
    flow_solves += step.flow_solves;
    solid_solves += step.solid_solves;
    wall_time += step.wall_time;
    converged = step.converged;
    if (!step.failure.empty()) failure = step.failure;
}

namespace {

double relative_change(std::span<const double> prev, std::span<const double> next) {
    double d = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        d += (next[i] - prev[i]) * (next[i] - prev[i]);
        m += next[i] * next[i];
    }
    return std::sqrt(d) / (std::sqrt(m) + 1e-14);
}

std::span<const double> flat(const std::vector<Vec2>& v) {
    static_assert(sizeof(Vec2) == 2 * sizeof(double));
    return {reinterpret_cast<const double*>(v.data()), 2 * v.size()};
}

std::vector<double> elementwise_porosity_interp(const std::vector<double>& from,
                                                const std::vector<double>& to, double theta) {
    std::vector<double> out(from.size());
    for (std::size_t e = 0; e < from.size(); ++e) out[e] = from[e] + theta * (to[e] - from[e]);
    return out;
}

class Stepper {
public:
    Stepper(const Problem& problem, const CouplingConfig& config)
        : problem_(problem), config_(config) {}

    CouplingResult run(const FieldState& initial, const StepObserver& observer) {
        config_.validate();
        problem_.materials.validate(problem_.mesh);
        initial.check_consistent(problem_.mesh);
        CouplingResult result;
        result.state = initial;
        auto& st = result.state;
        const double t0 = st.time;
        const int steps = config_.step_count();
        result.report.converged = true;
        for (int k = 0; k < steps; ++k) {
            const double t_new = config_.steady() ? t0 + (std::isfinite(config_.t_end) ? config_.t_end : 0.0)
                                                  : std::min(t0 + (k + 1) * config_.dt, t0 + config_.t_end);
            const double dt = config_.steady() ? steady_dt : t_new - (k == 0 ? t0 : st.time);
            if (problem_.bcs.schedule) problem_.bcs.schedule(t_new, problem_.bcs);
            st.time = t_new;
            st.u_old = st.u;
            st.phi_old = st.phi;
            impose_dirichlet(problem_.bcs, st);

            StepReport sr;
            sr.step = k + 1;
            sr.time = t_new;
            const auto start = std::chrono::steady_clock::now();
            sr.report = config_.scheme == CouplingScheme::fully_coupled ? monolithic_step(st, dt, sr)
                                                                          : staggered_step(st, dt, sr);
            sr.report.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            sr.max_trace_norm = max_trace_norm(problem_.mesh, st.u);
            if (sr.max_trace_norm > small_strain_threshold) ++result.strain_warnings;
            result.report.absorb(sr.report);
            result.steps.push_back(sr);
            if (observer) observer(st, sr);
            if (!sr.report.converged) break;
        }
        return result;
    }

private:
    // --- subsystem solves ---------------------------------------------------

    Vector linear_solve(const SparseSystem& sys) const {
        auto res = solve(sys.matrix, sys.rhs, problem_.options.linear);
        if (!res.report.converged) {
            throw LinearSolverError(to_string(res.report.method), "linear solve did not converge");
        }
        return std::move(res.x);
    }

    /// Advances pressure (and saturation) over dt in `substeps` pieces with
    /// the porosity moving from st.phi_old to `phi_target`.
    void flow_advance(FieldState& st, const std::vector<double>& phi_target, double dt,
                      int substeps, const std::vector<double>& p_step_start, ConvergenceReport& rep,
                      SaturationStepReport* sat) const {
        if (!std::isfinite(dt)) substeps = 1;
        const auto& mesh = problem_.mesh;
        const auto& model = problem_.materials.porosity;
        const std::vector<double> phi_start = st.phi_old;
        const std::vector<double> p_sync = st.p;
        std::vector<double> phi_prev = phi_start;
        const double h = std::isfinite(dt) ? dt / substeps : dt;
        const bool nonlinear = problem_.options.two_phase
                                   ? problem_.materials.permeability.kind == PermeabilityKind::damage
                                   : problem_.materials.fluid.beta != 0.0;
        FieldState sub = st;
        for (int j = 1; j <= substeps; ++j) {
            std::vector<double> phi_j;
            if (j == substeps) {
                phi_j = phi_target;
            } else {
                phi_j = elementwise_porosity_interp(phi_start, phi_target,
                                                    static_cast<double>(j) / substeps);
                if (model.kind == PorosityKind::large_deformation && model.c_r != 0.0) {
                    for (int e = 0; e < mesh.element_count(); ++e) {
                        const double dp = element_pressure(mesh, sub.p, e) - element_pressure(mesh, p_sync, e);
                        phi_j[e] *= 1.0 + model.c_r * dp;
                    }
                }
            }
            sub.phi_old = phi_prev;
            const std::vector<double> upwind = j == 1 ? p_step_start : sub.p;
            std::vector<CvEdge> edges;
            for (int it = 0; it < config_.max_inner_iters; ++it) {
                const std::vector<double> p_before = sub.p;
                Vector x;
                if (problem_.options.two_phase) {
                    edges = cvfem_edges(mesh, compute_mobility(problem_, sub));
                    x = linear_solve(assemble_two_phase_pressure(problem_, sub, edges, phi_j, upwind, h));
                } else {
                    x = linear_solve(assemble_flow(problem_, sub, phi_j, compute_drag(problem_, sub.p), h));
                }
                ++rep.flow_solves;
                sub.p = std::move(x);
                if (!nonlinear) break;
                if (relative_change(p_before, sub.p) <= config_.inner_tol) break;
            }
            if (problem_.options.two_phase) {
                const auto r = advance_saturation(problem_, sub, edges, upwind, phi_prev, phi_j, h);
                if (sat) accumulate(*sat, r, j == 1);
            }
            phi_prev = phi_j;
        }
        st.p = sub.p;
        if (problem_.options.two_phase) st.s_n = sub.s_n;
        update_velocity(st);
    }

    static void accumulate(SaturationStepReport& total, const SaturationStepReport& r, bool first) {
        if (first) {
            total = r;
            return;
        }
        total.substeps += r.substeps;
        total.clamped += r.clamped;
        total.injected_w += r.injected_w;
        total.produced_w += r.produced_w;
        total.injected_n += r.injected_n;
        total.produced_n += r.produced_n;
        total.mass_w_after = r.mass_w_after;
        total.mass_n_after = r.mass_n_after;
        total.max_balance_error = std::max(total.max_balance_error, r.max_balance_error);
    }

    void update_velocity(FieldState& st) const {
        if (problem_.options.two_phase) {
            const auto mob = compute_mobility(problem_, st);
            const auto vw = recover_phase_velocity(problem_, st, mob, Phase::wetting);
            const auto vn = recover_phase_velocity(problem_, st, mob, Phase::nonwetting);
            for (std::size_t e = 0; e < st.v.size(); ++e) st.v[e] = vw[e] + vn[e];
        } else {
            st.v = recover_velocity(problem_.mesh, st.p, compute_drag(problem_, st.p),
                                    problem_.materials.fluid.rho, problem_.materials.fluid_body_force);
        }
    }

    void solid_solve(FieldState& st, double dt, ConvergenceReport& rep) const {
        const Vector x = linear_solve(assemble_solid(problem_, st, dt));
        ++rep.solid_solves;
        for (int i = 0; i < problem_.mesh.node_count(); ++i) st.u[i] = {x[2 * i], x[2 * i + 1]};
    }

    bool stagnated(const std::vector<double>& h) const {
        const int w = config_.stagnation_window;
        if (static_cast<int>(h.size()) <= w) return false;
        const double now = h.back();
        const double then = h[h.size() - 1 - w];
        return now > (1.0 - config_.stagnation_reduction) * then;
    }

    // --- schemes ------------------------------------------------------------

    ConvergenceReport staggered_step(FieldState& st, double dt, StepReport& sr) const {
        ConvergenceReport rep;
        const std::vector<double> s_start = st.s_n;
        const std::vector<double> p_start = st.p;
        const int n = config_.scheme == CouplingScheme::subcycle ? config_.n_subcycles : 1;
        const bool jacobi = config_.scheme == CouplingScheme::jacobi;
        for (int k = 1; k <= config_.max_outer_iters; ++k) {
            const FieldState prev = st;
            if (jacobi) {
                FieldState fs = st;
                FieldState ss = st;
                fs.s_n = s_start;
                ConvergenceReport rf, rs;
                SaturationStepReport sat;
                auto flow = [&] { flow_advance(fs, fs.phi, dt, 1, p_start, rf, &sat); };
                auto solid = [&] { solid_solve(ss, dt, rs); };
                if (config_.concurrent_jacobi) {
                    auto fut = std::async(std::launch::async, flow);
                    solid();
                    fut.get();
                } else {
                    flow();
                    solid();
                }
                rep.flow_solves += rf.flow_solves;
                rep.solid_solves += rs.solid_solves;
                st.p = fs.p;
                st.v = fs.v;
                st.s_n = fs.s_n;
                st.u = ss.u;
                sr.saturation = sat;
            } else {
                st.s_n = s_start;
                const std::vector<double> phi_target = st.phi;
                flow_advance(st, phi_target, dt, n, p_start, rep, &sr.saturation);
                solid_solve(st, dt, rep);
            }
            st.phi = compute_porosity(problem_, st);
            const auto c = converged(prev, st, config_.tol);
            rep.history.push_back(c.residual);
            rep.outer_iterations = k;
            if (c.converged) {
                rep.converged = true;
                return rep;
            }
            if (stagnated(rep.history)) {
                rep.failure = "stagnation";
                return rep;
            }
        }
        rep.failure = "max_outer_iters";
        return rep;
    }

    ConvergenceReport monolithic_step(FieldState& st, double dt, StepReport& sr) const {
        ConvergenceReport rep;
        const MonolithicLayout lay{problem_.mesh.node_count(), problem_.mesh.element_count()};
        const bool newton = config_.linearization == Linearization::newton;
        const std::vector<double> p_start = st.p;
        double r0 = -1.0;
        double r_last = -1.0;
        for (int k = 1; k <= config_.max_outer_iters; ++k) {
            const auto sys = assemble_monolithic(problem_, st, dt, newton, p_start);
            const double rn = norm2(sys.residual);
            if (r0 < 0.0) r0 = rn;
            Vector neg(sys.residual.size());
            for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -sys.residual[i];
            SolveOptions opts = problem_.options.linear;
            if (opts.method == SolveMethod::cg) opts.method = SolveMethod::bicgstab;
            auto res = solve(sys.jacobian, neg, opts);
            if (!res.report.converged) {
                throw LinearSolverError(to_string(res.report.method), "monolithic solve did not converge");
            }
            ++rep.flow_solves;
            ++rep.solid_solves;
            const FieldState prev = st;
            Vector x = pack_state(lay, st);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += res.x[i];
            unpack_state(lay, x, st);
            auto c = converged(prev, st, config_.tol);
            if (!c.converged && r0 > 0.0) {
                // Either the update was exact, or the residual has reached its
                // roundoff floor and the increments are noise (tiny early-time
                // displacements under a stiff solid).
                const double r1 = norm2(assemble_monolithic(problem_, st, dt, newton, p_start).residual);
                const bool exact = r1 <= 1e-12 * r0;
                const bool floor = r1 <= 1e-10 * r0 && r_last >= 0.0 && r1 > 0.5 * r_last;
                if (exact || floor) c = {true, std::min(c.residual, r1 / r0)};
                r_last = r1;
            }
            rep.history.push_back(c.residual);
            rep.outer_iterations = k;
            if (c.converged) {
                rep.converged = true;
                break;
            }
            if (stagnated(rep.history)) {
                rep.failure = "stagnation";
                break;
            }
        }
        if (!rep.converged && rep.failure.empty()) rep.failure = "max_outer_iters";
        if (problem_.options.two_phase && std::isfinite(dt)) {
            const auto edges = cvfem_edges(problem_.mesh, compute_mobility(problem_, st));
            sr.saturation = advance_saturation(problem_, st, edges, p_start, st.phi_old, st.phi, dt);
        }
        update_velocity(st);
        return rep;
    }

    Problem problem_;
    CouplingConfig config_;
};

CouplingResult run_with(const Problem& problem, const FieldState& state, CouplingConfig config,
                        CouplingScheme scheme, const StepObserver& observer) {
    config.scheme = scheme;
    return Stepper(problem, config).run(state, observer);
}

}  // namespace

Convergence converged(const FieldState& prev, const FieldState& next, double tol) {
    const double ru = relative_change(flat(prev.u), flat(next.u));
    const double rp = relative_change(prev.p, next.p);
    const double rf = relative_change(prev.phi, next.phi);
    const double r = std::max({ru, rp, rf});
    return {r <= tol, r};
}

CouplingResult solve_fully_coupled(const Problem& problem, const FieldState& state,
                                   const CouplingConfig& config, const StepObserver& observer) {
    return run_with(problem, state, config, CouplingScheme::fully_coupled, observer);
}

CouplingResult solve_lockstep(const Problem& problem, const FieldState& state,
                              const CouplingConfig& config, const StepObserver& observer) {
    CouplingConfig c = config;
    c.n_subcycles = 1;
    return run_with(problem, state, c, CouplingScheme::lockstep, observer);
}

CouplingResult solve_subcycle(const Problem& problem, const FieldState& state,
                              const CouplingConfig& config, const StepObserver& observer) {
    return run_with(problem, state, config, CouplingScheme::subcycle, observer);
}

CouplingResult solve_jacobi(const Problem& problem, const FieldState& state,
                            const CouplingConfig& config, const StepObserver& observer) {
    return run_with(problem, state, config, CouplingScheme::jacobi, observer);
}

CouplingResult solve_coupled(const Problem& problem, const FieldState& state,
                             const CouplingConfig& config, const StepObserver& observer) {
    return run_with(problem, state, config, config.scheme, observer);
}

}  // namespace poroflow
