#include "poroflow/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace poroflow {

namespace {

constexpr Vec2 centre_ref{0.0, 0.0};

Vec2 map_point(const std::array<Vec2, 4>& coords, const ShapeValues& sv) {
    Vec2 x;
    for (int a = 0; a < 4; ++a) x += sv.values[a] * coords[a];
    return x;
}

void add_block(std::vector<Triplet>& t, const std::array<int, 4>& dofs,
               const std::array<std::array<double, 4>, 4>& k) {
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) t.push_back({dofs[a], dofs[b], k[a][b]});
}

/// Unit-mobility Laplacian and body-force vector of one element.
struct FlowElement {
    std::array<std::array<double, 4>, 4> k{};
    std::array<double, 4> g{};      // int rho b . grad N_a
    std::array<double, 4> mass{};   // int N_a
};

FlowElement flow_element(const Problem& problem, int e) {
    const auto& mesh = problem.mesh;
    const auto coords = mesh.element_coords(e);
    const auto& bf = problem.materials.fluid_body_force;
    const double rho = problem.materials.fluid.rho;
    FlowElement fe;
    for (const auto& qp : QuadratureRule::standard().points) {
        const auto sv = shape_eval(coords, qp.point, e);
        const double w = qp.weight * sv.jac_det;
        Vec2 load;
        if (bf) load = rho * bf(map_point(coords, sv));
        for (int a = 0; a < 4; ++a) {
            fe.mass[a] += w * sv.values[a];
            fe.g[a] += w * dot(load, sv.gradients[a]);
            for (int b = 0; b < 4; ++b) fe.k[a][b] += w * dot(sv.gradients[a], sv.gradients[b]);
        }
    }
    return fe;
}

using Block8 = std::array<std::array<double, 8>, 8>;

Block8 solid_stiffness(const Mesh& mesh, const SolidParams& sp, int e) {
    const auto coords = mesh.element_coords(e);
    Block8 k{};
    for (const auto& qp : QuadratureRule::standard().points) {
        const auto sv = shape_eval(coords, qp.point, e);
        const double w = qp.weight * sv.jac_det;
        for (int a = 0; a < 4; ++a) {
            const Vec2 ga = sv.gradients[a];
            for (int b = 0; b < 4; ++b) {
                const Vec2 gb = sv.gradients[b];
                const double gg = dot(ga, gb);
                for (int c = 0; c < 2; ++c) {
                    for (int d = 0; d < 2; ++d) {
                        double v = sp.lambda * ga[c] * gb[d] + sp.mu * ga[d] * gb[c];
                        if (c == d) v += sp.mu * gg;
                        k[2 * a + c][2 * b + d] += w * v;
                    }
                }
            }
        }
    }
    return k;
}

std::vector<std::pair<int, double>> pressure_fixed(const BoundaryConditions& bcs) {
    return {bcs.pressure.begin(), bcs.pressure.end()};
}

std::vector<std::pair<int, double>> displacement_fixed(const BoundaryConditions& bcs) {
    std::vector<std::pair<int, double>> out;
    out.reserve(bcs.displacement.size());
    for (const auto& [key, value] : bcs.displacement) out.emplace_back(2 * key.first + key.second, value);
    return out;
}

double node_average(const std::vector<double>& f, const std::array<int, 4>& conn) {
    return 0.25 * (f[conn[0]] + f[conn[1]] + f[conn[2]] + f[conn[3]]);
}

double total_mobility(double s_n, RelPermCurve curve) {
    return phase_mobility(1.0 - s_n, Phase::wetting, curve) +
           phase_mobility(s_n, Phase::nonwetting, curve);
}

double fractional_n(double s_n, RelPermCurve curve) {
    const double ln = phase_mobility(s_n, Phase::nonwetting, curve);
    return ln / (ln + phase_mobility(1.0 - s_n, Phase::wetting, curve));
}

/// Upstream total mobility of an edge; ties take the mean.
double edge_mobility(const CvEdge& edge, const std::vector<double>& s_n,
                     const std::vector<double>& upwind_p, RelPermCurve curve) {
    const double dir = edge.transmissibility * (upwind_p[edge.i] - upwind_p[edge.j]);
    if (dir > 0.0) return total_mobility(s_n[edge.i], curve);
    if (dir < 0.0) return total_mobility(s_n[edge.j], curve);
    return 0.5 * (total_mobility(s_n[edge.i], curve) + total_mobility(s_n[edge.j], curve));
}

/// CV storage rate per node: sum_e (phi_e - phi_old_e) int_e N_i / dt.
Vector storage_rate(const Mesh& mesh, const std::vector<double>& phi,
                    const std::vector<double>& phi_old, double dt) {
    Vector out(mesh.node_count(), 0.0);
    if (!std::isfinite(dt)) return out;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        for (const auto& qp : QuadratureRule::standard().points) {
            const auto sv = shape_eval(coords, qp.point, e);
            const double w = qp.weight * sv.jac_det;
            for (int a = 0; a < 4; ++a) out[conn[a]] += w * sv.values[a] * (phi[e] - phi_old[e]) / dt;
        }
    }
    return out;
}

}  // namespace

// --- state, materials, boundary conditions ----------------------------------

FieldState FieldState::initial(const Mesh& mesh, double phi0, bool two_phase,
                               double initial_pressure, double initial_sn) {
    FieldState s;
    s.u.assign(mesh.node_count(), Vec2{});
    s.u_old = s.u;
    s.p.assign(mesh.node_count(), initial_pressure);
    s.v.assign(mesh.element_count(), Vec2{});
    s.phi.assign(mesh.element_count(), phi0);
    s.phi_old = s.phi;
    if (two_phase) s.s_n.assign(mesh.node_count(), initial_sn);
    return s;
}

void FieldState::check_consistent(const Mesh& mesh) const {
    const auto nn = static_cast<std::size_t>(mesh.node_count());
    const auto ne = static_cast<std::size_t>(mesh.element_count());
    if (u.size() != nn || u_old.size() != nn || p.size() != nn)
        throw std::invalid_argument("field state: nodal array length does not match mesh");
    if (v.size() != ne || phi.size() != ne || phi_old.size() != ne)
        throw std::invalid_argument("field state: element array length does not match mesh");
    if (!s_n.empty() && s_n.size() != nn)
        throw std::invalid_argument("field state: saturation length does not match mesh");
    for (std::size_t e = 0; e < ne; ++e) {
        if (!(phi[e] > 0.0 && phi[e] < 1.0))
            throw PoreCollapse(static_cast<int>(e), "porosity outside (0,1)");
    }
    for (double s : s_n) {
        if (s < -1e-10 || s > 1.0 + 1e-10) throw std::invalid_argument("saturation outside [0,1]");
    }
}

SolidParams Materials::solid_at(int element) const {
    SolidParams sp = solid;
    if (!lambda_field.empty()) sp.lambda = lambda_field[element];
    return sp;
}

void Materials::validate(const Mesh& mesh) const {
    solid.validate();
    fluid.validate();
    porosity.validate();
    permeability.validate();
    if (!lambda_field.empty()) {
        if (static_cast<int>(lambda_field.size()) != mesh.element_count())
            throw MaterialError("lambda field length does not match element count");
        for (int e = 0; e < mesh.element_count(); ++e) solid_at(e).validate();
    }
}

void BoundaryConditions::set_pressure(int node, double value) {
    auto [it, inserted] = pressure.emplace(node, value);
    if (!inserted && it->second != value) {
        throw std::invalid_argument("conflicting pressure values at node " + std::to_string(node));
    }
}

void BoundaryConditions::set_displacement(int node, int component, double value) {
    if (component != 0 && component != 1) throw std::invalid_argument("component must be 0 or 1");
    auto [it, inserted] = displacement.emplace(std::make_pair(node, component), value);
    if (!inserted && it->second != value) {
        throw std::invalid_argument("conflicting displacement values at node " +
                                    std::to_string(node));
    }
}

void BoundaryConditions::drain(const Mesh& mesh, Side side, double ambient) {
    for (int n : mesh.boundary_nodes(side)) set_pressure(n, ambient);
    if (std::find(drained.begin(), drained.end(), side) == drained.end()) drained.push_back(side);
}

void BoundaryConditions::fix_component(const Mesh& mesh, Side side, int component, double value) {
    for (int n : mesh.boundary_nodes(side)) set_displacement(n, component, value);
}

void impose_dirichlet(const BoundaryConditions& bcs, FieldState& state) {
    for (const auto& [node, value] : bcs.pressure) state.p[node] = value;
    for (const auto& [key, value] : bcs.displacement) state.u[key.first][key.second] = value;
}

void check_flow_constraints(const Problem& problem) {
    if (problem.bcs.pressure.empty()) {
        throw SingularSystem("flow: no pressure Dirichlet value; the pure-Neumann system is singular");
    }
}

void check_solid_constraints(const Problem& problem) {
    // Gram matrix of the rigid modes (1,0), (0,1), (-y,x) restricted to the
    // constrained dofs; a rank below 3 leaves a free rigid motion.
    const auto& mesh = problem.mesh;
    double g[3][3] = {};
    const Vec2 c{0.5 * mesh.lx, 0.5 * mesh.ly};
    const double scale = std::max(mesh.lx, mesh.ly);
    for (const auto& [key, value] : problem.bcs.displacement) {
        const Vec2 x = mesh.nodes[key.first] - c;
        double r[3];
        r[0] = key.second == 0 ? 1.0 : 0.0;
        r[1] = key.second == 1 ? 1.0 : 0.0;
        r[2] = (key.second == 0 ? -x.y : x.x) / scale;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) g[i][j] += r[i] * r[j];
    }
    const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                       g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                       g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    const double tr = g[0][0] + g[1][1] + g[2][2];
    if (!(det > 1e-12 * tr * tr * tr)) {
        throw SingularSystem("solid: displacement constraints leave a rigid-body mode");
    }
}

void eliminate_dirichlet(SparseSystem& system, const std::vector<std::pair<int, double>>& fixed) {
    auto& a = system.matrix;
    const int n = a.size();
    std::vector<char> is_fixed(n, 0);
    Vector g(n, 0.0);
    for (const auto& [dof, value] : fixed) {
        is_fixed[dof] = 1;
        g[dof] = value;
    }
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    auto vals = a.values();
    for (int i = 0; i < n; ++i) {
        if (is_fixed[i]) {
            double diag = 0.0;
            for (int k = offsets[i]; k < offsets[i + 1]; ++k) {
                if (cols[k] == i) diag = vals[k];
            }
            if (diag == 0.0) diag = 1.0;
            for (int k = offsets[i]; k < offsets[i + 1]; ++k) vals[k] = cols[k] == i ? diag : 0.0;
            system.rhs[i] = diag * g[i];
            continue;
        }
        for (int k = offsets[i]; k < offsets[i + 1]; ++k) {
            if (is_fixed[cols[k]]) {
                system.rhs[i] -= vals[k] * g[cols[k]];
                vals[k] = 0.0;
            }
        }
    }
}

// --- pointwise helpers ---------------------------------------------------------

Tensor2 displacement_gradient(const Mesh& mesh, const std::vector<Vec2>& u, int element) {
    const auto sv = shape_eval(mesh.element_coords(element), centre_ref, element);
    const auto& conn = mesh.elements[element];
    Tensor2 g;
    for (int a = 0; a < 4; ++a) {
        const Vec2 ua = u[conn[a]];
        const Vec2 d = sv.gradients[a];
        g.xx += ua.x * d.x;
        g.xy += ua.x * d.y;
        g.yx += ua.y * d.x;
        g.yy += ua.y * d.y;
    }
    return g;
}

double element_pressure(const Mesh& mesh, const std::vector<double>& p, int element) {
    return node_average(p, mesh.elements[element]);
}

std::vector<double> compute_porosity(const Problem& problem, const FieldState& state) {
    const auto& mesh = problem.mesh;
    std::vector<double> phi(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        phi[e] = porosity_update(problem.materials.porosity, displacement_gradient(mesh, state.u, e),
                                 element_pressure(mesh, state.p, e), e);
    }
    return phi;
}

std::vector<Tensor2> compute_porosity_sensitivity(const Problem& problem, const FieldState& state) {
    const auto& mesh = problem.mesh;
    std::vector<Tensor2> out(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        out[e] = porosity_sensitivity(problem.materials.porosity,
                                      displacement_gradient(mesh, state.u, e),
                                      element_pressure(mesh, state.p, e));
    }
    return out;
}

std::vector<double> compute_drag(const Problem& problem, const std::vector<double>& p) {
    const auto& mesh = problem.mesh;
    const auto& fluid = problem.materials.fluid;
    std::vector<double> drag(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        drag[e] = drag_coefficient(barus_viscosity(element_pressure(mesh, p, e), fluid), fluid.k);
    }
    return drag;
}

std::vector<Tensor2> compute_stress(const Problem& problem, const FieldState& state) {
    const auto& mesh = problem.mesh;
    std::vector<Tensor2> out(mesh.element_count());
    const Tensor2 t0 = problem.materials.permeability.insitu_stress;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const Tensor2 eps = linearized_strain(displacement_gradient(mesh, state.u, e));
        const Tensor2 te = solid_effective_stress(eps, problem.materials.solid_at(e));
        const double dp = element_pressure(mesh, state.p, e) - problem.bcs.reference_pressure;
        out[e] = t0 + total_solid_stress(te, dp);
    }
    return out;
}

std::vector<double> compute_mobility(const Problem& problem, const FieldState& state) {
    const auto& model = problem.materials.permeability;
    if (model.kind == PermeabilityKind::constant)
        return std::vector<double>(problem.mesh.element_count(), model.alpha0);
    const auto stress = compute_stress(problem, state);
    std::vector<double> out(stress.size());
    for (std::size_t e = 0; e < stress.size(); ++e) out[e] = damage_permeability(model, stress[e]);
    return out;
}

double max_trace_norm(const Mesh& mesh, const std::vector<Vec2>& u) {
    double m = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        m = std::max(m, trace_norm(displacement_gradient(mesh, u, e)));
    }
    return m;
}

// --- single-phase flow -----------------------------------------------------------

SparseSystem assemble_flow(const Problem& problem, const FieldState& state,
                           const std::vector<double>& phi, const std::vector<double>& drag,
                           double dt) {
    check_flow_constraints(problem);
    const auto& mesh = problem.mesh;
    const int n = mesh.node_count();
    const bool storage = problem.options.storage && std::isfinite(dt);
    std::vector<Triplet> t;
    t.reserve(16 * static_cast<std::size_t>(mesh.element_count()));
    Vector rhs(n, 0.0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        if (!(phi[e] > 0.0)) throw PoreCollapse(e, "nonpositive porosity in flow assembly");
        const double m = phi[e] / drag[e];
        auto fe = flow_element(problem, e);
        const auto& conn = mesh.elements[e];
        for (int a = 0; a < 4; ++a) {
            rhs[conn[a]] += m * fe.g[a];
            if (storage) rhs[conn[a]] -= fe.mass[a] * (phi[e] - state.phi_old[e]) / dt;
            for (int b = 0; b < 4; ++b) fe.k[a][b] *= m;
        }
        add_block(t, conn, fe.k);
    }
    for (const auto& w : problem.bcs.rate_wells) rhs[w.node] += w.rate;
    SparseSystem sys{SparseMatrix::from_triplets(n, std::move(t)), std::move(rhs)};
    eliminate_dirichlet(sys, pressure_fixed(problem.bcs));
    return sys;
}

std::map<int, double> well_fluxes(const Problem& problem, const FieldState& state,
                                  const std::vector<double>& phi, const std::vector<double>& drag,
                                  double dt) {
    // Net outflow of each Dirichlet control volume; positive means fluid enters the domain.
    const auto& mesh = problem.mesh;
    const bool storage = problem.options.storage && std::isfinite(dt);
    Vector r(mesh.node_count(), 0.0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const double m = phi[e] / drag[e];
        const auto fe = flow_element(problem, e);
        const auto& conn = mesh.elements[e];
        for (int a = 0; a < 4; ++a) {
            double s = -m * fe.g[a];
            for (int b = 0; b < 4; ++b) s += m * fe.k[a][b] * state.p[conn[b]];
            if (storage) s += fe.mass[a] * (phi[e] - state.phi_old[e]) / dt;
            r[conn[a]] += s;
        }
    }
    std::map<int, double> out;
    for (const auto& [node, value] : problem.bcs.pressure) out[node] = r[node];
    return out;
}

std::vector<Vec2> recover_velocity(const Mesh& mesh, const std::vector<double>& p,
                                   const std::vector<double>& drag, double rho_f,
                                   const std::function<Vec2(Vec2)>& body_force) {
    std::vector<Vec2> v(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto sv = shape_eval(coords, centre_ref, e);
        const auto& conn = mesh.elements[e];
        Vec2 grad;
        for (int a = 0; a < 4; ++a) grad += p[conn[a]] * sv.gradients[a];
        Vec2 load;
        if (body_force) load = rho_f * body_force(map_point(coords, sv));
        v[e] = (1.0 / drag[e]) * (load - grad);
    }
    return v;
}

std::vector<Vec2> recover_phase_velocity(const Problem& problem, const FieldState& state,
                                         const std::vector<double>& mobility, Phase phase) {
    const auto& mesh = problem.mesh;
    const auto curve = problem.materials.two_phase.curve;
    std::vector<Vec2> v(mesh.element_count());
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto sv = shape_eval(mesh.element_coords(e), centre_ref, e);
        const auto& conn = mesh.elements[e];
        Vec2 grad;
        for (int a = 0; a < 4; ++a) grad += state.p[conn[a]] * sv.gradients[a];
        const double sn = node_average(state.s_n, conn);
        const double kr = phase == Phase::wetting ? phase_mobility(1.0 - sn, Phase::wetting, curve)
                                                  : phase_mobility(sn, Phase::nonwetting, curve);
        v[e] = (-mobility[e] * kr) * grad;
    }
    return v;
}

// --- solid ---------------------------------------------------------------------

namespace {

/// Load vector of the solid balance, excluding Dirichlet elimination.
Vector solid_load(const Problem& problem, const FieldState& state, double dt) {
    const auto& mesh = problem.mesh;
    const auto& mat = problem.materials;
    Vector f(2 * static_cast<std::size_t>(mesh.node_count()), 0.0);
    const bool split = problem.options.solid_form == SolidCouplingForm::pressure_split;
    std::vector<double> drag;
    std::vector<Vec2> v_f;
    if (!split) {
        drag = compute_drag(problem, state.p);
        v_f = recover_velocity(mesh, state.p, drag, mat.fluid.rho, mat.fluid_body_force);
    }
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        Vec2 interaction;
        if (!split) {
            Vec2 v_s;
            if (std::isfinite(dt)) {
                for (int a = 0; a < 4; ++a) v_s += 0.25 * (state.u[conn[a]] - state.u_old[conn[a]]);
                v_s *= 1.0 / dt;
            }
            interaction = drag[e] * (v_f[e] - v_s);
        }
        for (const auto& qp : QuadratureRule::standard().points) {
            const auto sv = shape_eval(coords, qp.point, e);
            const double w = qp.weight * sv.jac_det;
            const Vec2 x = map_point(coords, sv);
            Vec2 body;
            if (mat.solid_body_force) body += mat.solid.rho * mat.solid_body_force(x);
            if (mat.solid_extra_load) body += mat.solid_extra_load(x);
            double dp = 0.0;
            if (split) {
                if (mat.fluid_body_force) body += mat.fluid.rho * mat.fluid_body_force(x);
                for (int a = 0; a < 4; ++a) dp += sv.values[a] * state.p[conn[a]];
                dp -= problem.bcs.reference_pressure;
            } else {
                body += interaction;
            }
            for (int a = 0; a < 4; ++a) {
                for (int c = 0; c < 2; ++c) {
                    f[2 * conn[a] + c] += w * (sv.values[a] * body[c] + dp * sv.gradients[a][c]);
                }
            }
        }
    }
    for (const auto& load : problem.bcs.tractions) {
        const Vec2 tr = load.traction(state.time);
        for (const auto& edge : mesh.boundary_edges(load.side)) {
            const double len = norm(mesh.nodes[edge.n1] - mesh.nodes[edge.n0]);
            for (int node : {edge.n0, edge.n1}) {
                f[2 * node] += 0.5 * len * tr.x;
                f[2 * node + 1] += 0.5 * len * tr.y;
            }
        }
    }
    return f;
}

std::vector<Triplet> solid_triplets(const Problem& problem) {
    const auto& mesh = problem.mesh;
    std::vector<Triplet> t;
    t.reserve(64 * static_cast<std::size_t>(mesh.element_count()));
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto k = solid_stiffness(mesh, problem.materials.solid_at(e), e);
        const auto& conn = mesh.elements[e];
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
                t.push_back({2 * conn[a / 2] + a % 2, 2 * conn[b / 2] + b % 2, k[a][b]});
    }
    return t;
}

}  // namespace

SparseSystem assemble_solid(const Problem& problem, const FieldState& state, double dt) {
    check_solid_constraints(problem);
    const int n = 2 * problem.mesh.node_count();
    SparseSystem sys{SparseMatrix::from_triplets(n, solid_triplets(problem)),
                     solid_load(problem, state, dt)};
    eliminate_dirichlet(sys, displacement_fixed(problem.bcs));
    return sys;
}

Vector assemble_interaction(const Mesh& mesh, const std::vector<double>& alpha,
                            const std::vector<Vec2>& v_fluid, const std::vector<Vec2>& v_solid,
                            Constituent constituent) {
    Vector f(2 * static_cast<std::size_t>(mesh.node_count()), 0.0);
    const double sign = constituent == Constituent::solid ? 1.0 : -1.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        const Vec2 load = (sign * alpha[e]) * (v_fluid[e] - v_solid[e]);
        for (const auto& qp : QuadratureRule::standard().points) {
            const auto sv = shape_eval(coords, qp.point, e);
            const double w = qp.weight * sv.jac_det;
            for (int a = 0; a < 4; ++a) {
                f[2 * conn[a]] += w * sv.values[a] * load.x;
                f[2 * conn[a] + 1] += w * sv.values[a] * load.y;
            }
        }
    }
    return f;
}

// --- two-phase -------------------------------------------------------------------

double phase_mobility(double s, Phase, RelPermCurve curve) {
    if (s < -1e-10 || s > 1.0 + 1e-10) {
        std::ostringstream os;
        os << "saturation " << s << " outside [0,1]";
        throw std::domain_error(os.str());
    }
    s = std::clamp(s, 0.0, 1.0);
    return curve == RelPermCurve::quadratic ? s * s : s;
}

std::vector<CvEdge> cvfem_edges(const Mesh& mesh, const std::vector<double>& mobility) {
    std::map<std::pair<int, int>, double> acc;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        std::array<std::array<double, 4>, 4> k{};
        for (const auto& qp : QuadratureRule::standard().points) {
            const auto sv = shape_eval(coords, qp.point, e);
            const double w = qp.weight * sv.jac_det;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) k[a][b] += w * dot(sv.gradients[a], sv.gradients[b]);
        }
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                const int i = std::min(conn[a], conn[b]);
                const int j = std::max(conn[a], conn[b]);
                acc[{i, j}] -= mobility[e] * k[a][b];
            }
        }
    }
    std::vector<CvEdge> edges;
    edges.reserve(acc.size());
    for (const auto& [key, value] : acc) edges.push_back({key.first, key.second, value});
    return edges;
}

std::vector<double> control_volumes(const Mesh& mesh) {
    std::vector<double> out(mesh.node_count(), 0.0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        for (const auto& qp : QuadratureRule::standard().points) {
            const auto sv = shape_eval(coords, qp.point, e);
            for (int a = 0; a < 4; ++a) out[conn[a]] += qp.weight * sv.jac_det * sv.values[a];
        }
    }
    return out;
}

std::vector<double> control_volume_porosity(const Mesh& mesh, const std::vector<double>& phi) {
    std::vector<double> num(mesh.node_count(), 0.0);
    std::vector<double> vol(mesh.node_count(), 0.0);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        for (const auto& qp : QuadratureRule::standard().points) {
            const auto sv = shape_eval(coords, qp.point, e);
            for (int a = 0; a < 4; ++a) {
                const double w = qp.weight * sv.jac_det * sv.values[a];
                num[conn[a]] += w * phi[e];
                vol[conn[a]] += w;
            }
        }
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] /= vol[i];
    return num;
}

SparseSystem assemble_two_phase_pressure(const Problem& problem, const FieldState& state,
                                         const std::vector<CvEdge>& edges,
                                         const std::vector<double>& phi,
                                         const std::vector<double>& upwind_p, double dt) {
    check_flow_constraints(problem);
    const auto& mesh = problem.mesh;
    const int n = mesh.node_count();
    const auto curve = problem.materials.two_phase.curve;
    std::vector<Triplet> t;
    t.reserve(4 * edges.size() + n);
    for (int i = 0; i < n; ++i) t.push_back({i, i, 0.0});
    for (const auto& edge : edges) {
        const double c = edge_mobility(edge, state.s_n, upwind_p, curve) * edge.transmissibility;
        t.push_back({edge.i, edge.i, c});
        t.push_back({edge.j, edge.j, c});
        t.push_back({edge.i, edge.j, -c});
        t.push_back({edge.j, edge.i, -c});
    }
    Vector rhs(n, 0.0);
    if (problem.options.storage) {
        const auto st = storage_rate(mesh, phi, state.phi_old, dt);
        for (int i = 0; i < n; ++i) rhs[i] -= st[i];
    }
    for (const auto& w : problem.bcs.rate_wells) rhs[w.node] += w.rate;
    SparseSystem sys{SparseMatrix::from_triplets(n, std::move(t)), std::move(rhs)};
    eliminate_dirichlet(sys, pressure_fixed(problem.bcs));
    return sys;
}

SaturationStepReport advance_saturation(const Problem& problem, FieldState& state,
                                        const std::vector<CvEdge>& edges,
                                        const std::vector<double>& upwind_p,
                                        const std::vector<double>& phi_old,
                                        const std::vector<double>& phi, double dt) {
    const auto& mesh = problem.mesh;
    const int n = mesh.node_count();
    const auto curve = problem.materials.two_phase.curve;
    const auto vol = control_volumes(mesh);
    const auto cv_old = control_volume_porosity(mesh, phi_old);
    const auto cv_new = problem.options.storage ? control_volume_porosity(mesh, phi) : cv_old;
    auto& s = state.s_n;

    // Total fluxes are frozen over the step (implicit pressure, explicit saturation).
    std::vector<double> flux(edges.size());
    Vector net_out(n, 0.0);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& edge = edges[k];
        flux[k] = edge_mobility(edge, s, upwind_p, curve) * edge.transmissibility *
                  (state.p[edge.i] - state.p[edge.j]);
        net_out[edge.i] += flux[k];
        net_out[edge.j] -= flux[k];
    }
    const double h_total = std::isfinite(dt) ? dt : 0.0;
    if (h_total == 0.0) return {};

    // Well volumetric rates (positive = into the domain).
    Vector q(n, 0.0);
    std::vector<char> injector(n, 0);
    for (int i : problem.bcs.injectors) injector[i] = 1;
    for (const auto& [node, value] : problem.bcs.pressure) {
        q[node] = net_out[node] + vol[node] * (cv_new[node] - cv_old[node]) / h_total;
    }
    for (const auto& w : problem.bcs.rate_wells) {
        q[w.node] += w.rate;
        if (w.rate > 0.0) injector[w.node] = 1;
    }
    auto well_fn = [&](int i, double sn) {
        if (q[i] > 0.0 && injector[i]) return 0.0;
        return fractional_n(sn, curve);
    };

    double fmax = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double a = (k - 0.5) / 1000.0;
        const double b = (k + 0.5) / 1000.0;
        if (a < 0.0 || b > 1.0) continue;
        fmax = std::max(fmax, std::abs(fractional_n(b, curve) - fractional_n(a, curve)) / (b - a));
    }
    fmax *= 1.05;
    double h_max = std::numeric_limits<double>::infinity();
    {
        Vector out(n, 0.0);
        for (std::size_t k = 0; k < edges.size(); ++k) {
            if (flux[k] > 0.0) out[edges[k].i] += flux[k];
            else out[edges[k].j] -= flux[k];
        }
        for (int i = 0; i < n; ++i) {
            const double o = (out[i] + std::max(0.0, -q[i])) * fmax;
            if (o > 0.0) h_max = std::min(h_max, std::min(cv_old[i], cv_new[i]) * vol[i] / o);
        }
    }
    int substeps = 1;
    if (std::isfinite(h_max)) substeps = std::max(1, static_cast<int>(std::ceil(h_total / h_max)));
    if (substeps > problem.options.max_cfl_substeps) {
        std::ostringstream os;
        os << "saturation: CFL limit needs " << substeps << " substeps (max "
           << problem.options.max_cfl_substeps << ")";
        throw CflViolation(os.str());
    }

    SaturationStepReport rep;
    rep.substeps = substeps;
    auto masses = [&](double theta, double& mw, double& mn) {
        mw = 0.0;
        mn = 0.0;
        for (int i = 0; i < n; ++i) {
            const double pv = vol[i] * (cv_old[i] + theta * (cv_new[i] - cv_old[i]));
            mn += pv * s[i];
            mw += pv * (1.0 - s[i]);
        }
    };
    masses(0.0, rep.mass_w_before, rep.mass_n_before);
    const double h = h_total / substeps;
    Vector rate_n(n);
    for (int step = 0; step < substeps; ++step) {
        const double th0 = static_cast<double>(step) / substeps;
        const double th1 = static_cast<double>(step + 1) / substeps;
        double mw0, mn0;
        masses(th0, mw0, mn0);
        std::fill(rate_n.begin(), rate_n.end(), 0.0);
        double qn_total = 0.0;
        double qw_total = 0.0;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const int up = flux[k] >= 0.0 ? edges[k].i : edges[k].j;
            const double fn = flux[k] * fractional_n(s[up], curve);
            rate_n[edges[k].i] -= fn;
            rate_n[edges[k].j] += fn;
        }
        for (int i = 0; i < n; ++i) {
            if (q[i] == 0.0) continue;
            const double qn = q[i] * well_fn(i, s[i]);
            rate_n[i] += qn;
            qn_total += qn;
            qw_total += q[i] - qn;
            if (q[i] > 0.0) {
                rep.injected_n += h * qn;
                rep.injected_w += h * (q[i] - qn);
            } else {
                rep.produced_n -= h * qn;
                rep.produced_w -= h * (q[i] - qn);
            }
        }
        for (int i = 0; i < n; ++i) {
            const double pv0 = vol[i] * (cv_old[i] + th0 * (cv_new[i] - cv_old[i]));
            const double pv1 = vol[i] * (cv_old[i] + th1 * (cv_new[i] - cv_old[i]));
            double next = (pv0 * s[i] + h * rate_n[i]) / pv1;
            if (next < -1e-10 || next > 1.0 + 1e-10) ++rep.clamped;
            s[i] = std::clamp(next, 0.0, 1.0);
        }
        double mw1, mn1;
        masses(th1, mw1, mn1);
        const double total = std::max(mw0 + mn0, std::numeric_limits<double>::min());
        const double err_n = std::abs(mn1 - mn0 - h * qn_total) / total;
        const double err_w = std::abs(mw1 - mw0 - h * qw_total) / total;
        rep.max_balance_error = std::max({rep.max_balance_error, err_n, err_w});
    }
    masses(1.0, rep.mass_w_after, rep.mass_n_after);
    return rep;
}

// --- monolithic ----------------------------------------------------------------

Vector pack_state(const MonolithicLayout& layout, const FieldState& state) {
    Vector x(layout.size());
    for (int i = 0; i < layout.nodes; ++i) {
        x[2 * i] = state.u[i].x;
        x[2 * i + 1] = state.u[i].y;
        x[layout.p_offset() + i] = state.p[i];
    }
    for (int e = 0; e < layout.elements; ++e) x[layout.phi_offset() + e] = state.phi[e];
    return x;
}

void unpack_state(const MonolithicLayout& layout, const Vector& x, FieldState& state) {
    for (int i = 0; i < layout.nodes; ++i) {
        state.u[i] = {x[2 * i], x[2 * i + 1]};
        state.p[i] = x[layout.p_offset() + i];
    }
    for (int e = 0; e < layout.elements; ++e) state.phi[e] = x[layout.phi_offset() + e];
}

MonolithicSystem assemble_monolithic(const Problem& problem, const FieldState& state, double dt,
                                     bool newton, const std::vector<double>& upwind_p) {
    check_solid_constraints(problem);
    check_flow_constraints(problem);
    const auto& mesh = problem.mesh;
    const auto& mat = problem.materials;
    const MonolithicLayout lay{mesh.node_count(), mesh.element_count()};
    const int po = lay.p_offset();
    const int fo = lay.phi_offset();
    const bool storage = problem.options.storage && std::isfinite(dt);
    const bool split = problem.options.solid_form == SolidCouplingForm::pressure_split;

    std::vector<Triplet> t = solid_triplets(problem);
    Vector r(lay.size(), 0.0);

    // Solid rows: K u - f(p).
    {
        const Vector f = solid_load(problem, state, dt);
        const SparseMatrix k = SparseMatrix::from_triplets(2 * lay.nodes, t);
        Vector u(2 * lay.nodes);
        for (int i = 0; i < lay.nodes; ++i) {
            u[2 * i] = state.u[i].x;
            u[2 * i + 1] = state.u[i].y;
        }
        const Vector ku = spmv(k, u);
        for (int i = 0; i < 2 * lay.nodes; ++i) r[i] = ku[i] - f[i];
    }
    const auto drag = compute_drag(problem, state.p);
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        const auto& conn = mesh.elements[e];
        if (split) {
            // d/dp of -int p div(w)
            for (const auto& qp : QuadratureRule::standard().points) {
                const auto sv = shape_eval(coords, qp.point, e);
                const double w = qp.weight * sv.jac_det;
                for (int a = 0; a < 4; ++a)
                    for (int c = 0; c < 2; ++c)
                        for (int b = 0; b < 4; ++b)
                            t.push_back({2 * conn[a] + c, po + conn[b],
                                         -w * sv.values[b] * sv.gradients[a][c]});
            }
        } else {
            // Drag load int N_a (rho b - grad p - alpha v_s) with element-centre values.
            const auto sc = shape_eval(coords, centre_ref, e);
            std::array<double, 4> mass{};
            for (const auto& qp : QuadratureRule::standard().points) {
                const auto sv = shape_eval(coords, qp.point, e);
                for (int a = 0; a < 4; ++a) mass[a] += qp.weight * sv.jac_det * sv.values[a];
            }
            for (int a = 0; a < 4; ++a) {
                for (int c = 0; c < 2; ++c) {
                    for (int b = 0; b < 4; ++b) {
                        t.push_back({2 * conn[a] + c, po + conn[b], mass[a] * sc.gradients[b][c]});
                        if (std::isfinite(dt))
                            t.push_back({2 * conn[a] + c, 2 * conn[b] + c,
                                         mass[a] * drag[e] * 0.25 / dt});
                    }
                }
            }
        }
    }

    // Flow rows.
    if (!problem.options.two_phase) {
        for (int e = 0; e < mesh.element_count(); ++e) {
            const auto& conn = mesh.elements[e];
            const auto fe = flow_element(problem, e);
            const double m = state.phi[e] / drag[e];
            std::array<double, 4> kp{};
            for (int a = 0; a < 4; ++a) {
                kp[a] = -fe.g[a];
                for (int b = 0; b < 4; ++b) kp[a] += fe.k[a][b] * state.p[conn[b]];
            }
            for (int a = 0; a < 4; ++a) {
                const int row = po + conn[a];
                r[row] += m * kp[a];
                if (storage) {
                    r[row] += fe.mass[a] * (state.phi[e] - state.phi_old[e]) / dt;
                    t.push_back({row, fo + e, fe.mass[a] / dt});
                }
                for (int b = 0; b < 4; ++b) {
                    t.push_back({row, po + conn[b], m * fe.k[a][b]});
                    if (newton && mat.fluid.beta != 0.0)
                        t.push_back({row, po + conn[b], -0.25 * mat.fluid.beta * m * kp[a]});
                }
                if (newton) t.push_back({row, fo + e, kp[a] / drag[e]});
            }
        }
        for (const auto& w : problem.bcs.rate_wells) r[po + w.node] -= w.rate;
    } else {
        const auto& up = upwind_p.empty() ? state.p : upwind_p;
        const auto edges = cvfem_edges(mesh, compute_mobility(problem, state));
        const auto curve = mat.two_phase.curve;
        for (const auto& edge : edges) {
            const double c = edge_mobility(edge, state.s_n, up, curve) * edge.transmissibility;
            const double f = c * (state.p[edge.i] - state.p[edge.j]);
            r[po + edge.i] += f;
            r[po + edge.j] -= f;
            t.push_back({po + edge.i, po + edge.i, c});
            t.push_back({po + edge.j, po + edge.j, c});
            t.push_back({po + edge.i, po + edge.j, -c});
            t.push_back({po + edge.j, po + edge.i, -c});
        }
        if (storage) {
            for (int e = 0; e < mesh.element_count(); ++e) {
                const auto& conn = mesh.elements[e];
                const auto fe = flow_element(problem, e);
                for (int a = 0; a < 4; ++a) {
                    r[po + conn[a]] += fe.mass[a] * (state.phi[e] - state.phi_old[e]) / dt;
                    t.push_back({po + conn[a], fo + e, fe.mass[a] / dt});
                }
            }
        }
        for (const auto& w : problem.bcs.rate_wells) r[po + w.node] -= w.rate;
    }

    // Porosity rows: phi - Phi(grad u, p).
    const auto& model = mat.porosity;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto sv = shape_eval(mesh.element_coords(e), centre_ref, e);
        const auto& conn = mesh.elements[e];
        const Tensor2 g = displacement_gradient(mesh, state.u, e);
        const double pe = element_pressure(mesh, state.p, e);
        r[fo + e] = state.phi[e] - porosity_update(model, g, pe, e);
        t.push_back({fo + e, fo + e, 1.0});
        const Tensor2 s = porosity_sensitivity(model, g, pe);
        for (int b = 0; b < 4; ++b) {
            const Vec2 d = sv.gradients[b];
            t.push_back({fo + e, 2 * conn[b], -(s.xx * d.x + s.xy * d.y)});
            t.push_back({fo + e, 2 * conn[b] + 1, -(s.yx * d.x + s.yy * d.y)});
        }
        if (newton && model.kind == PorosityKind::large_deformation && model.c_r != 0.0) {
            PorosityModel geo = model;
            geo.c_r = 0.0;
            const double dphi_dp = model.c_r * porosity_update(geo, g, pe, e);
            for (int b = 0; b < 4; ++b) t.push_back({fo + e, po + conn[b], -0.25 * dphi_dp});
        }
    }

    SparseMatrix jac = SparseMatrix::from_triplets(lay.size(), std::move(t));
    // Dirichlet rows become identity with zero residual.
    std::vector<char> fixed(lay.size(), 0);
    for (const auto& [key, value] : problem.bcs.displacement) fixed[2 * key.first + key.second] = 1;
    for (const auto& [node, value] : problem.bcs.pressure) fixed[po + node] = 1;
    const auto offsets = jac.row_offsets();
    const auto cols = jac.col_indices();
    auto vals = jac.values();
    for (int i = 0; i < lay.size(); ++i) {
        if (fixed[i]) {
            r[i] = 0.0;
            for (int k = offsets[i]; k < offsets[i + 1]; ++k) vals[k] = cols[k] == i ? 1.0 : 0.0;
        } else {
            for (int k = offsets[i]; k < offsets[i + 1]; ++k)
                if (fixed[cols[k]]) vals[k] = 0.0;
        }
    }
    return {std::move(jac), std::move(r)};
}

}  // namespace poroflow
