#include "poroflow/mesh.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace poroflow {

std::string to_string(Side side) {
    switch (side) {
        case Side::left: return "left";
        case Side::right: return "right";
        case Side::bottom: return "bottom";
        case Side::top: return "top";
    }
    return "unknown";
}

namespace {

std::string degenerate_message(int element, double jac_det) {
    std::ostringstream os;
    os << "degenerate element " << element << " (jacobian determinant " << jac_det << ")";
    return os.str();
}

}  // namespace

DegenerateElement::DegenerateElement(int element, double jac_det)
    : std::runtime_error(degenerate_message(element, jac_det)),
      element_(element),
      jac_det_(jac_det) {}

Mesh build_structured_grid(int nx, int ny, double lx, double ly) {
    if (nx < 1 || ny < 1) {
        throw MeshError("element counts must be >= 1 (got nx=" + std::to_string(nx) +
                        ", ny=" + std::to_string(ny) + ")");
    }
    if (!(lx > 0.0) || !(ly > 0.0)) {
        throw MeshError("domain lengths must be positive");
    }

    Mesh m;
    m.nx = nx;
    m.ny = ny;
    m.lx = lx;
    m.ly = ly;
    m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    const double hx = lx / nx;
    const double hy = ly / ny;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            // Pin the far edges exactly so boundary coordinates are exact.
            const double x = (i == nx) ? lx : i * hx;
            const double y = (j == ny) ? ly : j * hy;
            m.nodes.push_back({x, y});
        }
    }

    m.elements.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            m.elements.push_back({m.node_index(i, j), m.node_index(i + 1, j),
                                  m.node_index(i + 1, j + 1), m.node_index(i, j + 1)});
        }
    }

    auto& bottom = m.side_nodes[static_cast<int>(Side::bottom)];
    auto& top = m.side_nodes[static_cast<int>(Side::top)];
    auto& left = m.side_nodes[static_cast<int>(Side::left)];
    auto& right = m.side_nodes[static_cast<int>(Side::right)];
    for (int i = 0; i <= nx; ++i) {
        bottom.push_back(m.node_index(i, 0));
        top.push_back(m.node_index(i, ny));
    }
    for (int j = 0; j <= ny; ++j) {
        left.push_back(m.node_index(0, j));
        right.push_back(m.node_index(nx, j));
    }

    // Edges are oriented counterclockwise around the domain boundary.
    auto& eb = m.side_edges[static_cast<int>(Side::bottom)];
    auto& er = m.side_edges[static_cast<int>(Side::right)];
    auto& et = m.side_edges[static_cast<int>(Side::top)];
    auto& el = m.side_edges[static_cast<int>(Side::left)];
    for (int i = 0; i < nx; ++i) {
        eb.push_back({m.element_index(i, 0), m.node_index(i, 0), m.node_index(i + 1, 0)});
        et.push_back({m.element_index(i, ny - 1), m.node_index(i + 1, ny), m.node_index(i, ny)});
    }
    for (int j = 0; j < ny; ++j) {
        er.push_back({m.element_index(nx - 1, j), m.node_index(nx, j), m.node_index(nx, j + 1)});
        el.push_back({m.element_index(0, j), m.node_index(0, j + 1), m.node_index(0, j)});
    }
    return m;
}

std::array<Vec2, 4> Mesh::element_coords(int e) const {
    const auto& conn = elements[static_cast<std::size_t>(e)];
    return {nodes[conn[0]], nodes[conn[1]], nodes[conn[2]], nodes[conn[3]]};
}

Vec2 Mesh::element_center(int e) const {
    const auto c = element_coords(e);
    return 0.25 * (c[0] + c[1] + c[2] + c[3]);
}

double Mesh::element_area(int e) const {
    const auto c = element_coords(e);
    // Shoelace formula.
    double a = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Vec2& p = c[k];
        const Vec2& q = c[(k + 1) % 4];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

int Mesh::nearest_node(const Vec2& p) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int n = 0; n < node_count(); ++n) {
        const double d = norm(nodes[n] - p);
        if (d < best_d) {
            best_d = d;
            best = n;
        }
    }
    return best;
}

ShapeValues shape_eval(const std::array<Vec2, 4>& coords, Vec2 ref, int element_id) {
    static constexpr std::array<double, 4> xi_n = {-1.0, 1.0, 1.0, -1.0};
    static constexpr std::array<double, 4> eta_n = {-1.0, -1.0, 1.0, 1.0};

    ShapeValues sv;
    std::array<Vec2, 4> dref{};
    for (int a = 0; a < 4; ++a) {
        sv.values[a] = 0.25 * (1.0 + xi_n[a] * ref.x) * (1.0 + eta_n[a] * ref.y);
        dref[a] = {0.25 * xi_n[a] * (1.0 + eta_n[a] * ref.y),
                   0.25 * eta_n[a] * (1.0 + xi_n[a] * ref.x)};
    }

    // J(i,j) = d x_i / d xi_j
    Tensor2 jac;
    for (int a = 0; a < 4; ++a) {
        jac.xx += coords[a].x * dref[a].x;
        jac.xy += coords[a].x * dref[a].y;
        jac.yx += coords[a].y * dref[a].x;
        jac.yy += coords[a].y * dref[a].y;
    }
    sv.jac_det = jac.det();
    if (!(sv.jac_det > 0.0)) {
        throw DegenerateElement(element_id, sv.jac_det);
    }
    const double inv = 1.0 / sv.jac_det;
    // grad N = J^{-T} dN/dxi
    for (int a = 0; a < 4; ++a) {
        sv.gradients[a] = {inv * (jac.yy * dref[a].x - jac.yx * dref[a].y),
                           inv * (-jac.xy * dref[a].x + jac.xx * dref[a].y)};
    }
    return sv;
}

QuadratureRule QuadratureRule::gauss(int n) {
    std::vector<double> x;
    std::vector<double> w;
    switch (n) {
        case 1:
            x = {0.0};
            w = {2.0};
            break;
        case 2: {
            const double g = 1.0 / std::sqrt(3.0);
            x = {-g, g};
            w = {1.0, 1.0};
            break;
        }
        case 3: {
            const double g = std::sqrt(0.6);
            x = {-g, 0.0, g};
            w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            break;
        }
        case 4: {
            const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
            x = {-b, -a, a, b};
            w = {wb, wa, wa, wb};
            break;
        }
        case 5: {
            const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
            const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
            x = {-b, -a, 0.0, a, b};
            w = {wb, wa, 128.0 / 225.0, wa, wb};
            break;
        }
        default:
            throw std::invalid_argument("Gauss rule supports 1..5 points per axis");
    }
    QuadratureRule rule;
    for (std::size_t j = 0; j < x.size(); ++j) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            rule.points.push_back({{x[i], x[j]}, w[i] * w[j]});
        }
    }
    return rule;
}

const QuadratureRule& QuadratureRule::standard() {
    static const QuadratureRule rule = gauss(2);
    return rule;
}

double integrate_area(const Mesh& mesh) {
    const auto& rule = QuadratureRule::standard();
    double total = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const auto coords = mesh.element_coords(e);
        for (const auto& qp : rule.points) {
            total += qp.weight * shape_eval(coords, qp.point, e).jac_det;
        }
    }
    return total;
}

}  // namespace poroflow
