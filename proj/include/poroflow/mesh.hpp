/**
 * @file mesh.hpp
 * @brief Structured quadrilateral meshes, bilinear shape functions and
 *        tensor-product Gauss quadrature.
 *
 * Nodes are numbered row-major (x fastest); element connectivity is
 * counterclockwise starting at the lower-left corner. One-dimensional
 * problems are run on single-row (or single-column) strips.
 */
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "poroflow/tensor.hpp"

namespace poroflow {

enum class Side { left, right, bottom, top };

inline constexpr std::array<Side, 4> all_sides = {Side::left, Side::right, Side::bottom,
                                                  Side::top};

std::string to_string(Side side);

/// A boundary edge: two node indices ordered counterclockwise around the domain
/// plus the element that owns it.
struct BoundaryEdge {
    int element = -1;
    int n0 = -1;
    int n1 = -1;
};

struct Mesh {
    int nx = 0;
    int ny = 0;
    double lx = 0.0;
    double ly = 0.0;
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 4>> elements;
    std::array<std::vector<int>, 4> side_nodes;           // indexed by Side
    std::array<std::vector<BoundaryEdge>, 4> side_edges;  // indexed by Side

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
    int node_index(int i, int j) const { return j * (nx + 1) + i; }
    int element_index(int i, int j) const { return j * nx + i; }

    const std::vector<int>& boundary_nodes(Side s) const {
        return side_nodes[static_cast<int>(s)];
    }
    const std::vector<BoundaryEdge>& boundary_edges(Side s) const {
        return side_edges[static_cast<int>(s)];
    }

    std::array<Vec2, 4> element_coords(int e) const;
    Vec2 element_center(int e) const;
    double element_area(int e) const;

    /// Node nearest to a point (ties broken by lowest index).
    int nearest_node(const Vec2& p) const;
};

class MeshError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an element has a non-positive Jacobian determinant.
class DegenerateElement : public std::runtime_error {
public:
    DegenerateElement(int element, double jac_det);
    int element() const { return element_; }
    double jac_det() const { return jac_det_; }

private:
    int element_;
    double jac_det_;
};

Mesh build_structured_grid(int nx, int ny, double lx, double ly);

struct ShapeValues {
    std::array<double, 4> values{};
    std::array<Vec2, 4> gradients{};  // physical gradients
    double jac_det = 0.0;
};

/// Bilinear shape functions at a reference point (xi, eta) in [-1,1]^2.
/// `element_id` only labels the error for a degenerate element.
ShapeValues shape_eval(const std::array<Vec2, 4>& coords, Vec2 ref_point,
                       int element_id = -1);

struct QuadraturePoint {
    Vec2 point;
    double weight = 0.0;
};

struct QuadratureRule {
    std::vector<QuadraturePoint> points;

    /// Tensor-product Gauss-Legendre rule with n points per axis (1..5).
    static QuadratureRule gauss(int n);
    /// The 2x2 rule used by every assembly routine.
    static const QuadratureRule& standard();
};

/// Integrate a constant 1 over the mesh (total area) with the standard rule.
double integrate_area(const Mesh& mesh);

}  // namespace poroflow
