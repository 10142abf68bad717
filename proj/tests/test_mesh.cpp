#include <doctest.h>

#include <cmath>

#include "poroflow/mesh.hpp"

using namespace poroflow;

TEST_CASE("structured grid counts and numbering") {
    const Mesh m = build_structured_grid(3, 2, 3.0, 1.0);
    CHECK(m.node_count() == 12);
    CHECK(m.element_count() == 6);
    CHECK(m.node_index(3, 2) == 11);
    CHECK(m.nodes[m.node_index(3, 2)].x == doctest::Approx(3.0));
    CHECK(m.nodes[m.node_index(3, 2)].y == doctest::Approx(1.0));
    // counterclockwise from the lower-left corner
    const auto& e = m.elements[m.element_index(1, 1)];
    CHECK(e[0] == m.node_index(1, 1));
    CHECK(e[1] == m.node_index(2, 1));
    CHECK(e[2] == m.node_index(2, 2));
    CHECK(e[3] == m.node_index(1, 2));
    CHECK(m.boundary_nodes(Side::left).size() == 3);
    CHECK(m.boundary_nodes(Side::top).size() == 4);
    CHECK(m.boundary_edges(Side::bottom).size() == 3);
}

TEST_CASE("invalid grids are rejected") {
    CHECK_THROWS_AS(build_structured_grid(0, 1, 1.0, 1.0), MeshError);
    CHECK_THROWS_AS(build_structured_grid(1, 1, -1.0, 1.0), MeshError);
}

TEST_CASE("total area by quadrature") {
    CHECK(integrate_area(build_structured_grid(7, 5, 2.0, 0.5)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shape functions: partition of unity and zero-sum gradients") {
    const std::array<Vec2, 4> coords = {Vec2{0.0, 0.0}, Vec2{2.0, 0.2}, Vec2{2.3, 1.4}, Vec2{-0.1, 1.0}};
    for (double xi : {-1.0, -0.3, 0.0, 0.77, 1.0}) {
        for (double eta : {-1.0, 0.1, 0.5, 1.0}) {
            const auto s = shape_eval(coords, {xi, eta});
            double sum = 0.0;
            Vec2 g{};
            for (int a = 0; a < 4; ++a) {
                sum += s.values[a];
                g += s.gradients[a];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(std::abs(g.x) <= 1e-12);
            CHECK(std::abs(g.y) <= 1e-12);
            CHECK(s.jac_det > 0.0);
        }
    }
}

TEST_CASE("shape function gradients reproduce a linear field") {
    const std::array<Vec2, 4> coords = {Vec2{0.0, 0.0}, Vec2{1.5, 0.0}, Vec2{1.5, 0.5}, Vec2{0.0, 0.5}};
    auto f = [](Vec2 x) { return 2.0 * x.x - 3.0 * x.y + 1.0; };
    const auto s = shape_eval(coords, {0.2, -0.4});
    Vec2 g{};
    for (int a = 0; a < 4; ++a) g += f(coords[a]) * s.gradients[a];
    CHECK(g.x == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g.y == doctest::Approx(-3.0).epsilon(1e-13));
}

TEST_CASE("degenerate element names itself") {
    const std::array<Vec2, 4> flipped = {Vec2{0.0, 0.0}, Vec2{0.0, 1.0}, Vec2{1.0, 1.0}, Vec2{1.0, 0.0}};
    try {
        shape_eval(flipped, {0.0, 0.0}, 17);
        FAIL("expected DegenerateElement");
    } catch (const DegenerateElement& e) {
        CHECK(e.element() == 17);
        CHECK(e.jac_det() < 0.0);
    }
}

TEST_CASE("gauss rules integrate polynomials exactly") {
    // n points per axis are exact up to degree 2n - 1
    for (int n = 1; n <= 5; ++n) {
        const auto rule = QuadratureRule::gauss(n);
        const int deg = 2 * n - 1;
        double s = 0.0;
        double w = 0.0;
        for (const auto& q : rule.points) {
            s += q.weight * std::pow(q.point.x, deg - 1) * std::pow(q.point.y, 2 * ((deg - 1) / 2));
            w += q.weight;
        }
        const auto mono = [](int k) { return k % 2 ? 0.0 : 2.0 / (k + 1); };
        CHECK(w == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(s == doctest::Approx(mono(deg - 1) * mono(2 * ((deg - 1) / 2))).epsilon(1e-13));
    }
    CHECK(QuadratureRule::standard().points.size() == 4);
    CHECK_THROWS(QuadratureRule::gauss(6));
}

TEST_CASE("nearest node breaks ties by lowest index") {
    const Mesh m = build_structured_grid(2, 2, 1.0, 1.0);
    CHECK(m.nearest_node({0.5, 0.5}) == m.node_index(1, 1));
    CHECK(m.nearest_node({0.25, 0.0}) == m.node_index(0, 0));
    CHECK(m.nearest_node({1.2, 1.3}) == m.node_index(2, 2));
}
