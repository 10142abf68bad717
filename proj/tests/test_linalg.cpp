#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "poroflow/linalg.hpp"

using namespace poroflow;

namespace {

SparseMatrix laplacian_1d(int n) {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0});
        if (i > 0) t.push_back({i, i - 1, -1.0});
        if (i + 1 < n) t.push_back({i, i + 1, -1.0});
    }
    return SparseMatrix::from_triplets(n, t);
}

// B^T B + n I with a sparse random B: SPD with a moderate spread of eigenvalues.
SparseMatrix random_spd(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i * 7 + j * 3) % 5 == 0 || i == j) b[i][j] = d(rng);
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = i == j ? 0.5 * n : 0.0;
            for (int k = 0; k < n; ++k) s += b[k][i] * b[k][j];
            if (s != 0.0) t.push_back({i, j, s});
        }
    }
    return SparseMatrix::from_triplets(n, t);
}

double rel_diff(const Vector& a, const Vector& b) {
    double d = 0.0, m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        m += b[i] * b[i];
    }
    return std::sqrt(d / m);
}

}  // namespace

TEST_CASE("CSR construction") {
    const auto a = SparseMatrix::from_triplets(2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 1, 3.0}, {0, 0, 1.0}});
    CHECK(a.at(0, 0) == 3.0);
    CHECK(a.at(1, 0) == 0.0);
    CHECK(a.nnz() == 3);
    CHECK_FALSE(a.is_symmetric());
    CHECK(laplacian_1d(5).is_symmetric());
    CHECK_THROWS_AS(SparseMatrix(2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(SparseMatrix(1, {0, 2}, {0, 0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("spmv") {
    const auto a = SparseMatrix::from_triplets(2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 1, 3.0}});
    const Vector y = spmv(a, Vector{1.0, 1.0});
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 3.0);
    const Vector x{4.0, -2.0, 7.0};
    CHECK(spmv(SparseMatrix::identity(3), x) == x);
    const auto zero = SparseMatrix::from_triplets(3, {});
    CHECK(spmv(zero, x) == Vector(3, 0.0));
    CHECK_THROWS_AS(spmv(a, x), std::invalid_argument);
}

TEST_CASE("identity and diagonal solves") {
    const Vector b{1.0, 2.0, 3.0, 4.0, 5.0};
    for (auto m : {SolveMethod::direct, SolveMethod::cg, SolveMethod::bicgstab}) {
        const auto r = solve(SparseMatrix::identity(5), b, {m});
        CHECK(r.report.converged);
        CHECK(r.report.iterations <= 1);
        CHECK(rel_diff(r.x, b) <= 1e-14);
        std::vector<Triplet> t;
        for (int i = 0; i < 5; ++i) t.push_back({i, i, i + 1.0});
        const auto d = solve(SparseMatrix::from_triplets(5, t), b, {m});
        for (double x : d.x) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cg and direct agree on SPD systems") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    {
        const auto a = laplacian_1d(5);
        Vector b(5);
        for (auto& x : b) x = d(rng);
        const auto xd = solve(a, b, {SolveMethod::direct});
        const auto xc = solve(a, b, {SolveMethod::cg});
        CHECK(rel_diff(xc.x, xd.x) <= 1e-8);
    }
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 5 + 5 * trial;
        const auto a = random_spd(n, rng);
        REQUIRE(a.is_symmetric());
        Vector b(n);
        for (auto& x : b) x = d(rng);
        const auto xd = solve(a, b, {SolveMethod::direct});
        const auto xc = solve(a, b, {SolveMethod::cg});
        const auto xb = solve(a, b, {SolveMethod::bicgstab});
        CHECK(xc.report.converged);
        CHECK(rel_diff(xc.x, xd.x) <= 1e-8);
        CHECK(rel_diff(xb.x, xd.x) <= 1e-8);
    }
}

TEST_CASE("preconditioned cg decreases the error energy monotonically") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 50;
        const auto a = trial == 0 ? laplacian_1d(n) : random_spd(n, rng);
        Vector b(n);
        for (auto& x : b) x = d(rng);
        const auto r = solve(a, b, {SolveMethod::cg, 1e-12});
        REQUIRE(r.report.converged);
        const auto& e = r.report.energy_history;
        REQUIRE(e.size() == r.report.residual_history.size());
        const double scale = std::abs(e.back());
        for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] <= e[k - 1] + 1e-13 * scale);
        CHECK(r.report.final_residual <= 1e-12);
    }
}

TEST_CASE("direct solve handles a nonsymmetric system needing pivoting") {
    const auto a = SparseMatrix::from_triplets(3, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 2.0}, {2, 2, 1.0}, {2, 0, 3.0}});
    const Vector x{1.0, -2.0, 0.5};
    const Vector b = spmv(a, x);
    CHECK(rel_diff(solve(a, b, {SolveMethod::direct}).x, x) <= 1e-14);
    CHECK(rel_diff(solve(a, b).x, x) <= 1e-14);
}

TEST_CASE("singular matrix is reported by the direct solver") {
    const auto a = SparseMatrix::from_triplets(2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
    CHECK_THROWS_AS(solve(a, Vector{1.0, 2.0}, {SolveMethod::direct}), LinearSolverError);
}

TEST_CASE("iterative non-convergence returns the best iterate") {
    const auto a = laplacian_1d(200);
    const Vector b(200, 1.0);
    const auto r = solve(a, b, {SolveMethod::cg, 1e-14, 3});
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.iterations == 3);
    const auto& h = r.report.residual_history;
    CHECK(r.report.final_residual == std::min(1.0, *std::min_element(h.begin(), h.end())));
}

TEST_CASE("reverse Cuthill-McKee returns a permutation") {
    const auto a = laplacian_1d(30);
    auto perm = reverse_cuthill_mckee(a);
    std::sort(perm.begin(), perm.end());
    for (int i = 0; i < 30; ++i) CHECK(perm[i] == i);
}
