/**
 * @file linalg.hpp
 * @brief Compressed-row sparse matrices and the linear solvers used by every
 *        assembled system.
 *
 * Three solvers are provided:
 *  - direct:   reverse Cuthill-McKee reordering followed by banded LU with
 *              partial pivoting (exact up to rounding, ignores tol/max_iter);
 *  - cg:       Jacobi-preconditioned conjugate gradients (SPD systems);
 *  - bicgstab: Jacobi-preconditioned BiCGStab (general systems).
 */
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace poroflow {

using Vector = std::vector<double>;

struct Triplet {
    int row;
    int col;
    double value;
};

class SparseMatrix {
public:
    SparseMatrix() = default;
    /// Takes ownership of CSR arrays; throws std::invalid_argument on
    /// malformed structure (non-monotone offsets, unsorted/duplicate columns).
    SparseMatrix(int n, std::vector<int> row_offsets, std::vector<int> cols,
                 std::vector<double> values);

    /// Duplicate (row, col) entries are summed; explicit zeros are kept.
    static SparseMatrix from_triplets(int n, std::vector<Triplet> triplets);
    static SparseMatrix identity(int n);

    int size() const { return n_; }
    int nnz() const { return static_cast<int>(values_.size()); }
    std::span<const int> row_offsets() const { return offsets_; }
    std::span<const int> col_indices() const { return cols_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    /// Entry (i, j), zero when structurally absent.
    double at(int i, int j) const;
    Vector diagonal() const;
    bool is_symmetric(double rel_tol = 1e-12) const;

private:
    int n_ = 0;
    std::vector<int> offsets_;
    std::vector<int> cols_;
    std::vector<double> values_;
};

/// Assembled linear system A x = b.
struct SparseSystem {
    SparseMatrix matrix;
    Vector rhs;
};

class LinearSolverError : public std::runtime_error {
public:
    LinearSolverError(const std::string& method, const std::string& what);
    const std::string& method() const { return method_; }

private:
    std::string method_;
};

enum class SolveMethod { automatic, direct, cg, bicgstab };

std::string to_string(SolveMethod m);

struct LinearSolveReport {
    SolveMethod method = SolveMethod::direct;
    int iterations = 0;
    double final_residual = 0.0;  // ||A x - b|| / ||b||
    bool converged = false;
    Vector residual_history;      // per iteration, iterative methods only
    /// cg only: f(x_k) = x^T A x / 2 - b^T x, which equals ||x - x*||_A^2 / 2
    /// up to a constant and is non-increasing in exact arithmetic.
    Vector energy_history;
};

struct SolveOptions {
    SolveMethod method = SolveMethod::automatic;
    double tol = 1e-12;
    int max_iter = 10000;
    /// automatic picks direct up to this size.
    int direct_limit = 2000;
};

struct SolveResult {
    Vector x;
    LinearSolveReport report;
};

Vector spmv(const SparseMatrix& a, std::span<const double> x);

SolveResult solve(const SparseMatrix& a, std::span<const double> b,
                  const SolveOptions& options = {});

/// Reverse Cuthill-McKee ordering of the symmetrised sparsity graph;
/// perm[new] = old.
std::vector<int> reverse_cuthill_mckee(const SparseMatrix& a);

double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace poroflow
