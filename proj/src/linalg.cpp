#include "poroflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace poroflow {

LinearSolverError::LinearSolverError(const std::string& method, const std::string& what)
    : std::runtime_error(method + ": " + what), method_(method) {}

std::string to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::automatic: return "automatic";
        case SolveMethod::direct: return "direct";
        case SolveMethod::cg: return "cg";
        case SolveMethod::bicgstab: return "bicgstab";
    }
    return "unknown";
}

SparseMatrix::SparseMatrix(int n, std::vector<int> row_offsets, std::vector<int> cols,
                           std::vector<double> values)
    : n_(n), offsets_(std::move(row_offsets)), cols_(std::move(cols)), values_(std::move(values)) {
    if (n_ < 1) throw std::invalid_argument("sparse matrix dimension must be >= 1");
    if (static_cast<int>(offsets_.size()) != n_ + 1 || offsets_.front() != 0 ||
        offsets_.back() != static_cast<int>(cols_.size()) || cols_.size() != values_.size()) {
        throw std::invalid_argument("inconsistent CSR array sizes");
    }
    for (int i = 0; i < n_; ++i) {
        if (offsets_[i + 1] < offsets_[i]) throw std::invalid_argument("CSR offsets not monotone");
        for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            if (cols_[k] < 0 || cols_[k] >= n_) throw std::invalid_argument("CSR column out of range");
            if (k > offsets_[i] && cols_[k] <= cols_[k - 1]) {
                throw std::invalid_argument("CSR columns not strictly increasing in row " +
                                            std::to_string(i));
            }
        }
    }
}

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<int> offsets(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(t.size());
    vals.reserve(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k].row < 0 || t[k].row >= n || t[k].col < 0 || t[k].col >= n) {
            throw std::invalid_argument("triplet index out of range");
        }
        if (!cols.empty() && k > 0 && t[k].row == t[k - 1].row && t[k].col == t[k - 1].col) {
            vals.back() += t[k].value;
            continue;
        }
        cols.push_back(t[k].col);
        vals.push_back(t[k].value);
        ++offsets[t[k].row + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return SparseMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::identity(int n) {
    std::vector<int> offsets(static_cast<std::size_t>(n) + 1);
    std::iota(offsets.begin(), offsets.end(), 0);
    std::vector<int> cols(static_cast<std::size_t>(n));
    std::iota(cols.begin(), cols.end(), 0);
    return SparseMatrix(n, std::move(offsets), std::move(cols),
                        std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double SparseMatrix::at(int i, int j) const {
    const auto first = cols_.begin() + offsets_[i];
    const auto last = cols_.begin() + offsets_[i + 1];
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_.begin())];
}

Vector SparseMatrix::diagonal() const {
    Vector d(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) d[i] = at(i, i);
    return d;
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
    double scale = 0.0;
    for (double v : values_) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < n_; ++i) {
        for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            if (std::abs(values_[k] - at(cols_[k], i)) > rel_tol * scale) return false;
        }
    }
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector spmv(const SparseMatrix& a, std::span<const double> x) {
    if (static_cast<int>(x.size()) != a.size()) {
        throw std::invalid_argument("spmv: dimension mismatch (matrix " + std::to_string(a.size()) +
                                    ", vector " + std::to_string(x.size()) + ")");
    }
    const auto off = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    Vector y(x.size(), 0.0);
    for (int i = 0; i < a.size(); ++i) {
        double s = 0.0;
        for (int k = off[i]; k < off[i + 1]; ++k) s += vals[k] * x[cols[k]];
        y[i] = s;
    }
    return y;
}

std::vector<int> reverse_cuthill_mckee(const SparseMatrix& a) {
    const int n = a.size();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    const auto off = a.row_offsets();
    const auto cols = a.col_indices();
    for (int i = 0; i < n; ++i) {
        for (int k = off[i]; k < off[i + 1]; ++k) {
            const int j = cols[k];
            if (j == i) continue;
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& nb : adj) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    auto degree = [&](int v) { return static_cast<int>(adj[v].size()); };

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<char> placed(static_cast<std::size_t>(n), 0);
    std::vector<int> level(static_cast<std::size_t>(n), -1);

    // BFS returning the last level's minimum-degree node (pseudo-peripheral search).
    auto far_node = [&](int start) {
        std::vector<int> visited{start};
        level[start] = 0;
        std::queue<int> q;
        q.push(start);
        int last = start;
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (int w : adj[v]) {
                if (placed[w] || level[w] >= 0) continue;
                level[w] = level[v] + 1;
                visited.push_back(w);
                q.push(w);
                if (level[w] > level[last] || (level[w] == level[last] && degree(w) < degree(last))) {
                    last = w;
                }
            }
        }
        const int depth = level[last];
        for (int v : visited) level[v] = -1;
        return std::pair{last, depth};
    };

    for (int seed = 0; seed < n; ++seed) {
        if (placed[seed]) continue;
        int root = seed;
        int depth = -1;
        for (int pass = 0; pass < 4; ++pass) {
            const auto [cand, d] = far_node(root);
            if (d <= depth) break;
            depth = d;
            root = cand;
        }
        std::queue<int> q;
        q.push(root);
        placed[root] = 1;
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            order.push_back(v);
            std::vector<int> next;
            for (int w : adj[v]) {
                if (!placed[w]) {
                    placed[w] = 1;
                    next.push_back(w);
                }
            }
            std::stable_sort(next.begin(), next.end(),
                             [&](int x, int y) { return degree(x) < degree(y); });
            for (int w : next) q.push(w);
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

namespace {

/// LU with partial pivoting on LAPACK-style column-major band storage.
class BandLu {
public:
    BandLu(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1) {
        ab_.assign(static_cast<std::size_t>(ld_) * n_, 0.0);
        piv_.assign(static_cast<std::size_t>(n_), 0);
    }

    double& operator()(int i, int j) {
        return ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) + static_cast<std::size_t>(j) * ld_];
    }

    void factor() {
        const int kv = kl_ + ku_;
        for (int k = 0; k < n_; ++k) {
            const int last_row = std::min(n_ - 1, k + kl_);
            int p = k;
            double best = std::abs((*this)(k, k));
            for (int i = k + 1; i <= last_row; ++i) {
                const double v = std::abs((*this)(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            piv_[k] = p;
            if (best == 0.0) {
                throw LinearSolverError("direct", "zero pivot at column " + std::to_string(k));
            }
            const int last_col = std::min(n_ - 1, k + kv);
            if (p != k) {
                for (int j = k; j <= last_col; ++j) std::swap((*this)(k, j), (*this)(p, j));
            }
            const double pivot = (*this)(k, k);
            for (int i = k + 1; i <= last_row; ++i) {
                double& lik = (*this)(i, k);
                if (lik == 0.0) continue;
                lik /= pivot;
                const double l = lik;
                for (int j = k + 1; j <= last_col; ++j) (*this)(i, j) -= l * (*this)(k, j);
            }
        }
    }

    void solve(Vector& b) {
        const int kv = kl_ + ku_;
        for (int k = 0; k < n_; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            const int last_row = std::min(n_ - 1, k + kl_);
            for (int i = k + 1; i <= last_row; ++i) b[i] -= (*this)(i, k) * b[k];
        }
        for (int k = n_ - 1; k >= 0; --k) {
            const int last_col = std::min(n_ - 1, k + kv);
            double s = b[k];
            for (int j = k + 1; j <= last_col; ++j) s -= (*this)(k, j) * b[j];
            b[k] = s / (*this)(k, k);
        }
    }

private:
    int n_, kl_, ku_, ld_;
    std::vector<double> ab_;
    std::vector<int> piv_;
};

SolveResult solve_direct(const SparseMatrix& a, std::span<const double> b) {
    const int n = a.size();
    const std::vector<int> perm = reverse_cuthill_mckee(a);
    std::vector<int> inv(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) inv[perm[k]] = k;

    const auto off = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    int kl = 0;
    int ku = 0;
    for (int i = 0; i < n; ++i) {
        for (int k = off[i]; k < off[i + 1]; ++k) {
            const int d = inv[i] - inv[cols[k]];
            kl = std::max(kl, d);
            ku = std::max(ku, -d);
        }
    }
    BandLu lu(n, kl, ku);
    for (int i = 0; i < n; ++i) {
        for (int k = off[i]; k < off[i + 1]; ++k) lu(inv[i], inv[cols[k]]) += vals[k];
    }
    lu.factor();
    Vector y(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) y[k] = b[perm[k]];
    lu.solve(y);

    SolveResult res;
    res.x.assign(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) res.x[perm[k]] = y[k];
    const Vector ax = spmv(a, res.x);
    double rn = 0.0;
    for (int i = 0; i < n; ++i) rn += (ax[i] - b[i]) * (ax[i] - b[i]);
    const double bn = norm2(b);
    res.report.method = SolveMethod::direct;
    res.report.iterations = 1;
    res.report.final_residual = bn > 0.0 ? std::sqrt(rn) / bn : std::sqrt(rn);
    res.report.converged = std::isfinite(res.report.final_residual);
    if (!res.report.converged) throw LinearSolverError("direct", "non-finite solution");
    return res;
}

Vector inverse_diagonal(const SparseMatrix& a, const std::string& method) {
    Vector d = a.diagonal();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] == 0.0) {
            throw LinearSolverError(method, "zero diagonal entry at row " + std::to_string(i));
        }
        d[i] = 1.0 / d[i];
    }
    return d;
}

SolveResult solve_cg(const SparseMatrix& a, std::span<const double> b, const SolveOptions& opt) {
    const std::size_t n = b.size();
    SolveResult res;
    res.report.method = SolveMethod::cg;
    res.x.assign(n, 0.0);
    const double bn = norm2(b);
    if (bn == 0.0) {
        res.report.converged = true;
        return res;
    }
    const Vector dinv = inverse_diagonal(a, "cg");
    Vector r(b.begin(), b.end());
    Vector z(n), p(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    p = z;
    double rz = dot(r, z);
    Vector best = res.x;
    double best_res = 1.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const Vector ap = spmv(a, p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw LinearSolverError("cg", "breakdown: p^T A p = " + std::to_string(pap) +
                                              " (matrix not positive definite?)");
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
        const double rz_new = dot(r, z);
        const double rel = norm2(r) / bn;
        res.report.residual_history.push_back(rel);
        double energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) energy -= 0.5 * res.x[i] * (b[i] + r[i]);
        res.report.energy_history.push_back(energy);
        res.report.iterations = it;
        if (rel < best_res) {
            best_res = rel;
            best = res.x;
        }
        if (rel <= opt.tol) {
            res.report.converged = true;
            res.report.final_residual = rel;
            return res;
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res.x = std::move(best);
    res.report.final_residual = best_res;
    return res;
}

SolveResult solve_bicgstab(const SparseMatrix& a, std::span<const double> b,
                           const SolveOptions& opt) {
    const std::size_t n = b.size();
    SolveResult res;
    res.report.method = SolveMethod::bicgstab;
    res.x.assign(n, 0.0);
    const double bn = norm2(b);
    if (bn == 0.0) {
        res.report.converged = true;
        return res;
    }
    const Vector dinv = inverse_diagonal(a, "bicgstab");
    Vector r(b.begin(), b.end());
    const Vector r0 = r;
    Vector p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    Vector best = res.x;
    double best_res = 1.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const double rho_new = dot(r0, r);
        if (rho_new == 0.0) throw LinearSolverError("bicgstab", "breakdown: rho = 0");
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        for (std::size_t i = 0; i < n; ++i) ph[i] = dinv[i] * p[i];
        v = spmv(a, ph);
        const double r0v = dot(r0, v);
        if (r0v == 0.0) throw LinearSolverError("bicgstab", "breakdown: r0^T v = 0");
        alpha = rho / r0v;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) / bn <= opt.tol) {
            for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * ph[i];
            res.report.iterations = it;
            res.report.final_residual = norm2(s) / bn;
            res.report.residual_history.push_back(res.report.final_residual);
            res.report.converged = true;
            return res;
        }
        for (std::size_t i = 0; i < n; ++i) sh[i] = dinv[i] * s[i];
        t = spmv(a, sh);
        const double tt = dot(t, t);
        if (tt == 0.0) throw LinearSolverError("bicgstab", "breakdown: t = 0");
        omega = dot(t, s) / tt;
        if (omega == 0.0) throw LinearSolverError("bicgstab", "stagnation: omega = 0");
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        const double rel = norm2(r) / bn;
        res.report.residual_history.push_back(rel);
        double energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) energy -= 0.5 * res.x[i] * (b[i] + r[i]);
        res.report.energy_history.push_back(energy);
        res.report.iterations = it;
        if (rel < best_res) {
            best_res = rel;
            best = res.x;
        }
        if (rel <= opt.tol) {
            res.report.converged = true;
            res.report.final_residual = rel;
            return res;
        }
    }
    res.x = std::move(best);
    res.report.final_residual = best_res;
    return res;
}

}  // namespace

SolveResult solve(const SparseMatrix& a, std::span<const double> b, const SolveOptions& options) {
    if (static_cast<int>(b.size()) != a.size()) {
        throw std::invalid_argument("solve: dimension mismatch");
    }
    SolveMethod method = options.method;
    if (method == SolveMethod::automatic) {
        if (a.size() <= options.direct_limit) {
            method = SolveMethod::direct;
        } else {
            method = a.is_symmetric() ? SolveMethod::cg : SolveMethod::bicgstab;
        }
    }
    switch (method) {
        case SolveMethod::direct: return solve_direct(a, b);
        case SolveMethod::cg: return solve_cg(a, b, options);
        case SolveMethod::bicgstab: return solve_bicgstab(a, b, options);
        case SolveMethod::automatic: break;
    }
    throw std::logic_error("unreachable solve method");
}

}  // namespace poroflow
