#include "epihom/linalg.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <cmath>
#include <numeric>

namespace epihom {

void SparseMatrix::finalize() {
    if (finalized_) return;
    std::vector<int> count(n_ + 1, 0);
    for (int i : ti_) ++count[i + 1];
    for (int i = 0; i < n_; ++i) count[i + 1] += count[i];
    std::vector<int> col(ti_.size());
    std::vector<double> val(ti_.size());
    std::vector<int> cursor(count.begin(), count.end() - 1);
    for (std::size_t k = 0; k < ti_.size(); ++k) {
        int pos = cursor[ti_[k]]++;
        col[pos] = tj_[k];
        val[pos] = tv_[k];
    }
    row_ptr_ = std::move(count);
    col_.assign(ti_.size(), 0);
    val_.assign(ti_.size(), 0.0);
    // Sort each row by column and merge duplicates.
    std::vector<std::pair<int, double>> row;
    int out = 0;
    std::vector<int> new_ptr(n_ + 1, 0);
    for (int i = 0; i < n_; ++i) {
        row.clear();
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            row.emplace_back(col[k], val[k]);
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k > 0 && row[k].first == col_[out - 1]) {
                val_[out - 1] += row[k].second;
            } else {
                col_[out] = row[k].first;
                val_[out] = row[k].second;
                ++out;
            }
        }
        new_ptr[i + 1] = out;
    }
    col_.resize(out);
    val_.resize(out);
    row_ptr_ = std::move(new_ptr);
    ti_.clear();
    tj_.clear();
    tv_.clear();
    ti_.shrink_to_fit();
    tj_.shrink_to_fit();
    tv_.shrink_to_fit();
    finalized_ = true;
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            s += val_[k] * x[col_[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (col_[k] == i) d[i] = val_[k];
    return d;
}

double SparseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : val_) m = std::max(m, std::abs(v));
    return m;
}

double SparseMatrix::max_asymmetry() const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i) {
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            int j = col_[k];
            double aji = 0.0;
            for (int l = row_ptr_[j]; l < row_ptr_[j + 1]; ++l)
                if (col_[l] == i) { aji = val_[l]; break; }
            worst = std::max(worst, std::abs(val_[k] - aji));
        }
    }
    return worst;
}

void SparseMatrix::eliminate_dirichlet(
    const std::vector<std::pair<int, double>>& constraints, std::vector<double>& rhs) {
    if (!finalized_) finalize();
    std::vector<char> fixed(n_, 0);
    std::vector<double> value(n_, 0.0);
    for (const auto& [dof, g] : constraints) {
        fixed[dof] = 1;
        value[dof] = g;
    }
    for (int i = 0; i < n_; ++i) {
        if (fixed[i]) continue;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            int j = col_[k];
            if (fixed[j]) {
                rhs[i] -= val_[k] * value[j];
                val_[k] = 0.0;
            }
        }
    }
    for (int i = 0; i < n_; ++i) {
        if (!fixed[i]) continue;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            val_[k] = (col_[k] == i) ? 1.0 : 0.0;
        rhs[i] = value[i];
    }
}

std::string SparseMatrix::to_triplet_string() const {
    std::string out;
    char buf[64];
    for (int i = 0; i < n_; ++i) {
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", i, col_[k], val_[k]);
            out += buf;
        }
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                             const CgOptions& opts) {
    int n = A.size();
    if (!A.finalized()) throw Error("not-finalized", "finalize matrix before solving");
    std::vector<double> x(n, 0.0);
    if (opts.initial_guess) x = *opts.initial_guess;

    std::vector<double> d = A.diagonal();
    for (double& v : d) {
        if (v <= 0.0) throw Error("not-spd", "non-positive diagonal entry");
        v = 1.0 / v;
    }

    double bnorm = norm2(b);
    if (bnorm == 0.0) return std::vector<double>(n, 0.0);

    std::vector<double> r(n), z(n), p(n), q(n);
    A.multiply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    for (int i = 0; i < n; ++i) z[i] = d[i] * r[i];
    p = z;
    double rz = dot(r, z);
    int max_it = opts.max_iterations > 0 ? opts.max_iterations : 20 * n + 200;
    double best = norm2(r) / bnorm;
    for (int it = 0; it < max_it; ++it) {
        if (norm2(r) / bnorm <= opts.tol) return x;
        A.multiply(p, q);
        double pq = dot(p, q);
        if (pq <= 0.0) throw Error("not-spd", "non-positive curvature direction in CG");
        double alpha = rz / pq;
        for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];
        for (int i = 0; i < n; ++i) z[i] = d[i] * r[i];
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        best = std::min(best, norm2(r) / bnorm);
    }
    if (norm2(r) / bnorm <= opts.tol) return x;
    // Near machine precision the recurrence can stall just above a very tight
    // target; accept when within a small factor of it.
    if (best <= 64.0 * opts.tol) return x;
    throw Error("solver-stagnation", "CG did not reach the residual target");
}

std::vector<double> DenseMatrix::multiply(const std::vector<double>& x) const {
    std::vector<double> y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

std::vector<int> DenseMatrix::lu_factor() {
    int n = rows_;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double big = std::abs(at(k, k));
        for (int i = k + 1; i < n; ++i) {
            double v = std::abs(at(i, k));
            if (v > big) { big = v; piv = i; }
        }
        if (big == 0.0) throw Error("singular-matrix", "zero pivot in LU");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(at(k, j), at(piv, j));
            std::swap(perm[k], perm[piv]);
        }
        for (int i = k + 1; i < n; ++i) {
            double f = at(i, k) / at(k, k);
            at(i, k) = f;
            for (int j = k + 1; j < n; ++j) at(i, j) -= f * at(k, j);
        }
    }
    return perm;
}

std::vector<double> DenseMatrix::lu_solve(const std::vector<int>& perm,
                                          const std::vector<double>& b) const {
    int n = rows_;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (int i = 1; i < n; ++i) {
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= at(i, j) * x[j];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= at(i, j) * x[j];
        x[i] = s / at(i, i);
    }
    return x;
}

DenseMatrix DenseMatrix::from_sparse(const SparseMatrix& A) {
    DenseMatrix d(A.size(), A.size());
    const auto& ptr = A.row_ptr();
    const auto& col = A.cols();
    const auto& val = A.values();
    for (int i = 0; i < A.size(); ++i)
        for (int k = ptr[i]; k < ptr[i + 1]; ++k) d.at(i, col[k]) += val[k];
    return d;
}

std::vector<double> dense_solve(DenseMatrix A, const std::vector<double>& b) {
    auto perm = A.lu_factor();
    return A.lu_solve(perm, b);
}

double Mat2::norm() const {
    return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
}

Mat2 Mat2::rotation(double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c, -s, s, c};
}

} // namespace epihom
