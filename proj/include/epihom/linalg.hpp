#pragma once

#include <cstddef>
#include <vector>

#include "epihom/error.hpp"

namespace epihom {

/// Square sparse matrix assembled from triplets, compressed to CSR on
/// finalize(). Duplicate entries are summed. Iteration order is fixed, so
/// products and solves are deterministic.
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(int n) : n_(n) {}

    int size() const { return n_; }
    bool finalized() const { return finalized_; }

    void add(int i, int j, double v) {
        ti_.push_back(i);
        tj_.push_back(j);
        tv_.push_back(v);
    }

    void finalize();

    void multiply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        multiply(x, y);
        return y;
    }

    std::vector<double> diagonal() const;
    double max_abs() const;
    /// max_ij |a_ij - a_ji|
    double max_asymmetry() const;

    /// Symmetric elimination of Dirichlet constraints: moves coupling into
    /// rhs, then replaces constrained rows/columns by the identity.
    void eliminate_dirichlet(const std::vector<std::pair<int, double>>& constraints,
                             std::vector<double>& rhs);

    /// Debug dump: one "i j value" line per stored entry.
    std::string to_triplet_string() const;

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return col_; }
    const std::vector<double>& values() const { return val_; }
    std::vector<double>& values() { return val_; }

private:
    int n_ = 0;
    bool finalized_ = false;
    std::vector<int> ti_, tj_;
    std::vector<double> tv_;
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_;
};

struct CgOptions {
    double tol = 1e-12;      // relative residual target
    int max_iterations = 0;  // 0 -> 20*n + 200
    const std::vector<double>* initial_guess = nullptr;
};

/// Jacobi-preconditioned conjugate gradients. Throws "not-spd" when a
/// direction of non-positive curvature shows up and "solver-stagnation" when
/// the iteration cap is hit without reaching the target.
std::vector<double> cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                             const CgOptions& opts = {});

/// Dense row-major matrix with partial-pivoting LU. The factorization is the
/// direct-solve oracle for small systems and the workhorse for the dense
/// interface operators.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    std::vector<double> multiply(const std::vector<double>& x) const;

    /// In-place LU with partial pivoting; returns the row permutation.
    std::vector<int> lu_factor();
    std::vector<double> lu_solve(const std::vector<int>& perm,
                                 const std::vector<double>& b) const;

    static DenseMatrix from_sparse(const SparseMatrix& A);

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// One-shot dense solve (copies, factors, solves).
std::vector<double> dense_solve(DenseMatrix A, const std::vector<double>& b);

/// 2x2 matrix for effective tensors.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    Mat2 matmul(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Mat2 transposed() const { return {a11, a21, a12, a22}; }
    double norm() const;  // Frobenius
    static Mat2 identity(double s = 1.0) { return {s, 0.0, 0.0, s}; }
    static Mat2 rotation(double angle);
};

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

} // namespace epihom
