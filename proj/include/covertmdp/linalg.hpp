// Small dense linear algebra: enough for desk-scale MDPs, no external deps.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace covertmdp {

using Vec = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<Vec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return d_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {d_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {d_.data() + i * cols_, cols_}; }

    Vec& data() { return d_; }
    const Vec& data() const { return d_; }

    Matrix transposed() const;

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec d_;
};

// Compensated (Kahan) accumulator; used wherever long sums must not drift.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    void merge(const KahanSum& o) {
        add(o.s_);
        add(-o.c_);
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Solves A x = b by LU with partial pivoting. Throws std::runtime_error on a
// numerically singular pivot.
Vec solve_linear(Matrix a, Vec b);

// One-sided Jacobi SVD of an m-by-n matrix. Returns singular values (length n,
// descending) and the right singular vectors V (n-by-n, columns aligned with
// the singular values).
struct SvdResult {
    Vec singular_values;
    Matrix v;
};
SvdResult jacobi_svd(const Matrix& a);

// Columns of V whose singular values are <= tol; orthonormal basis of null(A).
Matrix null_space(const Matrix& a, double tol);

std::size_t rank_from_singular_values(const Vec& sv, double tol);

double dot(std::span<const double> a, std::span<const double> b);
double linf_diff(const Matrix& a, const Matrix& b);

}  // namespace covertmdp
