#pragma once

// Dense real/complex numerics used by every other module: vectors, row-major
// matrices, products, a one-sided Jacobi SVD, power iteration, Cholesky and
// quadratic roots. All reductions run sequentially so results are
// bit-reproducible for a fixed build.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eqopt {

using Vector = std::vector<double>;
using Complex = std::complex<double>;
using ConstSpan = std::span<const double>;

/// Raised when an iterative numerical kernel fails to converge. Carries the
/// last residual (or estimate) so callers can report how close it got.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(ConstSpan d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    ConstSpan row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    Vector col(std::size_t j) const;
    void set_col(std::size_t j, ConstSpan v);

    const std::vector<double>& data() const noexcept { return data_; }

    Matrix transpose() const;
    double frobenius_norm() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct SvdResult {
    Matrix U; ///< rows x rows, orthogonal
    Vector S; ///< min(rows, cols) singular values, nonincreasing
    Matrix V; ///< cols x cols, orthogonal
};

// Vector kernels. Sizes must agree; mismatches throw std::invalid_argument.
double dot(ConstSpan a, ConstSpan b);
double norm2(ConstSpan a);
Vector add(ConstSpan a, ConstSpan b);
Vector sub(ConstSpan a, ConstSpan b);
Vector scaled(double s, ConstSpan a);
/// y <- y + a * x
void axpy(double a, ConstSpan x, std::span<double> y);
bool all_finite(ConstSpan a);

Vector matvec(const Matrix& M, ConstSpan v);
/// Applies M^T without forming the transpose.
Vector matvec_t(const Matrix& M, ConstSpan v);
Matrix matmul(const Matrix& A, const Matrix& B);
/// A^T B without forming A^T.
Matrix matmul_tn(const Matrix& A, const Matrix& B);

/// Full SVD M = U diag(S) V^T via one-sided Jacobi (row-cyclic sweeps, at most
/// 60). U and V are square; columns beyond the numerical rank are completed to
/// an orthonormal basis.
SvdResult svd(const Matrix& M);

/// Reassembles U[:, :k] diag(S) V[:, :k]^T.
Matrix svd_reconstruct(const SvdResult& f);

/// Dominant eigenvalue of a symmetric positive semidefinite operator.
double power_iteration_sym(const std::function<Vector(ConstSpan)>& apply, std::size_t n,
                           int maxit, double tol);

/// Solves A x = b for symmetric positive definite A.
Vector cholesky_solve(const Matrix& A, ConstSpan b);

/// Both roots of s^2 + b s + c, larger-magnitude root first.
std::pair<Complex, Complex> quadratic_roots(double b, double c);

} // namespace eqopt
