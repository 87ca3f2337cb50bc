#include "eqopt/numkit.hpp"

#include <algorithm>
#include <cmath>

namespace eqopt {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* where)
{
    if (a != b) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major))
{
    require_same_size(data_.size(), rows * cols, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0)
{
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        require_same_size(r.size(), cols_, "Matrix");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

Matrix Matrix::diagonal(ConstSpan d)
{
    Matrix D(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = d[i];
    return D;
}

Vector Matrix::col(std::size_t j) const
{
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

void Matrix::set_col(std::size_t j, ConstSpan v)
{
    require_same_size(v.size(), rows_, "Matrix::set_col");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transpose() const
{
    Matrix T(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) T(j, i) = (*this)(i, j);
    return T;
}

double Matrix::frobenius_norm() const { return norm2(data_); }

double dot(ConstSpan a, ConstSpan b)
{
    require_same_size(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(ConstSpan a)
{
    // Scaled accumulation avoids overflow for large entries.
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double s = 0.0;
    for (double v : a) {
        const double t = v / scale;
        s += t * t;
    }
    return scale * std::sqrt(s);
}

Vector add(ConstSpan a, ConstSpan b)
{
    require_same_size(a.size(), b.size(), "add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector sub(ConstSpan a, ConstSpan b)
{
    require_same_size(a.size(), b.size(), "sub");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector scaled(double s, ConstSpan a)
{
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

void axpy(double a, ConstSpan x, std::span<double> y)
{
    require_same_size(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

bool all_finite(ConstSpan a)
{
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Vector matvec(const Matrix& M, ConstSpan v)
{
    require_same_size(v.size(), M.cols(), "matvec");
    Vector r(M.rows());
    for (std::size_t i = 0; i < M.rows(); ++i) r[i] = dot(M.row(i), v);
    return r;
}

Vector matvec_t(const Matrix& M, ConstSpan v)
{
    require_same_size(v.size(), M.rows(), "matvec_t");
    Vector r(M.cols(), 0.0);
    for (std::size_t i = 0; i < M.rows(); ++i) axpy(v[i], M.row(i), r);
    return r;
}

Matrix matmul(const Matrix& A, const Matrix& B)
{
    require_same_size(A.cols(), B.rows(), "matmul");
    Matrix C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        auto ci = C.row(i);
        for (std::size_t k = 0; k < A.cols(); ++k) axpy(A(i, k), B.row(k), ci);
    }
    return C;
}

Matrix matmul_tn(const Matrix& A, const Matrix& B)
{
    require_same_size(A.rows(), B.rows(), "matmul_tn");
    Matrix C(A.cols(), B.cols());
    for (std::size_t k = 0; k < A.rows(); ++k) {
        const auto ak = A.row(k);
        const auto bk = B.row(k);
        for (std::size_t i = 0; i < A.cols(); ++i) axpy(ak[i], bk, C.row(i));
    }
    return C;
}

double power_iteration_sym(const std::function<Vector(ConstSpan)>& apply, std::size_t n,
                           int maxit, double tol)
{
    if (n == 0) return 0.0;
    // Fixed, non-degenerate start vector keeps the estimate deterministic.
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.0 + 3.7 * static_cast<double>(i));
    double nx = norm2(x);
    for (double& v : x) v /= nx;

    double lambda = 0.0;
    for (int it = 0; it < maxit; ++it) {
        Vector y = apply(x);
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        const double next = dot(x, y); // Rayleigh quotient with unit x
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) return next;
        lambda = next;
    }
    throw NumericalError("power_iteration_sym: no convergence after " + std::to_string(maxit) +
                             " iterations (last estimate " + std::to_string(lambda) + ")",
                         lambda);
}

Vector cholesky_solve(const Matrix& A, ConstSpan b)
{
    const std::size_t n = A.rows();
    require_same_size(A.cols(), n, "cholesky_solve");
    require_same_size(b.size(), n, "cholesky_solve");
    Matrix Lf(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = A(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= Lf(j, k) * Lf(j, k);
        if (!(d > 0.0)) throw NumericalError("cholesky_solve: matrix not positive definite", d);
        const double ljj = std::sqrt(d);
        Lf(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= Lf(i, k) * Lf(j, k);
            Lf(i, j) = s / ljj;
        }
    }
    Vector y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) y[i] -= Lf(i, k) * y[k];
        y[i] /= Lf(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= Lf(k, ii) * y[k];
        y[ii] /= Lf(ii, ii);
    }
    return y;
}

std::pair<Complex, Complex> quadratic_roots(double b, double c)
{
    const double disc = b * b - 4.0 * c;
    if (disc < 0.0) {
        const double re = -0.5 * b;
        const double im = 0.5 * std::sqrt(-disc);
        return {Complex(re, im), Complex(re, -im)};
    }
    const double s1 = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    const double s2 = s1 != 0.0 ? c / s1 : 0.0;
    return {Complex(s1, 0.0), Complex(s2, 0.0)};
}

} // namespace eqopt
