#include "eqopt/numkit.hpp"
#include "eqopt/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace eqopt;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, Rng& rng)
{
    Matrix M(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) M(i, j) = rng.normal();
    return M;
}

double orthonormality_error(const Matrix& Q)
{
    const Matrix G = matmul_tn(Q, Q);
    double worst = 0.0;
    for (std::size_t i = 0; i < G.rows(); ++i)
        for (std::size_t j = 0; j < G.cols(); ++j) worst = std::max(worst, std::abs(G(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

double diff_fro(const Matrix& A, const Matrix& B)
{
    double s = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) s += (A(i, j) - B(i, j)) * (A(i, j) - B(i, j));
    return std::sqrt(s);
}

} // namespace

TEST_CASE("matvec examples")
{
    CHECK(matvec(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
    CHECK(matvec(Matrix{{1, 2}, {3, 4}}, Vector{1, 1}) == Vector{3, 7});
    CHECK(matvec(Matrix(2, 2), Vector{5, 6}) == Vector{0, 0});
    CHECK_THROWS_AS(matvec(Matrix(2, 3), Vector{1, 2}), std::invalid_argument);
}

TEST_CASE("matvec_t examples")
{
    CHECK(matvec_t(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
    CHECK(matvec_t(Matrix{{1, 2}, {3, 4}}, Vector{1, 1}) == Vector{4, 6});
    CHECK(matvec_t(Matrix{{1, 2, 3}}, Vector{2}) == Vector{2, 4, 6});
    CHECK_THROWS_AS(matvec_t(Matrix(2, 3), Vector{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("adjoint identity <M^T u, v> = <u, M v>")
{
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const std::size_t r = 1 + rng.below(40), c = 1 + rng.below(40);
        const Matrix M = gaussian(r, c, rng);
        Vector u(r), v(c);
        for (auto& x : u) x = rng.normal();
        for (auto& x : v) x = rng.normal();
        const double lhs = dot(matvec_t(M, u), v);
        const double rhs = dot(u, matvec(M, v));
        const double scale = M.frobenius_norm() * norm2(u) * norm2(v);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
        CHECK(matvec_t(M, u) == matvec(M.transpose(), u));
    }
}

TEST_CASE("norm2 survives extreme magnitudes")
{
    CHECK(norm2(Vector{3e200, 4e200}) == doctest::Approx(5e200));
    CHECK(norm2(Vector{3e-200, 4e-200}) == doctest::Approx(5e-200));
    CHECK(norm2(Vector{}) == 0.0);
}

TEST_CASE("svd of a diagonal matrix")
{
    const SvdResult f = svd(Matrix{{3, 0}, {0, 1}});
    CHECK(f.S[0] == doctest::Approx(3.0));
    CHECK(f.S[1] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(std::abs(f.U(i, i)) - 1.0) < 1e-14);
        CHECK(std::abs(std::abs(f.V(i, i)) - 1.0) < 1e-14);
    }
}

TEST_CASE("svd of the zero matrix")
{
    const SvdResult f = svd(Matrix(4, 3));
    CHECK(f.S == Vector(3, 0.0));
    CHECK(orthonormality_error(f.U) < 1e-10);
    CHECK(orthonormality_error(f.V) < 1e-10);
}

TEST_CASE("svd of a 20x8 Gaussian matrix")
{
    Rng rng(3);
    const Matrix M = gaussian(20, 8, rng);
    const SvdResult f = svd(M);
    CHECK(diff_fro(svd_reconstruct(f), M) <= 1e-9 * M.frobenius_norm());
}

TEST_CASE("svd invariants on 200 random matrices")
{
    Rng rng(2024);
    for (int t = 0; t < 200; ++t) {
        const std::size_t r = 1 + rng.below(100), c = 1 + rng.below(100);
        Matrix M = gaussian(r, c, rng);
        if (t % 5 == 0 && std::min(r, c) > 2) {
            // rank-deficient: duplicate a column
            for (std::size_t i = 0; i < r; ++i) M(i, 1) = 2.0 * M(i, 0);
        }
        const SvdResult f = svd(M);
        REQUIRE(f.U.rows() == r);
        REQUIRE(f.U.cols() == r);
        REQUIRE(f.V.rows() == c);
        REQUIRE(f.V.cols() == c);
        REQUIRE(f.S.size() == std::min(r, c));
        CHECK(orthonormality_error(f.U) <= 1e-10);
        CHECK(orthonormality_error(f.V) <= 1e-10);
        CHECK(diff_fro(svd_reconstruct(f), M) <= 1e-9 * M.frobenius_norm());
        for (std::size_t i = 0; i + 1 < f.S.size(); ++i) CHECK(f.S[i] >= f.S[i + 1]);
        CHECK(f.S.back() >= 0.0);
    }
}

TEST_CASE("svd rejects non-finite input")
{
    Matrix M(2, 2);
    M(0, 0) = std::nan("");
    CHECK_THROWS(svd(M));
}

TEST_CASE("power iteration examples")
{
    const auto diag41 = [](ConstSpan v) { return Vector{4 * v[0], v[1]}; };
    CHECK(std::abs(power_iteration_sym(diag41, 2, 10000, 1e-12) - 4.0) <= 1e-8);
    CHECK(power_iteration_sym([](ConstSpan v) { return Vector(v.size(), 0.0); }, 5, 100, 1e-12) == 0.0);

    Rng rng(7);
    const Matrix A = gaussian(30, 10, rng);
    const double expected = std::pow(svd(A).S[0], 2);
    const double got =
        power_iteration_sym([&](ConstSpan v) { return matvec_t(A, matvec(A, v)); }, 10, 100000, 1e-13);
    CHECK(std::abs(got - expected) <= 1e-6 * expected);
}

TEST_CASE("power iteration reports exhaustion")
{
    // two nearly equal dominant eigenvalues converge slowly
    const auto op = [](ConstSpan v) { return Vector{1.0 * v[0], 0.999999 * v[1]}; };
    CHECK_THROWS_AS(power_iteration_sym(op, 2, 3, 1e-15), NumericalError);
}

TEST_CASE("quadratic roots examples")
{
    auto [a, b] = quadratic_roots(-3, 2);
    CHECK(std::abs(a - Complex(2, 0)) < 1e-15);
    CHECK(std::abs(b - Complex(1, 0)) < 1e-15);
    std::tie(a, b) = quadratic_roots(0, 1);
    CHECK(std::abs(a.real()) < 1e-15);
    CHECK(std::abs(std::abs(a.imag()) - 1.0) < 1e-15);
    CHECK(std::abs(a - std::conj(b)) < 1e-15);
    std::tie(a, b) = quadratic_roots(0, 0);
    CHECK(a == Complex(0, 0));
    CHECK(b == Complex(0, 0));
}

TEST_CASE("quadratic roots satisfy Vieta")
{
    Rng rng(5);
    for (int t = 0; t < 2000; ++t) {
        const double b = rng.normal() * std::pow(10.0, rng.uniform() * 8 - 4);
        const double c = rng.normal() * std::pow(10.0, rng.uniform() * 8 - 4);
        const auto [s1, s2] = quadratic_roots(b, c);
        const double sb = std::max({std::abs(b), std::abs(s1), std::abs(s2)});
        CHECK(std::abs(s1 + s2 + b) <= 1e-12 * sb);
        CHECK(std::abs(s1 * s2 - c) <= 1e-12 * std::max(std::abs(c), std::abs(s1) * std::abs(s2)));
        CHECK(std::abs(s1) >= std::abs(s2));
    }
}

TEST_CASE("cholesky solve")
{
    const Matrix A{{4, 2}, {2, 3}};
    const Vector x = cholesky_solve(A, Vector{2, 1});
    CHECK(x[0] == doctest::Approx(0.5));
    CHECK(x[1] == doctest::Approx(0.0));
    CHECK_THROWS(cholesky_solve(Matrix{{1, 2}, {2, 1}}, Vector{1, 1}));
}
