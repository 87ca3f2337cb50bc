#include "eqopt/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace eqopt {

namespace {

constexpr int kMaxSweeps = 60;

using Columns = std::vector<Vector>;

Columns to_columns(const Matrix& M)
{
    Columns c(M.cols(), Vector(M.rows()));
    for (std::size_t i = 0; i < M.rows(); ++i)
        for (std::size_t j = 0; j < M.cols(); ++j) c[j][i] = M(i, j);
    return c;
}

Matrix from_columns(const Columns& c, std::size_t rows)
{
    Matrix M(rows, c.size());
    for (std::size_t j = 0; j < c.size(); ++j) M.set_col(j, c[j]);
    return M;
}

// Extends an orthonormal set to a basis of R^dim with twice-iterated
// Gram-Schmidt against the standard basis vectors. The first pass only takes
// well-conditioned candidates; later passes lower the bar to 0.5/sqrt(dim),
// which some e_i always clears while the basis is incomplete.
void complete_basis(Columns& basis, std::size_t dim)
{
    double threshold = 0.5;
    while (basis.size() < dim) {
        const std::size_t before = basis.size();
        for (std::size_t e = 0; e < dim && basis.size() < dim; ++e) {
            Vector v(dim, 0.0);
            v[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& b : basis) axpy(-dot(b, v), b, v);
            const double nv = norm2(v);
            if (nv < threshold) continue;
            for (double& x : v) x /= nv;
            basis.push_back(std::move(v));
        }
        if (basis.size() == before && threshold <= 0.5 / std::sqrt(static_cast<double>(dim)))
            throw NumericalError("svd: basis completion stalled", static_cast<double>(dim - basis.size()));
        threshold = 0.5 / std::sqrt(static_cast<double>(dim));
    }
}

} // namespace

SvdResult svd(const Matrix& M)
{
    const std::size_t rows = M.rows();
    const std::size_t cols = M.cols();
    const std::size_t k = std::min(rows, cols);
    if (!all_finite(M.data())) throw std::invalid_argument("svd: non-finite entries");

    const double fro = M.frobenius_norm();
    if (fro == 0.0) return {Matrix::identity(rows), Vector(k, 0.0), Matrix::identity(cols)};

    // Orthogonalize the columns of a tall B (p >= q); a wide input is
    // handled through its transpose and the factors are swapped at the end.
    const bool wide = rows < cols;
    Columns b = to_columns(wide ? M.transpose() : M);
    const std::size_t p = wide ? cols : rows;
    const std::size_t q = k;
    Columns v(q, Vector(q, 0.0));
    for (std::size_t j = 0; j < q; ++j) v[j][j] = 1.0;

    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double rel_tol = static_cast<double>(p) * eps;
    const double abs_floor = (eps * eps * fro) * (eps * eps * fro);

    double worst = 0.0;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        converged = true;
        worst = 0.0;
        for (std::size_t i = 0; i + 1 < q; ++i) {
            for (std::size_t j = i + 1; j < q; ++j) {
                const double alpha = dot(b[i], b[i]);
                const double beta = dot(b[j], b[j]);
                const double gamma = dot(b[i], b[j]);
                const double scale = std::sqrt(alpha * beta);
                if (scale > 0.0) worst = std::max(worst, std::abs(gamma) / scale);
                if (std::abs(gamma) <= rel_tol * scale || std::abs(gamma) <= abs_floor) continue;
                converged = false;

                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < p; ++r) {
                    const double bi = b[i][r];
                    const double bj = b[j][r];
                    b[i][r] = c * bi - s * bj;
                    b[j][r] = s * bi + c * bj;
                }
                for (std::size_t r = 0; r < q; ++r) {
                    const double vi = v[i][r];
                    const double vj = v[j][r];
                    v[i][r] = c * vi - s * vj;
                    v[j][r] = s * vi + c * vj;
                }
            }
        }
    }
    if (!converged) {
        throw NumericalError("svd: one-sided Jacobi did not converge in " + std::to_string(kMaxSweeps) +
                                 " sweeps (max column cosine " + std::to_string(worst) + ")",
                             worst);
    }

    Vector sigma(q);
    for (std::size_t j = 0; j < q; ++j) sigma[j] = norm2(b[j]);
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return sigma[a] > sigma[c]; });

    const double smax = sigma[order.front()];
    SvdResult out;
    out.S.resize(q);
    Columns left;
    Columns right(q);
    left.reserve(p);
    for (std::size_t jj = 0; jj < q; ++jj) {
        const std::size_t j = order[jj];
        out.S[jj] = sigma[j];
        right[jj] = v[j];
    }
    // Left vectors for numerically zero singular values come from completion.
    for (std::size_t jj = 0; jj < q; ++jj) {
        const std::size_t j = order[jj];
        if (sigma[j] <= eps * smax) break;
        Vector u = b[j];
        for (double& x : u) x /= sigma[j];
        left.push_back(std::move(u));
    }
    complete_basis(left, p);

    Matrix left_m = from_columns(left, p);
    Matrix right_m = from_columns(right, q);
    if (wide) {
        out.U = std::move(right_m);
        out.V = std::move(left_m);
    } else {
        out.U = std::move(left_m);
        out.V = std::move(right_m);
    }
    return out;
}

Matrix svd_reconstruct(const SvdResult& f)
{
    const std::size_t rows = f.U.rows();
    const std::size_t cols = f.V.rows();
    Matrix R(rows, cols);
    for (std::size_t t = 0; t < f.S.size(); ++t) {
        if (f.S[t] == 0.0) continue;
        for (std::size_t i = 0; i < rows; ++i) {
            const double ui = f.U(i, t) * f.S[t];
            auto ri = R.row(i);
            for (std::size_t j = 0; j < cols; ++j) ri[j] += ui * f.V(j, t);
        }
    }
    return R;
}

} // namespace eqopt
