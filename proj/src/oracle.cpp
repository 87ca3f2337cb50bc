#include "eqopt/oracle.hpp"

#include <cmath>
#include <sstream>

namespace eqopt {

namespace {

// First `count` columns of M starting at `first`.
Matrix columns(const Matrix& M, std::size_t first, std::size_t count)
{
    Matrix out(M.rows(), count);
    for (std::size_t i = 0; i < M.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = M(i, first + j);
    return out;
}

} // namespace

OracleSolution oracle_solve(const Objective& obj, const Constraint& con, const SvdResult& dec, const OracleOptions& opt)
{
    const std::size_t n = con.cols();
    const std::size_t r = con.rank;
    if (obj.dim() != n) throw std::invalid_argument("oracle_solve: objective and constraint dimensions differ");
    if (dec.V.rows() != n || dec.U.rows() != con.rows() || dec.S.size() < r)
        throw std::invalid_argument("oracle_solve: decomposition does not match the constraint");

    const Matrix V1 = columns(dec.V, 0, r);
    const Matrix V2 = columns(dec.V, r, n - r);

    OracleSolution sol;
    {
        Vector t = matvec_t(columns(dec.U, 0, r), con.q);
        for (std::size_t i = 0; i < r; ++i) t[i] /= dec.S[i];
        sol.x_par = matvec(V1, t);
    }

    Vector u(n - r, 0.0);
    auto point = [&](ConstSpan uu) {
        Vector x = sol.x_par;
        if (!uu.empty()) {
            const Vector d = matvec(V2, uu);
            for (std::size_t i = 0; i < n; ++i) x[i] += d[i];
        }
        return x;
    };

    Vector x = sol.x_par;
    if (n > r) {
        const double tol = opt.rel_tol * (1.0 + norm2(obj.gradient(sol.x_par)));
        auto [fx, gx] = obj.value_grad(x);
        Vector g = matvec_t(V2, gx);
        double gnorm = norm2(g);
        int steps = 0;
        while (gnorm > tol) {
            if (steps >= opt.max_newton_steps) {
                std::ostringstream os;
                os << "oracle_solve: Newton did not converge in " << opt.max_newton_steps
                   << " steps, reduced gradient " << gnorm;
                throw NumericalError(os.str(), gnorm);
            }
            const Matrix Hr = matmul_tn(V2, matmul(obj.hessian(x), V2));
            Vector d = cholesky_solve(Hr, g);
            for (double& v : d) v = -v;
            const double slope = dot(g, d);

            // Armijo backtracking; near the floor the function test is
            // swamped by rounding, so a step that shrinks the gradient also
            // counts.
            double t = 1.0;
            Vector u_new, x_new, g_new;
            double f_new = 0.0, gnorm_new = 0.0;
            for (;;) {
                u_new = u;
                axpy(t, d, u_new);
                x_new = point(u_new);
                auto vg = obj.value_grad(x_new);
                f_new = vg.first;
                g_new = matvec_t(V2, vg.second);
                gnorm_new = norm2(g_new);
                if (f_new <= fx + 1e-4 * t * slope || gnorm_new < gnorm || t < 1e-10) break;
                t *= 0.5;
            }
            u = std::move(u_new);
            x = std::move(x_new);
            fx = f_new;
            g = std::move(g_new);
            gnorm = gnorm_new;
            ++steps;
        }
        sol.newton_steps = steps;
    }

    sol.x_star = x;
    const Vector grad = obj.gradient(x);
    sol.null_coords = matvec_t(V2, x);
    sol.range_grad = matvec_t(V1, grad);
    sol.stationarity_residual = norm2(matvec_t(V2, grad));
    Vector res = matvec(con.E, x);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= con.q[i];
    sol.feasibility_residual = norm2(res);
    sol.feasibility_scale = 1.0 + con.E.frobenius_norm() * norm2(x) + norm2(con.q);
    sol.stationarity_scale = 1.0 + norm2(grad);
    return sol;
}

} // namespace eqopt
