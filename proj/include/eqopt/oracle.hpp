#pragma once

// High-accuracy reference solutions by the null-space method: x = x_par + V2 u
// with x_par = V1 S^-1 U1^T q, then damped Newton on u (a single reduced KKT
// solve for quadratics).

#include "eqopt/numkit.hpp"
#include "eqopt/problems.hpp"

namespace eqopt {

struct OracleOptions {
    /// Reduced-gradient stopping tolerance is rel_tol * (1 + |grad f(x_par)|).
    double rel_tol = 1e-12;
    int max_newton_steps = 200;
};

struct OracleSolution {
    Vector x_star;
    Vector x_par;       ///< particular solution of Ex = q in range(E^T)
    Vector null_coords; ///< V2^T x_star
    Vector range_grad;  ///< V1^T grad f(x_star)
    double feasibility_residual = 0.0;  ///< |E x_star - q|
    double stationarity_residual = 0.0; ///< |V2^T grad f(x_star)|
    double feasibility_scale = 1.0;     ///< 1 + |E|_F |x_star| + |q|
    double stationarity_scale = 1.0;    ///< 1 + |grad f(x_star)|
    int newton_steps = 0;

    /// Both KKT residuals within factor * their scale.
    bool kkt_ok(double factor = 1e-10) const
    {
        return feasibility_residual <= factor * feasibility_scale &&
               stationarity_residual <= factor * stationarity_scale;
    }
};

/// decomposition must be the SVD of con.E. Throws NumericalError when Newton
/// does not converge within max_newton_steps.
OracleSolution oracle_solve(const Objective& obj, const Constraint& con, const SvdResult& decomposition,
                            const OracleOptions& opt = {});

inline OracleSolution oracle_solve(const GeneratedInstance& inst, const OracleOptions& opt = {})
{
    return oracle_solve(inst.objective, inst.constraint, inst.decomposition, opt);
}

} // namespace eqopt
