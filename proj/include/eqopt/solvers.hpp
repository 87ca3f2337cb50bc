#pragma once

// Single-loop first-order methods for min f(x) s.t. Ex = q: the
// interpolated-gradient method (I-GM), gradient descent-ascent and PAPC in
// primal-dual and primal-only forms. All of them touch E only through
// products with E and E^T; W = E^T E is never formed.

#include "eqopt/numkit.hpp"
#include "eqopt/problems.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace eqopt {

enum class Algorithm { igm, gda, papc, papc_primal };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct SolverParams {
    double alpha1 = 0.0; ///< primal (gradient) step
    double alpha2 = 0.0; ///< constraint step
    int two_ell = 2;     ///< 2*ell, number of W applications per I-GM iteration
    double tau = 0.0;    ///< GDA primal step
    double theta = 0.0;  ///< GDA dual step

    double ell() const noexcept { return 0.5 * two_ell; }
};

/// Throws std::invalid_argument if the step sizes are outside the admissible
/// ranges for the algorithm.
void validate(const SolverParams& p, Algorithm a, const Objective& obj, const Constraint& con);

struct SolverState {
    Vector x;      ///< x^k
    Vector v_prev; ///< I-GM: v^{k-1}
    Vector dual;   ///< GDA: y (length c); PAPC: v = E^T y (length n)
    std::uint64_t k = 0;
    std::uint64_t matvec_count = 0; ///< products with E plus products with E^T
};

/// v^{-1} = x0 for I-GM; dual variables start at zero unless given.
SolverState init_state(Algorithm a, const Vector& x0, const Constraint& con, const Vector& dual0 = {});

/// alpha2 * sum_{i<2l} (I - alpha2 W)^i E^T(E w - q) by the recurrence
/// s <- r; s <- r + (I - alpha2 W) s (two_ell - 1 times). Uses two_ell
/// products with E and two_ell with E^T, added to *matvecs when given.
Vector horner_pl_apply(const Constraint& con, ConstSpan w, double alpha2, int two_ell,
                       std::uint64_t* matvecs = nullptr);

SolverState igm_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p);
SolverState gda_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p);
SolverState papc_pd_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p);
SolverState papc_primal_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p);

SolverState step(Algorithm a, SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p);

/// Default steps. I-GM: alpha1 = 2/(m+L), alpha2 = 2/(sigma1+sigmar) for even
/// two_ell and 1/sigma1 for odd two_ell (an odd power of I - alpha2 W must
/// stay nonnegative). PAPC: alpha1 = 1/L, alpha2 = L/sigma1.
/// GDA: tau = 1/L, theta = m/sigma1.
SolverParams default_params(const Objective& obj, const Constraint& con, Algorithm a, int two_ell = 2);

/// Worst-case I-GM rate predicted for these parameters,
/// max(|1 - alpha2 sigmar|^ell, |1 - alpha1 m|).
double igm_predicted_rate(const Objective& obj, const Constraint& con, const SolverParams& p);

enum class RunStatus { converged, maxiter, diverged };
std::string to_string(RunStatus s);

struct TraceRow {
    std::uint64_t k = 0;
    double rel_err = 0.0;
    std::uint64_t matvec_count = 0;
    double wall_ms = 0.0;
};

struct IterateTrace {
    std::vector<TraceRow> rows; ///< row 0 is the starting point
    RunStatus status = RunStatus::maxiter;

    /// First iteration whose error is at or below tol.
    std::optional<std::uint64_t> iterations_to(double tol) const;
    std::optional<std::uint64_t> matvecs_to(double tol) const;
    double final_rel_err() const { return rows.empty() ? 0.0 : rows.back().rel_err; }
};

struct RunOptions {
    std::uint64_t max_iter = 100000;
    double tol = 1e-8;
    double divergence_threshold = 1e8;
    /// Starting point; empty means x0 = 0.
    Vector x0;
    /// When set, every checkpoint_every-th iterate is kept (tests only).
    std::uint64_t checkpoint_every = 0;
};

struct RunResult {
    IterateTrace trace;
    SolverState final_state;
    std::vector<std::pair<std::uint64_t, Vector>> checkpoints;
};

/// Relative error |x - x_star| / |x_star|; falls back to the absolute error
/// when x_star = 0.
double relative_error(ConstSpan x, ConstSpan x_star);

RunResult run(Algorithm a, const Objective& obj, const Constraint& con, const SolverParams& p,
              const RunOptions& opt, const Vector& x_star);

} // namespace eqopt
