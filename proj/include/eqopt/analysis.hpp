#pragma once

// Empirical rate estimation from error traces.

#include "eqopt/solvers.hpp"

#include <stdexcept>
#include <vector>

namespace eqopt {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RateFit {
    double rate = 0.0;      ///< exp(slope)
    double intercept = 0.0; ///< M in rel_err(k) ~ M rate^k
    std::size_t points = 0; ///< rows used by the regression
};

struct FitOptions {
    double window_fraction = 0.5;
    double upper = 1e-1;  ///< the decay segment starts once rel_err <= upper
    double floor = 1e-11; ///< and ends before rel_err first drops below floor
    std::size_t min_points = 50;
};

/// Least-squares slope of log(rel_err) against k over the final
/// window_fraction of the decay segment. Throws FitError when the segment has
/// fewer than min_points rows or shows no decay.
RateFit fit_rate(const std::vector<std::uint64_t>& k, const std::vector<double>& rel_err, const FitOptions& opt = {});
RateFit fit_rate(const IterateTrace& trace, const FitOptions& opt = {});

/// ceil(log(1/eps) / log(1/rho)), or 0 when rho is not in (0, 1).
std::uint64_t predicted_iterations(double rho, double eps);

} // namespace eqopt
