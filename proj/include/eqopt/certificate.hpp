#pragma once

// Frequency-domain certificate for I-GM: the closed-form rate, the loop-
// transformed transfer function hb(gamma z, sigma), checks of causality,
// internal-model (tracking) equalities, strict positive realness and pole
// stability on grids, plus per-mode spectral radii of the linearized
// iteration and the PAPC primal-only transfer reduction.

#include "eqopt/numkit.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eqopt {

/// Evaluation hit (or came within 1e-300 of) a pole.
class PoleError : public std::runtime_error {
public:
    PoleError(const std::string& what, Complex where) : std::runtime_error(what), where_(where) {}
    Complex where() const noexcept { return where_; }

private:
    Complex where_;
};

struct SynthesisSpec {
    double m = 1.0;
    double L = 1.0;
    double sigma_l = 1.0; ///< lower bound on the nonzero constraint spectrum
    double sigma_u = 1.0; ///< upper bound
    int two_ell = 2;
    double alpha1 = 1.0;
    double alpha2 = 1.0;

    double ell() const noexcept { return 0.5 * two_ell; }

    /// alpha1 = 2/(m+L), alpha2 = 2/(sigma_l+sigma_u).
    static SynthesisSpec optimal(double m, double L, double sigma_l, double sigma_u, int two_ell);
    /// Throws std::invalid_argument on any violated precondition.
    void validate() const;
};

/// |1 - alpha2 sigma|^(two_ell/2)
double g_sigma(double sigma, double alpha2, int two_ell);

/// max(|1 - alpha2 sigma_l|^ell, |1 - alpha1 m|)
double rate_rho(const SynthesisSpec& spec);

/// max((kf-1)/(kf+1), ((kE-1)/(kE+1))^ell)
double rate_rho_star(double kappa_f, double kappa_E, int two_ell);

/// Effective sector bound m (1+rho)/(1-rho): the value for which the
/// one-to-one map h = (hb-1)/(m hb - L_tilde) has its pole at z = 1 on the
/// null-space modes. Equals L when the objective term sets rho at the
/// optimal alpha1.
double effective_sector_bound(const SynthesisSpec& spec);

/// hb(gamma z, sigma). For g(sigma) = 1 the common factor (gamma z - 1) is
/// cancelled, which yields the continuous extension at gamma z = 1.
Complex hbar_eval(Complex z, double sigma, double gamma, const SynthesisSpec& spec);

/// h = (hb - 1)/(m hb - L_tilde).
Complex h_from_hbar(Complex hb, double m, double L_tilde);

struct GridOptions {
    int gamma_points = 8;
    int theta_points = 4096;
    int sigma_points = 64;
    double gamma_offset = 1e-6;
    double equality_tol = 1e-9;
    double causality_radius = 1e8;
    double causality_tol = 1e-6;
    int mode_lambda_points = 64;
    int mode_sigma_points = 64;
};

struct GridPoint {
    double gamma = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
};

struct ConditionReport {
    std::string name;
    bool pass = false;
    double worst = 0.0; ///< worst residual or margin observed
    GridPoint where;
    std::string detail;
};

struct RateCertificate {
    double rho = 0.0;
    double rho_star = 0.0;
    double L = 0.0;
    double L_tilde = 0.0;
    double hb_at_one_null = 0.0;   ///< hb(1, 0)
    bool matches_L_over_m = false; ///< literal hb(1, 0) = L/m to equality_tol
    ConditionReport causality;     ///< hb(infinity, sigma) = 1
    ConditionReport tracking;      ///< hb(1, sigma) = 1 on [sigma_l, sigma_u]
    ConditionReport pole_at_one;   ///< hb(1, 0) = L_tilde/m
    ConditionReport positivity;    ///< Re hb(gamma z, sigma) > 0 on the grid
    ConditionReport stability;     ///< poles strictly inside the unit disk
    double spr_min_margin = 0.0;
    GridPoint worst_point;
    double pole_max_modulus = 0.0;
    double mode_scan_max_radius = 0.0;
    bool pass = false;
};

/// Every grid sigma: log-spaced over [sigma_l, sigma_u] plus sigma = 0.
std::vector<double> sigma_grid(const SynthesisSpec& spec, int points);

RateCertificate check_conditions(const SynthesisSpec& spec, const GridOptions& grid = {});

/// Pole moduli |z| = |s|/gamma of hb(gamma z, sigma) after cancelling the
/// removable root s = 1 when g(sigma) = 1.
std::vector<double> hbar_pole_moduli(double sigma, double gamma, const SynthesisSpec& spec);

/// Largest root modulus of s^2 - G(2-a) s + G(1-a), the per-mode recursion
/// x+ = G((2-a) x - (1-a) x_prev) with G = (1-alpha2 sigma)^(2 ell) and
/// a = alpha1 lambda.
double mode_radius(double G, double a);

struct ModeGrid {
    std::vector<double> lambdas;
    std::vector<double> sigmas;
    std::vector<double> radius; ///< row-major lambda x sigma
    double max_radius = 0.0;    ///< over the (lambda, sigma) grid
    double argmax_lambda = 0.0;
    double argmax_sigma = 0.0;
    /// Null-space modes (sigma = 0) with the unexcited tracking root s = 1
    /// removed: the remaining root is 1 - alpha1 lambda.
    double null_space_max_radius = 0.0;
    double overall_max() const { return std::max(max_radius, null_space_max_radius); }
};

/// Radius of every (lambda, sigma) cell, lambda log-spaced on [m, L] and
/// sigma log-spaced on [sigma_l, sigma_u], endpoints exact. G keeps the sign
/// of (1 - alpha2 sigma) for odd two_ell, exactly as the iteration does.
ModeGrid mode_grid_scan(const SynthesisSpec& spec, int lambda_points = 64, int sigma_points = 64);

struct ReducedTransfer {
    Complex K1;
    Complex K2;
};

/// Scalar-mode PAPC blocks K0 = -alpha1 z, K1 = 1, K2 = alpha1,
/// L0 = 1 - alpha1 alpha2 sigma, L1 = alpha2 sigma, L2 = -alpha1 alpha2 sigma
/// reduced to primal-only form K1 + K0 (z-L0)^-1 L1, K2 + K0 (z-L0)^-1 L2.
ReducedTransfer transfer_reduce(Complex z, double sigma, double alpha1, double alpha2);

} // namespace eqopt
