#pragma once

// Objectives, constraint and instance generation, and analytic checks on
// them (finite differences, curvature, gradient sector bounds).

#include "eqopt/numkit.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace eqopt {

enum class ObjectiveKind { quadratic, logistic, smooth_l1 };

std::string to_string(ObjectiveKind k);
ObjectiveKind parse_objective_kind(const std::string& s);

struct QuadraticData {
    Matrix Q;
    Vector b;
};

struct LogisticData {
    Matrix A; ///< N x n, one sample per row
    Vector y; ///< labels in {0, 1}
};

struct SmoothL1Data {
    std::size_t n = 0;
};

/// A strongly convex, smooth objective with known constants 0 < m <= L.
class Objective {
public:
    /// f(x) = 1/2 x^T Q x - b^T x; the caller vouches for spec(Q) in [m, L].
    static Objective quadratic(Matrix Q, Vector b, double m, double L);
    /// f(x) = sum_i (-y_i a_i^T x + log(1 + exp(a_i^T x))) + m/2 |x|^2.
    /// Labels in {-1, +1} are mapped to {0, 1}. L = m + lambda_max(A^T A)/4.
    static Objective logistic(Matrix A, Vector y, double m);
    /// f(x) = sum_i sqrt(x_i^2 + 1/(L-m)^2) + m/2 x_i^2, requires L > m.
    static Objective smooth_l1(std::size_t n, double m, double L);

    ObjectiveKind kind() const noexcept;
    std::size_t dim() const noexcept { return dim_; }
    double m() const noexcept { return m_; }
    double L() const noexcept { return L_; }
    double condition_number() const noexcept { return L_ / m_; }

    std::pair<double, Vector> value_grad(ConstSpan x) const;
    double value(ConstSpan x) const { return value_grad(x).first; }
    Vector gradient(ConstSpan x) const { return value_grad(x).second; }
    /// Dense Hessian at x.
    Matrix hessian(ConstSpan x) const;

    const std::variant<QuadraticData, LogisticData, SmoothL1Data>& data() const noexcept { return data_; }

private:
    Objective(std::variant<QuadraticData, LogisticData, SmoothL1Data> d, std::size_t dim, double m, double L);
    void check_dim(ConstSpan x) const;

    std::variant<QuadraticData, LogisticData, SmoothL1Data> data_;
    std::size_t dim_;
    double m_;
    double L_;
};

/// Ex = q with E of shape c x n (constraint rows by variables). sigma1 and
/// sigmar are the extreme nonzero eigenvalues of E^T E.
struct Constraint {
    Matrix E;
    Vector q;
    double sigma1 = 0.0;
    double sigmar = 0.0;
    std::size_t rank = 0;

    std::size_t rows() const noexcept { return E.rows(); }
    std::size_t cols() const noexcept { return E.cols(); }
    double condition_number() const noexcept { return sigma1 / sigmar; }
};

struct GeneratedConstraint {
    Constraint constraint;
    SvdResult decomposition; ///< factors of E: U (c x c), S, V (n x n)
};

struct InstanceSpec {
    ObjectiveKind kind = ObjectiveKind::quadratic;
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t r = 0;
    double m = 1.0;
    double L = 1.0;
    double sigma1 = 1.0;
    double sigmar = 1.0;
    std::uint64_t seed = 0;
    /// Logistic sample count; 0 means N = n.
    std::size_t samples = 0;
};

struct GeneratedInstance {
    InstanceSpec spec;
    Objective objective;
    Constraint constraint;
    Vector x_bar;
    SvdResult decomposition;

    std::size_t rank() const noexcept { return constraint.rank; }
};

double smoothl1_curvature(double m, double L, double x);

/// Gaussian c x n matrix whose singular values are replaced by r values
/// log-spaced over [sqrt(sigmar), sqrt(sigma1)] (endpoints exact) and zeros.
GeneratedConstraint gen_constraint(std::size_t n, std::size_t c, std::size_t r, double sigma1, double sigmar,
                                   std::uint64_t seed);

/// Logistic data with |A|_2^2 = 4 (L - m) and labels from a planted model.
std::pair<Matrix, Vector> gen_logistic_data(std::size_t N, std::size_t n, double m, double L, std::uint64_t seed);

/// Number of ones in the sparse ground truth for dimension n.
std::size_t sparse_truth_nnz(std::size_t n);

/// Builds the full instance. The quadratic Hessian is diagonal in the right
/// singular basis of E: curvature L on range(E^T), log-spaced [m, L] on the
/// null space. That alignment puts curvature L on the slowest constraint
/// modes, which is where the worst-case rate is approached.
GeneratedInstance gen_instance(const InstanceSpec& spec);

void validate(const InstanceSpec& spec);

/// <grad f(x) - grad f(u), x - u> / |x - u|^2, or nullopt when x == u.
std::optional<double> sector_ratio(const Objective& obj, ConstSpan x, ConstSpan u);

struct SectorReport {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    std::size_t pairs = 0;   ///< non-degenerate pairs evaluated
    std::size_t skipped = 0; ///< degenerate pairs (x == u)
    bool pass = false;
};

SectorReport sector_check(const Objective& obj, std::size_t trials, std::uint64_t seed);

/// Central-difference gradient with per-coordinate step h * (1 + |x_i|).
Vector finite_difference_gradient(const Objective& obj, ConstSpan x, double h = 1e-6);

} // namespace eqopt
