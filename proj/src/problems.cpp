#include "eqopt/problems.hpp"

#include "eqopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace eqopt {

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t)
{
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

Vector logspace_desc(double hi, double lo, std::size_t count)
{
    Vector v(count);
    if (count == 1) {
        v[0] = hi;
        return v;
    }
    const double a = std::log(hi);
    const double b = std::log(lo);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        v[i] = std::exp(a + t * (b - a));
    }
    // Pin the endpoints so the condition number is exact.
    v.front() = hi;
    v.back() = lo;
    return v;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng)
{
    Matrix G(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (auto& x : G.row(i)) x = rng.normal();
    return G;
}

} // namespace

std::string to_string(ObjectiveKind k)
{
    switch (k) {
    case ObjectiveKind::quadratic: return "quadratic";
    case ObjectiveKind::logistic: return "logistic";
    case ObjectiveKind::smooth_l1: return "smooth_l1";
    }
    return "unknown";
}

ObjectiveKind parse_objective_kind(const std::string& s)
{
    if (s == "quadratic") return ObjectiveKind::quadratic;
    if (s == "logistic") return ObjectiveKind::logistic;
    if (s == "smooth_l1") return ObjectiveKind::smooth_l1;
    throw std::invalid_argument("unknown objective kind '" + s + "'");
}

Objective::Objective(std::variant<QuadraticData, LogisticData, SmoothL1Data> d, std::size_t dim, double m,
                     double L)
    : data_(std::move(d)), dim_(dim), m_(m), L_(L)
{
    if (!(m > 0.0) || !(L >= m) || !std::isfinite(L))
        throw std::invalid_argument("Objective: need 0 < m <= L (got m=" + std::to_string(m) +
                                    ", L=" + std::to_string(L) + ")");
}

Objective Objective::quadratic(Matrix Q, Vector b, double m, double L)
{
    if (Q.rows() != Q.cols() || Q.rows() != b.size())
        throw std::invalid_argument("Objective::quadratic: Q must be n x n and b length n");
    const std::size_t n = b.size();
    return Objective(QuadraticData{std::move(Q), std::move(b)}, n, m, L);
}

Objective Objective::logistic(Matrix A, Vector y, double m)
{
    if (A.rows() != y.size()) throw std::invalid_argument("Objective::logistic: A rows must match labels");
    for (double& yi : y) {
        if (yi == -1.0) yi = 0.0;
        if (yi != 0.0 && yi != 1.0) throw std::invalid_argument("Objective::logistic: labels must be 0/1 or -1/+1");
    }
    const std::size_t n = A.cols();
    double lam = 0.0;
    if (A.rows() > 0) {
        lam = power_iteration_sym([&](ConstSpan v) { return matvec_t(A, matvec(A, v)); }, n, 200000, 1e-13);
    }
    const double L = m + 0.25 * lam;
    return Objective(LogisticData{std::move(A), std::move(y)}, n, m, L);
}

Objective Objective::smooth_l1(std::size_t n, double m, double L)
{
    if (!(L > m)) throw std::invalid_argument("Objective::smooth_l1: requires L > m");
    return Objective(SmoothL1Data{n}, n, m, L);
}

ObjectiveKind Objective::kind() const noexcept
{
    switch (data_.index()) {
    case 0: return ObjectiveKind::quadratic;
    case 1: return ObjectiveKind::logistic;
    default: return ObjectiveKind::smooth_l1;
    }
}

void Objective::check_dim(ConstSpan x) const
{
    if (x.size() != dim_)
        throw std::invalid_argument("Objective: expected x of length " + std::to_string(dim_) + ", got " +
                                    std::to_string(x.size()));
}

std::pair<double, Vector> Objective::value_grad(ConstSpan x) const
{
    check_dim(x);
    if (const auto* qd = std::get_if<QuadraticData>(&data_)) {
        Vector g = matvec(qd->Q, x);
        const double val = 0.5 * dot(x, g) - dot(qd->b, x);
        for (std::size_t i = 0; i < dim_; ++i) g[i] -= qd->b[i];
        return {val, std::move(g)};
    }
    if (const auto* ld = std::get_if<LogisticData>(&data_)) {
        const Vector t = matvec(ld->A, x);
        double val = 0.5 * m_ * dot(x, x);
        Vector resid(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            val += softplus(t[i]) - ld->y[i] * t[i];
            resid[i] = sigmoid(t[i]) - ld->y[i];
        }
        Vector g = matvec_t(ld->A, resid);
        axpy(m_, x, g);
        return {val, std::move(g)};
    }
    const double delta = 1.0 / (L_ - m_);
    double val = 0.0;
    Vector g(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        const double root = std::hypot(x[i], delta);
        val += root + 0.5 * m_ * x[i] * x[i];
        g[i] = x[i] / root + m_ * x[i];
    }
    return {val, std::move(g)};
}

Matrix Objective::hessian(ConstSpan x) const
{
    check_dim(x);
    if (const auto* qd = std::get_if<QuadraticData>(&data_)) return qd->Q;
    Matrix H(dim_, dim_);
    if (const auto* ld = std::get_if<LogisticData>(&data_)) {
        const Vector t = matvec(ld->A, x);
        for (std::size_t k = 0; k < ld->A.rows(); ++k) {
            const double s = sigmoid(t[k]);
            const double w = s * (1.0 - s);
            const auto ak = ld->A.row(k);
            for (std::size_t i = 0; i < dim_; ++i) {
                const double wi = w * ak[i];
                if (wi == 0.0) continue;
                auto hi = H.row(i);
                for (std::size_t j = 0; j < dim_; ++j) hi[j] += wi * ak[j];
            }
        }
        for (std::size_t i = 0; i < dim_; ++i) H(i, i) += m_;
        return H;
    }
    for (std::size_t i = 0; i < dim_; ++i) H(i, i) = smoothl1_curvature(m_, L_, x[i]);
    return H;
}

double smoothl1_curvature(double m, double L, double x)
{
    if (!(L > m) || !(m > 0.0)) throw std::invalid_argument("smoothl1_curvature: requires L > m > 0");
    const double d2 = 1.0 / ((L - m) * (L - m));
    const double r2 = x * x + d2;
    return d2 / (r2 * std::sqrt(r2)) + m;
}

GeneratedConstraint gen_constraint(std::size_t n, std::size_t c, std::size_t r, double sigma1, double sigmar,
                                   std::uint64_t seed)
{
    if (n == 0 || c == 0) throw std::invalid_argument("gen_constraint: dimensions must be positive");
    if (r == 0 || r > std::min(n, c))
        throw std::invalid_argument("gen_constraint: need 1 <= r <= min(n, c), got r=" + std::to_string(r));
    if (!(sigmar > 0.0) || !(sigma1 >= sigmar))
        throw std::invalid_argument("gen_constraint: need sigma1 >= sigmar > 0");
    if (r == 1 && sigma1 != sigmar)
        throw std::invalid_argument("gen_constraint: rank 1 cannot attain both sigma1 and sigmar");

    Rng rng(seed);
    SvdResult f = svd(gaussian_matrix(c, n, rng));
    const Vector root = logspace_desc(std::sqrt(sigma1), std::sqrt(sigmar), r);
    std::fill(f.S.begin(), f.S.end(), 0.0);
    std::copy(root.begin(), root.end(), f.S.begin());

    GeneratedConstraint out;
    out.constraint.E = svd_reconstruct(f);
    out.constraint.q = Vector(c, 0.0);
    out.constraint.sigma1 = sigma1;
    out.constraint.sigmar = sigmar;
    out.constraint.rank = r;
    out.decomposition = std::move(f);
    return out;
}

std::pair<Matrix, Vector> gen_logistic_data(std::size_t N, std::size_t n, double m, double L, std::uint64_t seed)
{
    if (!(L > m) || !(m > 0.0)) throw std::invalid_argument("gen_logistic_data: requires L > m > 0");
    Rng rng(seed);
    Matrix A = gaussian_matrix(N, n, rng);
    if (N == 0) return {std::move(A), Vector{}};

    const double lam = power_iteration_sym([&](ConstSpan v) { return matvec_t(A, matvec(A, v)); }, n, 200000, 1e-13);
    const double scale = std::sqrt(4.0 * (L - m) / lam);
    for (std::size_t i = 0; i < N; ++i)
        for (auto& a : A.row(i)) a *= scale;

    Vector theta(n);
    for (auto& t : theta) t = rng.normal();
    const double nt = norm2(theta);
    for (auto& t : theta) t /= nt;

    // Planted direction rescaled so margins a_i^T theta are O(1) on average.
    const Vector margin = matvec(A, theta);
    const double spread = std::max(norm2(margin) / std::sqrt(static_cast<double>(N)), 1e-12);
    Vector y(N);
    for (std::size_t i = 0; i < N; ++i) y[i] = rng.uniform() < sigmoid(margin[i] / spread) ? 1.0 : 0.0;
    return {std::move(A), std::move(y)};
}

std::size_t sparse_truth_nnz(std::size_t n)
{
    const auto k = static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(n)));
    return std::min(n, std::max<std::size_t>(1, k));
}

void validate(const InstanceSpec& s)
{
    if (s.n == 0 || s.c == 0) throw std::invalid_argument("instance: n and c must be positive");
    if (s.r == 0 || s.r > std::min(s.n, s.c)) throw std::invalid_argument("instance: need 1 <= r <= min(n, c)");
    if (!(s.m > 0.0) || !(s.L >= s.m)) throw std::invalid_argument("instance: need 0 < m <= L");
    if (s.kind != ObjectiveKind::quadratic && !(s.L > s.m))
        throw std::invalid_argument("instance: logistic and smooth_l1 require L > m");
    if (!(s.sigmar > 0.0) || !(s.sigma1 >= s.sigmar))
        throw std::invalid_argument("instance: need sigma1 >= sigmar > 0");
    if (s.r == 1 && s.sigma1 != s.sigmar) throw std::invalid_argument("instance: rank 1 requires sigma1 == sigmar");
}

GeneratedInstance gen_instance(const InstanceSpec& spec)
{
    validate(spec);
    GeneratedConstraint gc = gen_constraint(spec.n, spec.c, spec.r, spec.sigma1, spec.sigmar, spec.seed);

    std::uint64_t stream = spec.seed;
    Rng rng(Rng::splitmix64(stream) ^ 0x5eed'0b1e'c7a1'0000ULL);

    // Sparse ground truth: nnz ones at distinct uniform positions.
    Vector x_bar(spec.n, 0.0);
    std::vector<std::size_t> pos(spec.n);
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    const std::size_t nnz = sparse_truth_nnz(spec.n);
    for (std::size_t i = 0; i < nnz; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(spec.n - i));
        std::swap(pos[i], pos[j]);
        x_bar[pos[i]] = 1.0;
    }
    gc.constraint.q = matvec(gc.constraint.E, x_bar);

    std::optional<Objective> obj;
    switch (spec.kind) {
    case ObjectiveKind::quadratic: {
        const Matrix& V = gc.decomposition.V;
        Vector curv(spec.n, spec.L);
        const std::size_t null_dim = spec.n - spec.r;
        if (null_dim > 0) {
            const Vector tail = logspace_desc(spec.L, spec.m, null_dim);
            std::copy(tail.begin(), tail.end(), curv.begin() + static_cast<std::ptrdiff_t>(spec.r));
            if (null_dim == 1) curv.back() = spec.m;
        } else {
            curv.back() = spec.m;
        }
        // Q = V diag(curv) V^T
        Matrix VD = V;
        for (std::size_t i = 0; i < spec.n; ++i)
            for (std::size_t j = 0; j < spec.n; ++j) VD(i, j) *= curv[j];
        Matrix Q = matmul(VD, V.transpose());
        for (std::size_t i = 0; i < spec.n; ++i)
            for (std::size_t j = i + 1; j < spec.n; ++j) Q(j, i) = Q(i, j) = 0.5 * (Q(i, j) + Q(j, i));
        Vector z(spec.n);
        for (auto& zi : z) zi = rng.normal();
        Vector b = matvec(Q, z);
        obj = Objective::quadratic(std::move(Q), std::move(b), spec.m, spec.L);
        break;
    }
    case ObjectiveKind::logistic: {
        const std::size_t N = spec.samples ? spec.samples : spec.n;
        auto [A, y] = gen_logistic_data(N, spec.n, spec.m, spec.L, rng.next_u64());
        obj = Objective::logistic(std::move(A), std::move(y), spec.m);
        break;
    }
    case ObjectiveKind::smooth_l1: obj = Objective::smooth_l1(spec.n, spec.m, spec.L); break;
    }

    return GeneratedInstance{spec, std::move(*obj), std::move(gc.constraint), std::move(x_bar),
                             std::move(gc.decomposition)};
}

std::optional<double> sector_ratio(const Objective& obj, ConstSpan x, ConstSpan u)
{
    const Vector d = sub(x, u);
    const double dd = dot(d, d);
    if (dd == 0.0) return std::nullopt;
    const Vector gd = sub(obj.gradient(x), obj.gradient(u));
    return dot(gd, d) / dd;
}

SectorReport sector_check(const Objective& obj, std::size_t trials, std::uint64_t seed)
{
    Rng rng(seed);
    SectorReport rep;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.max_ratio = -std::numeric_limits<double>::infinity();
    const std::size_t n = obj.dim();
    Vector x(n);
    Vector u(n);
    for (std::size_t t = 0; t < trials; ++t) {
        // Mix of scales probes both the flat and the curved regions.
        const double sx = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
        const double su = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = sx * rng.normal();
            u[i] = x[i] + su * rng.normal();
        }
        const auto s = sector_ratio(obj, x, u);
        if (!s) {
            ++rep.skipped;
            continue;
        }
        ++rep.pairs;
        rep.min_ratio = std::min(rep.min_ratio, *s);
        rep.max_ratio = std::max(rep.max_ratio, *s);
    }
    rep.pass = rep.pairs > 0 && rep.min_ratio >= obj.m() - 1e-9 && rep.max_ratio <= obj.L() + 1e-9;
    return rep;
}

Vector finite_difference_gradient(const Objective& obj, ConstSpan x, double h)
{
    Vector xp(x.begin(), x.end());
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = h * (1.0 + std::abs(x[i]));
        const double xi = xp[i];
        xp[i] = xi + step;
        const double fp = obj.value(xp);
        xp[i] = xi - step;
        const double fm = obj.value(xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

} // namespace eqopt
