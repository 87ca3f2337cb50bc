#include "eqopt/solvers.hpp"

#include <chrono>
#include <cmath>

namespace eqopt {

namespace {

// E^T (E w - q), counting both products.
Vector affine_normal(const Constraint& con, ConstSpan w, std::uint64_t* matvecs)
{
    Vector r = matvec(con.E, w);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= con.q[i];
    if (matvecs) *matvecs += 2;
    return matvec_t(con.E, r);
}

// E^T E w, counting both products.
Vector apply_W(const Constraint& con, ConstSpan w, std::uint64_t* matvecs)
{
    if (matvecs) *matvecs += 2;
    return matvec_t(con.E, matvec(con.E, w));
}

} // namespace

std::string to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::igm: return "igm";
    case Algorithm::gda: return "gda";
    case Algorithm::papc: return "papc";
    case Algorithm::papc_primal: return "papc_primal";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& s)
{
    if (s == "igm") return Algorithm::igm;
    if (s == "gda") return Algorithm::gda;
    if (s == "papc") return Algorithm::papc;
    if (s == "papc_primal") return Algorithm::papc_primal;
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

std::string to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::maxiter: return "maxiter";
    case RunStatus::diverged: return "diverged";
    }
    return "unknown";
}

void validate(const SolverParams& p, Algorithm a, const Objective& obj, const Constraint& con)
{
    auto fail = [](const std::string& msg) { throw std::invalid_argument("solver params: " + msg); };
    switch (a) {
    case Algorithm::igm:
        if (p.two_ell < 1) fail("two_ell must be a positive integer");
        if (!(p.alpha1 > 0.0 && p.alpha1 < 2.0 / obj.L())) fail("alpha1 must lie in (0, 2/L)");
        if (!(p.alpha2 > 0.0 && p.alpha2 < 2.0 / con.sigma1)) fail("alpha2 must lie in (0, 2/sigma1)");
        break;
    case Algorithm::papc:
    case Algorithm::papc_primal:
        if (!(p.alpha1 > 0.0 && p.alpha2 > 0.0)) fail("PAPC steps must be positive");
        break;
    case Algorithm::gda:
        if (!(p.tau > 0.0 && p.theta > 0.0)) fail("GDA steps must be positive");
        break;
    }
}

SolverState init_state(Algorithm a, const Vector& x0, const Constraint& con, const Vector& dual0)
{
    SolverState s;
    s.x = x0;
    switch (a) {
    case Algorithm::igm: s.v_prev = x0; break;
    case Algorithm::gda: s.dual = dual0.empty() ? Vector(con.rows(), 0.0) : dual0; break;
    case Algorithm::papc:
    case Algorithm::papc_primal: s.dual = dual0.empty() ? Vector(con.cols(), 0.0) : dual0; break;
    }
    return s;
}

Vector horner_pl_apply(const Constraint& con, ConstSpan w, double alpha2, int two_ell, std::uint64_t* matvecs)
{
    if (two_ell < 1) throw std::invalid_argument("horner_pl_apply: two_ell must be >= 1");
    const Vector r = affine_normal(con, w, matvecs);
    Vector s = r;
    for (int i = 1; i < two_ell; ++i) {
        const Vector Ws = apply_W(con, s, matvecs);
        for (std::size_t j = 0; j < s.size(); ++j) s[j] = r[j] + s[j] - alpha2 * Ws[j];
    }
    for (double& v : s) v *= alpha2;
    return s;
}

SolverState igm_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p)
{
    const Vector g = obj.gradient(s.x);
    const std::size_t n = s.x.size();
    Vector v(n);
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = s.x[i] - p.alpha1 * g[i];
        w[i] = s.x[i] + v[i] - s.v_prev[i];
    }
    const Vector corr = horner_pl_apply(con, w, p.alpha2, p.two_ell, &s.matvec_count);
    for (std::size_t i = 0; i < n; ++i) s.x[i] = w[i] - corr[i];
    s.v_prev = std::move(v);
    ++s.k;
    return s;
}

SolverState gda_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p)
{
    const Vector g = obj.gradient(s.x);
    const Vector Ety = matvec_t(con.E, s.dual);
    Vector res = matvec(con.E, s.x);
    s.matvec_count += 2;
    for (std::size_t i = 0; i < res.size(); ++i) s.dual[i] += p.theta * (res[i] - con.q[i]);
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= p.tau * (g[i] + Ety[i]);
    ++s.k;
    return s;
}

SolverState papc_pd_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p)
{
    const Vector g = obj.gradient(s.x);
    const std::size_t n = s.x.size();
    Vector base(n);
    Vector half(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = s.x[i] - p.alpha1 * g[i];
        half[i] = base[i] - p.alpha1 * s.dual[i];
    }
    const Vector r = affine_normal(con, half, &s.matvec_count);
    for (std::size_t i = 0; i < n; ++i) {
        s.dual[i] += p.alpha2 * r[i];
        s.x[i] = base[i] - p.alpha1 * s.dual[i];
    }
    ++s.k;
    return s;
}

SolverState papc_primal_step(SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p)
{
    const Vector g = obj.gradient(s.x);
    const std::size_t n = s.x.size();
    Vector base(n);
    for (std::size_t i = 0; i < n; ++i) base[i] = s.x[i] - p.alpha1 * g[i];
    const Vector Wv = apply_W(con, s.dual, &s.matvec_count);
    const Vector r = affine_normal(con, base, &s.matvec_count);
    for (std::size_t i = 0; i < n; ++i) {
        s.dual[i] = s.dual[i] - p.alpha1 * p.alpha2 * Wv[i] + p.alpha2 * r[i];
        s.x[i] = base[i] - p.alpha1 * s.dual[i];
    }
    ++s.k;
    return s;
}

SolverState step(Algorithm a, SolverState s, const Objective& obj, const Constraint& con, const SolverParams& p)
{
    switch (a) {
    case Algorithm::igm: return igm_step(std::move(s), obj, con, p);
    case Algorithm::gda: return gda_step(std::move(s), obj, con, p);
    case Algorithm::papc: return papc_pd_step(std::move(s), obj, con, p);
    case Algorithm::papc_primal: return papc_primal_step(std::move(s), obj, con, p);
    }
    return s;
}

SolverParams default_params(const Objective& obj, const Constraint& con, Algorithm a, int two_ell)
{
    const double m = obj.m();
    const double L = obj.L();
    SolverParams p;
    p.two_ell = two_ell;
    switch (a) {
    case Algorithm::igm:
        p.alpha1 = 2.0 / (m + L);
        p.alpha2 = two_ell % 2 == 0 ? 2.0 / (con.sigma1 + con.sigmar) : 1.0 / con.sigma1;
        break;
    case Algorithm::papc:
    case Algorithm::papc_primal:
        p.alpha1 = 1.0 / L;
        p.alpha2 = 1.0 / (p.alpha1 * con.sigma1);
        break;
    case Algorithm::gda:
        p.tau = 1.0 / L;
        p.theta = m / con.sigma1;
        break;
    }
    return p;
}

double igm_predicted_rate(const Objective& obj, const Constraint& con, const SolverParams& p)
{
    return std::max(std::pow(std::abs(1.0 - p.alpha2 * con.sigmar), p.ell()), std::abs(1.0 - p.alpha1 * obj.m()));
}

std::optional<std::uint64_t> IterateTrace::iterations_to(double tol) const
{
    for (const auto& r : rows)
        if (r.rel_err <= tol) return r.k;
    return std::nullopt;
}

std::optional<std::uint64_t> IterateTrace::matvecs_to(double tol) const
{
    for (const auto& r : rows)
        if (r.rel_err <= tol) return r.matvec_count;
    return std::nullopt;
}

double relative_error(ConstSpan x, ConstSpan x_star)
{
    const double ns = norm2(x_star);
    const double d = norm2(sub(x, x_star));
    return ns > 0.0 ? d / ns : d;
}

RunResult run(Algorithm a, const Objective& obj, const Constraint& con, const SolverParams& p,
              const RunOptions& opt, const Vector& x_star)
{
    validate(p, a, obj, con);
    if (x_star.size() != obj.dim()) throw std::invalid_argument("run: x_star has wrong length");
    const Vector x0 = opt.x0.empty() ? Vector(obj.dim(), 0.0) : opt.x0;
    if (x0.size() != obj.dim()) throw std::invalid_argument("run: x0 has wrong length");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(clock::now() - t0).count(); };

    RunResult res;
    SolverState s = init_state(a, x0, con);
    auto record = [&](const SolverState& st) {
        const double e = relative_error(st.x, x_star);
        if (!std::isfinite(e)) return e;
        res.trace.rows.push_back({st.k, e, st.matvec_count, elapsed_ms()});
        if (opt.checkpoint_every > 0 && st.k % opt.checkpoint_every == 0) res.checkpoints.emplace_back(st.k, st.x);
        return e;
    };

    double err = record(s);
    res.trace.status = RunStatus::maxiter;
    if (err <= opt.tol) {
        res.trace.status = RunStatus::converged;
    } else {
        while (s.k < opt.max_iter) {
            s = step(a, std::move(s), obj, con, p);
            err = record(s);
            if (!std::isfinite(err) || err > opt.divergence_threshold) {
                res.trace.status = RunStatus::diverged;
                break;
            }
            if (err <= opt.tol) {
                res.trace.status = RunStatus::converged;
                break;
            }
        }
    }
    res.final_state = std::move(s);
    return res;
}

} // namespace eqopt
