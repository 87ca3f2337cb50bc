#include "eqopt/certificate.hpp"
#include "eqopt/oracle.hpp"
#include "eqopt/rng.hpp"
#include "eqopt/solvers.hpp"

#include <doctest.h>

#include <cmath>

using namespace eqopt;

namespace {

InstanceSpec quad_spec(std::uint64_t seed, std::size_t n = 30, std::size_t c = 12, std::size_t r = 8)
{
    InstanceSpec s;
    s.kind = ObjectiveKind::quadratic;
    s.n = n;
    s.c = c;
    s.r = r;
    s.m = 0.5;
    s.L = 5.0;
    s.sigma1 = 4.0;
    s.sigmar = 0.04;
    s.seed = seed;
    return s;
}

Constraint zero_constraint(std::size_t c, std::size_t n)
{
    Constraint con;
    con.E = Matrix(c, n);
    con.q = Vector(c, 0.0);
    con.sigma1 = 1.0; // nominal; E = 0 has no nonzero spectrum
    con.sigmar = 1.0;
    return con;
}

Matrix dense_power(const Matrix& A, int p)
{
    Matrix R = Matrix::identity(A.rows());
    for (int i = 0; i < p; ++i) R = matmul(R, A);
    return R;
}

double rel_diff(ConstSpan a, ConstSpan b) { return norm2(sub(a, b)) / std::max(norm2(b), 1e-300); }

} // namespace

TEST_CASE("scalar I-GM with E = 0 contracts by 1 - alpha1 lambda")
{
    const double lambda = 2.0;
    const Objective f = Objective::quadratic(Matrix{{lambda}}, Vector{0.0}, lambda, lambda);
    const Constraint con = zero_constraint(1, 1);
    SolverParams p;
    p.alpha1 = 0.25; // alpha1 * lambda = 0.5
    p.alpha2 = 0.5;
    p.two_ell = 2;
    SolverState s = init_state(Algorithm::igm, Vector{1.0}, con);
    CHECK(s.v_prev == Vector{1.0});
    const double expect[] = {0.5, 0.25, 0.125};
    for (double e : expect) {
        s = igm_step(s, f, con, p);
        CHECK(s.x[0] == doctest::Approx(e).epsilon(1e-15));
    }
}

TEST_CASE("horner_pl_apply examples")
{
    Rng rng(1);
    const GeneratedInstance inst = gen_instance(quad_spec(2));
    const Constraint& con = inst.constraint;
    Vector w(inst.objective.dim());
    for (auto& x : w) x = rng.normal();

    // two_ell = 1 is a single normal-equation residual
    std::uint64_t mv = 0;
    const Vector one = horner_pl_apply(con, w, 0.3, 1, &mv);
    Vector r = matvec(con.E, w);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= con.q[i];
    const Vector ref = scaled(0.3, matvec_t(con.E, r));
    CHECK(rel_diff(one, ref) <= 1e-14);
    CHECK(mv == 2);

    // feasible w gives zero
    const Vector zero = horner_pl_apply(con, inst.x_bar, 0.3, 4);
    CHECK(norm2(zero) <= 1e-13 * norm2(inst.x_bar));

    // scalar sigma with alpha2 sigma = 0.5 and two_ell = 2
    Constraint sc;
    sc.E = Matrix{{1.0}};
    sc.q = Vector{0.0};
    const double a2 = 0.5;
    const Vector pv = horner_pl_apply(sc, Vector{1.0}, a2, 2);
    const double p_ell = pv[0] / a2; // = p_l(sigma) * sigma with sigma = 1
    CHECK(p_ell == doctest::Approx(1.5));
    CHECK(1.0 - a2 * p_ell == doctest::Approx(0.25));
    CHECK_THROWS_AS(horner_pl_apply(sc, Vector{1.0}, a2, 0), std::invalid_argument);
}

TEST_CASE("1 - alpha2 sigma p_l(sigma) = (1 - alpha2 sigma)^(2l)")
{
    Rng rng(3);
    Constraint sc;
    sc.E = Matrix{{1.0}};
    sc.q = Vector{0.0};
    for (int t = 0; t < 500; ++t) {
        const double t_ = 2.0 * rng.uniform(); // alpha2 * sigma in (0, 2)
        const int two_ell = 1 + static_cast<int>(rng.below(8));
        const double sigma = std::pow(10.0, rng.uniform() * 4 - 2);
        sc.E(0, 0) = std::sqrt(sigma);
        const double a2 = t_ / sigma;
        const double p = horner_pl_apply(sc, Vector{1.0}, a2, two_ell)[0] / (a2 * sigma);
        const double lhs = 1.0 - a2 * sigma * p;
        const double rhs = std::pow(1.0 - t_, two_ell);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(p) * t_));
    }
}

TEST_CASE("igm_step with q = 0 matches the dense power form")
{
    Rng rng(10);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 4 + rng.below(12), c = 2 + rng.below(8);
        const std::size_t r = 2 + rng.below(std::min(n, c) - 1);
        InstanceSpec s = quad_spec(100 + t, n, c, r);
        GeneratedInstance inst = gen_instance(s);
        Constraint con = inst.constraint;
        con.q = Vector(c, 0.0);
        SolverParams p = default_params(inst.objective, con, Algorithm::igm, 1 + static_cast<int>(rng.below(4)));
        p.alpha2 = (0.2 + 1.7 * rng.uniform()) / con.sigma1;

        Vector x(n), vp(n);
        for (auto& v : x) v = rng.normal();
        for (auto& v : vp) v = rng.normal();
        SolverState st;
        st.x = x;
        st.v_prev = vp;
        const SolverState next = igm_step(st, inst.objective, con, p);

        const Vector g = inst.objective.gradient(x);
        Vector w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = x[i] + (x[i] - p.alpha1 * g[i]) - vp[i];
        Matrix I_aW = matmul_tn(con.E, con.E);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) I_aW(i, j) = (i == j ? 1.0 : 0.0) - p.alpha2 * I_aW(i, j);
        const Vector expect = matvec(dense_power(I_aW, p.two_ell), w);
        CAPTURE(p.two_ell);
        CHECK(rel_diff(next.x, expect) <= 1e-12);
        CHECK(next.matvec_count - st.matvec_count == static_cast<std::uint64_t>(2 * p.two_ell));
        CHECK(next.k == 1);
    }
}

TEST_CASE("matvec accounting per iteration")
{
    const GeneratedInstance inst = gen_instance(quad_spec(4));
    const Vector x0(inst.objective.dim(), 0.0);
    for (int two_ell : {1, 2, 3, 4}) {
        const SolverParams p = default_params(inst.objective, inst.constraint, Algorithm::igm, two_ell);
        SolverState s = init_state(Algorithm::igm, x0, inst.constraint);
        for (int k = 0; k < 5; ++k) {
            const std::uint64_t before = s.matvec_count;
            s = igm_step(s, inst.objective, inst.constraint, p);
            CHECK(s.matvec_count - before == static_cast<std::uint64_t>(2 * two_ell));
        }
    }
    for (Algorithm a : {Algorithm::gda, Algorithm::papc}) {
        const SolverParams p = default_params(inst.objective, inst.constraint, a);
        SolverState s = init_state(a, x0, inst.constraint);
        s = step(a, s, inst.objective, inst.constraint, p);
        CHECK(s.matvec_count == 2);
    }
}

TEST_CASE("fixed points")
{
    const GeneratedInstance inst = gen_instance(quad_spec(5));
    const OracleSolution o = oracle_solve(inst);
    const Objective& f = inst.objective;
    const Constraint& con = inst.constraint;
    const Vector g = f.gradient(o.x_star);
    const double scale = norm2(o.x_star);

    // I-GM with v^{-1} = v^0
    SolverParams pi = default_params(f, con, Algorithm::igm, 2);
    SolverState si;
    si.x = o.x_star;
    si.v_prev = sub(o.x_star, scaled(pi.alpha1, g));
    const SolverState ni = igm_step(si, f, con, pi);
    CHECK(norm2(sub(ni.x, o.x_star)) <= 1e-12 * scale);
    CHECK(norm2(sub(ni.v_prev, si.v_prev)) <= 1e-12 * scale);

    // y* = -U1 S^-1 V1^T grad f(x*)
    const std::size_t r = con.rank;
    Vector t(r);
    for (std::size_t i = 0; i < r; ++i) t[i] = -o.range_grad[i] / inst.decomposition.S[i];
    Vector y(con.rows(), 0.0);
    for (std::size_t i = 0; i < con.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) y[i] += inst.decomposition.U(i, j) * t[j];
    CHECK(norm2(add(g, matvec_t(con.E, y))) <= 1e-11 * (1 + norm2(g)));

    const SolverParams pg = default_params(f, con, Algorithm::gda);
    SolverState sg;
    sg.x = o.x_star;
    sg.dual = y;
    const SolverState ng = gda_step(sg, f, con, pg);
    CHECK(norm2(sub(ng.x, o.x_star)) <= 1e-12 * scale);
    CHECK(norm2(sub(ng.dual, y)) <= 1e-12 * norm2(y));

    for (Algorithm a : {Algorithm::papc, Algorithm::papc_primal}) {
        const SolverParams pp = default_params(f, con, a);
        SolverState sp;
        sp.x = o.x_star;
        sp.dual = scaled(-1.0, g);
        const SolverState np = step(a, sp, f, con, pp);
        CHECK(norm2(sub(np.x, o.x_star)) <= 1e-12 * scale);
        CHECK(norm2(sub(np.dual, sp.dual)) <= 1e-12 * (1 + norm2(g)));
    }
}

TEST_CASE("E = 0 reduces every method to gradient descent")
{
    const Objective f = Objective::quadratic(Matrix{{1, 0}, {0, 3}}, Vector{1, -2}, 1, 3);
    const Constraint con = zero_constraint(1, 2);
    const Vector x0{0.7, -0.4};
    const double step = 0.2;
    const Vector gd = sub(x0, scaled(step, f.gradient(x0)));

    SolverParams p;
    p.tau = step;
    p.theta = 123.0;
    CHECK(rel_diff(gda_step(init_state(Algorithm::gda, x0, con), f, con, p).x, gd) <= 1e-15);
    p.alpha1 = step;
    p.alpha2 = 0.7;
    const SolverState s1 = papc_pd_step(init_state(Algorithm::papc, x0, con), f, con, p);
    CHECK(rel_diff(s1.x, gd) <= 1e-15);
    CHECK(s1.dual == Vector{0, 0});
    CHECK(rel_diff(papc_primal_step(init_state(Algorithm::papc_primal, x0, con), f, con, p).x, gd) <= 1e-15);
}

TEST_CASE("one PAPC step by hand")
{
    // f = 1/2 (x1^2 + 2 x2^2) - x1, constraint x1 + x2 = 1
    const Objective f = Objective::quadratic(Matrix{{1, 0}, {0, 2}}, Vector{1, 0}, 1, 2);
    Constraint con;
    con.E = Matrix{{1, 1}};
    con.q = Vector{1};
    con.sigma1 = con.sigmar = 2;
    con.rank = 1;
    SolverParams p;
    p.alpha1 = 0.5;
    p.alpha2 = 0.25;
    const Vector x0{0, 0};
    // grad = (-1, 0); base = (0.5, 0); E base - q = -0.5; v1 = 0.25 * (-0.5, -0.5)
    const SolverState a = papc_pd_step(init_state(Algorithm::papc, x0, con), f, con, p);
    CHECK(std::abs(a.dual[0] + 0.125) <= 1e-14);
    CHECK(std::abs(a.dual[1] + 0.125) <= 1e-14);
    CHECK(std::abs(a.x[0] - 0.5625) <= 1e-14);
    CHECK(std::abs(a.x[1] - 0.0625) <= 1e-14);
    const SolverState b = papc_primal_step(init_state(Algorithm::papc_primal, x0, con), f, con, p);
    CHECK(std::abs(b.x[0] - 0.5625) <= 1e-14);
    CHECK(std::abs(b.x[1] - 0.0625) <= 1e-14);
}

TEST_CASE("PAPC primal-dual and primal-only forms produce the same iterates")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        InstanceSpec s = quad_spec(seed);
        s.kind = seed % 2 ? ObjectiveKind::logistic : ObjectiveKind::smooth_l1;
        const GeneratedInstance inst = gen_instance(s);
        const SolverParams p = default_params(inst.objective, inst.constraint, Algorithm::papc);
        Vector x0(inst.objective.dim());
        Rng rng(seed);
        for (auto& v : x0) v = rng.normal();
        SolverState a = init_state(Algorithm::papc, x0, inst.constraint);
        SolverState b = init_state(Algorithm::papc_primal, x0, inst.constraint);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            a = papc_pd_step(a, inst.objective, inst.constraint, p);
            b = papc_primal_step(b, inst.objective, inst.constraint, p);
            worst = std::max(worst, rel_diff(b.x, a.x));
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("default parameters")
{
    const Objective f = Objective::quadratic(Matrix::identity(2), Vector{0, 0}, 1.0, 10.0);
    Constraint con;
    con.E = Matrix{{1, 0}};
    con.q = Vector{0};
    con.sigma1 = 10.0;
    con.sigmar = 1.0;
    const SolverParams p = default_params(f, con, Algorithm::igm, 2);
    CHECK(p.alpha1 == doctest::Approx(2.0 / 11.0));
    CHECK(p.alpha2 == doctest::Approx(2.0 / 11.0));
    const SolverParams pp = default_params(f, con, Algorithm::papc);
    CHECK(pp.alpha1 * pp.alpha2 * con.sigma1 == doctest::Approx(1.0));
    CHECK(pp.alpha2 == doctest::Approx(f.L() / con.sigma1));
    const SolverParams pg = default_params(f, con, Algorithm::gda);
    CHECK(pg.tau == doctest::Approx(0.1));
    CHECK(pg.theta == doctest::Approx(0.1));
    const Objective g = Objective::quadratic(Matrix::identity(2), Vector{0, 0}, 4.0, 4.0);
    CHECK(default_params(g, con, Algorithm::igm).alpha1 == doctest::Approx(0.25));

    SolverParams bad = p;
    bad.alpha1 = 2.0 / f.L();
    CHECK_THROWS_AS(validate(bad, Algorithm::igm, f, con), std::invalid_argument);
    bad = p;
    bad.two_ell = 0;
    CHECK_THROWS_AS(validate(bad, Algorithm::igm, f, con), std::invalid_argument);
    CHECK(parse_algorithm("papc_primal") == Algorithm::papc_primal);
    CHECK_THROWS(parse_algorithm("admm"));
}

TEST_CASE("run loop behavior")
{
    const GeneratedInstance inst = gen_instance(quad_spec(6));
    const OracleSolution o = oracle_solve(inst);
    const SolverParams p = default_params(inst.objective, inst.constraint, Algorithm::igm, 2);

    RunOptions ro;
    ro.tol = std::numeric_limits<double>::infinity();
    const RunResult r0 = run(Algorithm::igm, inst.objective, inst.constraint, p, ro, o.x_star);
    CHECK(r0.trace.rows.size() == 1);
    CHECK(r0.trace.rows[0].k == 0);
    CHECK(r0.trace.rows[0].rel_err == doctest::Approx(1.0)); // x0 = 0
    CHECK(r0.trace.status == RunStatus::converged);

    ro.tol = 1e-8;
    ro.checkpoint_every = 25;
    const RunResult a = run(Algorithm::igm, inst.objective, inst.constraint, p, ro, o.x_star);
    const RunResult b = run(Algorithm::igm, inst.objective, inst.constraint, p, ro, o.x_star);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
        CHECK(a.trace.rows[i].k == i);
        CHECK(a.trace.rows[i].rel_err == b.trace.rows[i].rel_err);
        CHECK(a.trace.rows[i].matvec_count == b.trace.rows[i].matvec_count);
        CHECK(std::isfinite(a.trace.rows[i].rel_err));
    }
    CHECK(a.trace.status == RunStatus::converged);

    // predicted budget from the closed-form rate
    const double rho_star = rate_rho_star(5.0 / 0.5, 4.0 / 0.04, 2);
    const auto budget = static_cast<std::uint64_t>(1.5 * std::ceil(std::log(1e8) / std::log(1.0 / rho_star)));
    REQUIRE(a.trace.iterations_to(1e-8));
    CHECK(*a.trace.iterations_to(1e-8) <= budget);

    // rel_err recomputed offline from checkpoints
    REQUIRE(a.checkpoints.size() >= 10);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto& [k, x] = a.checkpoints[i];
        const double offline = norm2(sub(x, o.x_star)) / norm2(o.x_star);
        CHECK(a.trace.rows[k].rel_err == doctest::Approx(offline).epsilon(1e-14));
    }

    // divergence is reported distinctly
    SolverParams g = default_params(inst.objective, inst.constraint, Algorithm::gda);
    g.tau = 10.0;
    const RunResult d = run(Algorithm::gda, inst.objective, inst.constraint, g, ro, o.x_star);
    CHECK(d.trace.status == RunStatus::diverged);
    for (const auto& row : d.trace.rows) CHECK(std::isfinite(row.rel_err));

    RunOptions tiny;
    tiny.max_iter = 3;
    const RunResult m = run(Algorithm::igm, inst.objective, inst.constraint, p, tiny, o.x_star);
    CHECK(m.trace.status == RunStatus::maxiter);
    CHECK(m.trace.rows.size() == 4);
}

TEST_CASE("GDA converges to the KKT point on a small quadratic")
{
    InstanceSpec s = quad_spec(7, 12, 6, 4);
    s.sigmar = 0.4;
    const GeneratedInstance inst = gen_instance(s);
    const OracleSolution o = oracle_solve(inst);
    const SolverParams p = default_params(inst.objective, inst.constraint, Algorithm::gda);
    RunOptions ro;
    ro.tol = 1e-10;
    const RunResult r = run(Algorithm::gda, inst.objective, inst.constraint, p, ro, o.x_star);
    REQUIRE(r.trace.status == RunStatus::converged);
    const Vector& x = r.final_state.x;
    Vector res = matvec(inst.constraint.E, x);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= inst.constraint.q[i];
    CHECK(norm2(res) <= 1e-8);
    CHECK(norm2(add(inst.objective.gradient(x), matvec_t(inst.constraint.E, r.final_state.dual))) <= 1e-8);
}

TEST_CASE("geometric envelope on quadratic instances")
{
    for (std::uint64_t seed : {11, 12, 13}) {
        const GeneratedInstance inst = gen_instance(quad_spec(seed));
        const OracleSolution o = oracle_solve(inst);
        for (int two_ell : {1, 2, 4}) {
            const SolverParams p = default_params(inst.objective, inst.constraint, Algorithm::igm, two_ell);
            const double rho = igm_predicted_rate(inst.objective, inst.constraint, p);
            RunOptions ro;
            ro.tol = 1e-12;
            const RunResult r = run(Algorithm::igm, inst.objective, inst.constraint, p, ro, o.x_star);
            REQUIRE(r.trace.rows.size() > 50);
            double M = 0.0;
            for (std::size_t k = 10; k <= 50; ++k) M = std::max(M, r.trace.rows[k].rel_err / std::pow(rho, k));
            bool ok = true;
            for (std::size_t k = 10; k < r.trace.rows.size(); ++k)
                ok = ok && r.trace.rows[k].rel_err <= 1.5 * M * std::pow(rho, static_cast<double>(k));
            CAPTURE(two_ell);
            CHECK(ok);
        }
    }
}

TEST_CASE("shift invariance: solving with q equals solving q = 0 around x_par")
{
    const GeneratedInstance inst = gen_instance(quad_spec(14));
    const OracleSolution o = oracle_solve(inst);
    const auto& qd = std::get<QuadraticData>(inst.objective.data());
    // g(y) = f(y + x_par) = 1/2 y'Qy - (b - Q x_par)'y + const
    const Objective shifted =
        Objective::quadratic(qd.Q, sub(qd.b, matvec(qd.Q, o.x_par)), inst.objective.m(), inst.objective.L());
    Constraint con0 = inst.constraint;
    con0.q = Vector(con0.rows(), 0.0);

    Rng rng(2);
    Vector x0(inst.objective.dim());
    for (auto& v : x0) v = rng.normal();
    for (Algorithm a : {Algorithm::igm, Algorithm::papc}) {
        const SolverParams p = default_params(inst.objective, inst.constraint, a, 2);
        SolverState s = init_state(a, x0, inst.constraint);
        SolverState t = init_state(a, sub(x0, o.x_par), con0);
        if (a == Algorithm::igm) t.v_prev = sub(x0, o.x_par);
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            s = step(a, s, inst.objective, inst.constraint, p);
            t = step(a, t, shifted, con0, p);
            worst = std::max(worst, norm2(sub(sub(s.x, o.x_par), t.x)) / (1.0 + norm2(t.x)));
        }
        CHECK(worst <= 1e-10);
    }
}
