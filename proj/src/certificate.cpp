#include "eqopt/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace eqopt {

namespace {

// n points log-spaced on [lo, hi] with both endpoints exact.
std::vector<double> log_grid(double lo, double hi, int n)
{
    if (n < 1) throw std::invalid_argument("log_grid: need at least one point");
    if (lo == hi || n == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(n));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::string where_string(const GridPoint& p)
{
    std::ostringstream os;
    os << "gamma=" << p.gamma << " theta=" << p.theta << " sigma=" << p.sigma;
    return os.str();
}

} // namespace

SynthesisSpec SynthesisSpec::optimal(double m, double L, double sigma_l, double sigma_u, int two_ell)
{
    SynthesisSpec s;
    s.m = m;
    s.L = L;
    s.sigma_l = sigma_l;
    s.sigma_u = sigma_u;
    s.two_ell = two_ell;
    s.alpha1 = 2.0 / (m + L);
    s.alpha2 = 2.0 / (sigma_l + sigma_u);
    return s;
}

void SynthesisSpec::validate() const
{
    auto fail = [](const std::string& msg) { throw std::invalid_argument("synthesis spec: " + msg); };
    for (double v : {m, L, sigma_l, sigma_u, alpha1, alpha2})
        if (!std::isfinite(v)) fail("non-finite value");
    if (!(m > 0.0 && m <= L)) fail("need 0 < m <= L");
    if (!(sigma_l > 0.0 && sigma_l <= sigma_u)) fail("need 0 < sigma_l <= sigma_u");
    if (two_ell < 1) fail("two_ell must be a positive integer");
    if (!(alpha1 > 0.0 && alpha1 < 2.0 / L)) fail("alpha1 must lie in (0, 2/L)");
    if (!(alpha2 > 0.0 && alpha2 < 2.0 / sigma_u)) fail("alpha2 must lie in (0, 2/sigma_u)");
}

double g_sigma(double sigma, double alpha2, int two_ell)
{
    if (sigma < 0.0) throw std::invalid_argument("g_sigma: sigma must be nonnegative");
    return std::pow(std::abs(1.0 - alpha2 * sigma), 0.5 * two_ell);
}

double rate_rho(const SynthesisSpec& spec)
{
    return std::max(g_sigma(spec.sigma_l, spec.alpha2, spec.two_ell), std::abs(1.0 - spec.alpha1 * spec.m));
}

double rate_rho_star(double kappa_f, double kappa_E, int two_ell)
{
    if (!(kappa_f >= 1.0 && kappa_E >= 1.0)) throw std::invalid_argument("rate_rho_star: condition numbers must be >= 1");
    return std::max((kappa_f - 1.0) / (kappa_f + 1.0), std::pow((kappa_E - 1.0) / (kappa_E + 1.0), 0.5 * two_ell));
}

double effective_sector_bound(const SynthesisSpec& spec)
{
    const double rho = rate_rho(spec);
    return spec.m * (1.0 + rho) / (1.0 - rho);
}

Complex hbar_eval(Complex z, double sigma, double gamma, const SynthesisSpec& spec)
{
    const double g = g_sigma(sigma, spec.alpha2, spec.two_ell);
    const double rho = rate_rho(spec);
    const Complex s = gamma * z;
    Complex num;
    Complex den;
    if (g == 1.0) {
        num = s + rho;
        den = s - rho;
    } else {
        const Complex base = s * (s - g * g);
        const Complex tail = rho * g * (s - 1.0);
        num = base + tail;
        den = base - tail;
    }
    if (std::abs(den) < 1e-300) throw PoleError("hbar_eval: evaluation at a pole", z);
    return num / den;
}

Complex h_from_hbar(Complex hb, double m, double L_tilde)
{
    const Complex den = m * hb - L_tilde;
    const double scale = std::max(std::abs(m * hb), std::abs(L_tilde));
    if (std::abs(den) <= 1e-13 * scale) throw PoleError("h_from_hbar: m*hb - L_tilde vanishes", hb);
    return (hb - 1.0) / den;
}

std::vector<double> sigma_grid(const SynthesisSpec& spec, int points)
{
    std::vector<double> out{0.0};
    const auto g = log_grid(spec.sigma_l, spec.sigma_u, points);
    out.insert(out.end(), g.begin(), g.end());
    return out;
}

std::vector<double> hbar_pole_moduli(double sigma, double gamma, const SynthesisSpec& spec)
{
    const double g = g_sigma(sigma, spec.alpha2, spec.two_ell);
    const double rho = rate_rho(spec);
    if (g == 1.0) return {rho / gamma};
    const auto [s1, s2] = quadratic_roots(-(g * g + rho * g), rho * g);
    return {std::abs(s1) / gamma, std::abs(s2) / gamma};
}

RateCertificate check_conditions(const SynthesisSpec& spec, const GridOptions& grid)
{
    spec.validate();
    if (grid.gamma_points < 1 || grid.theta_points < 2 || grid.sigma_points < 1)
        throw std::invalid_argument("check_conditions: grids too small");

    RateCertificate cert;
    cert.rho = rate_rho(spec);
    cert.rho_star = rate_rho_star(spec.L / spec.m, spec.sigma_u / spec.sigma_l, spec.two_ell);
    cert.L = spec.L;
    cert.L_tilde = effective_sector_bound(spec);

    const auto sigmas = sigma_grid(spec, grid.sigma_points);

    // causality: hb -> 1 far from the origin
    {
        ConditionReport& c = cert.causality;
        c.name = "causality";
        c.worst = 0.0;
        for (double sigma : sigmas) {
            for (int t = 0; t < 16; ++t) {
                const double th = 2.0 * std::numbers::pi * t / 16;
                const Complex z = std::polar(grid.causality_radius, th);
                const double d = std::abs(hbar_eval(z, sigma, 1.0, spec) - 1.0);
                if (d > c.worst) {
                    c.worst = d;
                    c.where = {1.0, th, sigma};
                }
            }
        }
        c.pass = c.worst <= grid.causality_tol;
    }

    // blocking zero: hb(1, sigma) = 1 on the nonzero spectrum
    {
        ConditionReport& c = cert.tracking;
        c.name = "tracking";
        c.worst = 0.0;
        for (std::size_t i = 1; i < sigmas.size(); ++i) {
            const double d = std::abs(hbar_eval(1.0, sigmas[i], 1.0, spec) - 1.0);
            if (d > c.worst) {
                c.worst = d;
                c.where = {1.0, 0.0, sigmas[i]};
            }
        }
        c.pass = c.worst <= grid.equality_tol;
    }

    // pole of h at z = 1 on the null space
    {
        ConditionReport& c = cert.pole_at_one;
        c.name = "pole_at_one";
        const Complex hb = hbar_eval(1.0, 0.0, 1.0, spec);
        cert.hb_at_one_null = hb.real();
        const double target = cert.L_tilde / spec.m;
        c.worst = std::abs(hb - target) / std::max(1.0, target);
        c.where = {1.0, 0.0, 0.0};
        c.pass = c.worst <= grid.equality_tol;
        const double lm = spec.L / spec.m;
        cert.matches_L_over_m = std::abs(hb - lm) <= grid.equality_tol * std::max(1.0, lm);
        std::ostringstream os;
        os << "hb(1,0)=" << cert.hb_at_one_null << " L_tilde/m=" << target << " L/m=" << lm;
        c.detail = os.str();
    }

    std::vector<double> gammas;
    {
        const double lo = std::min(cert.rho + grid.gamma_offset, 1.0);
        for (int j = 0; j < grid.gamma_points; ++j)
            gammas.push_back(grid.gamma_points == 1 ? 1.0 : lo + (1.0 - lo) * j / (grid.gamma_points - 1));
    }

    // strict positive realness on the shrunken circles
    {
        ConditionReport& c = cert.positivity;
        c.name = "positivity";
        c.worst = std::numeric_limits<double>::infinity();
        bool hit_pole = false;
        for (double gamma : gammas) {
            for (double sigma : sigmas) {
                for (int t = 0; t < grid.theta_points; ++t) {
                    const double th = std::numbers::pi * t / (grid.theta_points - 1);
                    double re;
                    try {
                        re = hbar_eval(std::polar(1.0, th), sigma, gamma, spec).real();
                    } catch (const PoleError&) {
                        re = -std::numeric_limits<double>::infinity();
                        hit_pole = true;
                    }
                    if (re < c.worst) {
                        c.worst = re;
                        c.where = {gamma, th, sigma};
                    }
                }
            }
        }
        c.pass = !hit_pole && c.worst > 0.0;
        if (hit_pole) c.detail = "pole on the evaluation contour";
        cert.spr_min_margin = c.worst;
        cert.worst_point = c.where;
    }

    // poles of hb(gamma z, sigma) strictly inside the unit disk
    {
        ConditionReport& c = cert.stability;
        c.name = "stability";
        c.worst = 0.0;
        for (double gamma : gammas) {
            for (double sigma : sigmas) {
                for (double r : hbar_pole_moduli(sigma, gamma, spec)) {
                    if (r > c.worst) {
                        c.worst = r;
                        c.where = {gamma, 0.0, sigma};
                    }
                }
            }
        }
        c.pass = c.worst < 1.0;
        cert.pole_max_modulus = c.worst;
    }

    for (ConditionReport* c : {&cert.causality, &cert.tracking, &cert.pole_at_one, &cert.positivity, &cert.stability})
        if (!c->pass && c->detail.empty()) c->detail = "violated at " + where_string(c->where);

    cert.mode_scan_max_radius = mode_grid_scan(spec, grid.mode_lambda_points, grid.mode_sigma_points).overall_max();
    cert.pass = cert.causality.pass && cert.tracking.pass && cert.pole_at_one.pass && cert.positivity.pass &&
                cert.stability.pass;
    return cert;
}

double mode_radius(double G, double a)
{
    const auto [s1, s2] = quadratic_roots(-G * (2.0 - a), G * (1.0 - a));
    return std::max(std::abs(s1), std::abs(s2));
}

ModeGrid mode_grid_scan(const SynthesisSpec& spec, int lambda_points, int sigma_points)
{
    spec.validate();
    ModeGrid mg;
    mg.lambdas = log_grid(spec.m, spec.L, lambda_points);
    mg.sigmas = log_grid(spec.sigma_l, spec.sigma_u, sigma_points);
    mg.radius.reserve(mg.lambdas.size() * mg.sigmas.size());
    mg.max_radius = -1.0;
    for (double lam : mg.lambdas) {
        const double a = spec.alpha1 * lam;
        for (double sigma : mg.sigmas) {
            const double G = std::pow(1.0 - spec.alpha2 * sigma, spec.two_ell);
            const double r = mode_radius(G, a);
            mg.radius.push_back(r);
            if (r > mg.max_radius) {
                mg.max_radius = r;
                mg.argmax_lambda = lam;
                mg.argmax_sigma = sigma;
            }
        }
        mg.null_space_max_radius = std::max(mg.null_space_max_radius, std::abs(1.0 - a));
    }
    return mg;
}

ReducedTransfer transfer_reduce(Complex z, double sigma, double alpha1, double alpha2)
{
    const double L0 = 1.0 - alpha1 * alpha2 * sigma;
    const double L1 = alpha2 * sigma;
    const double L2 = -alpha1 * alpha2 * sigma;
    const Complex K0 = -alpha1 * z;
    const Complex d = z - L0;
    if (std::abs(d) < 1e-300) throw PoleError("transfer_reduce: z coincides with L0", z);
    return {1.0 + K0 * (L1 / d), alpha1 + K0 * (L2 / d)};
}

} // namespace eqopt
