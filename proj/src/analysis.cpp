#include "eqopt/analysis.hpp"

#include <cmath>

namespace eqopt {

RateFit fit_rate(const std::vector<std::uint64_t>& k, const std::vector<double>& rel_err, const FitOptions& opt)
{
    if (k.size() != rel_err.size()) throw std::invalid_argument("fit_rate: length mismatch");
    if (!(opt.window_fraction > 0.0 && opt.window_fraction <= 1.0))
        throw std::invalid_argument("fit_rate: window_fraction must lie in (0, 1]");

    std::size_t begin = k.size();
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (rel_err[i] <= opt.upper) {
            begin = i;
            break;
        }
    }
    std::size_t end = begin;
    while (end < k.size() && rel_err[end] >= opt.floor && rel_err[end] > 0.0) ++end;

    const std::size_t span = end - begin;
    if (begin == k.size() || span < opt.min_points)
        throw FitError("fit_rate: only " + std::to_string(begin == k.size() ? 0 : span) +
                       " points in the decay segment");

    const auto count = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(opt.window_fraction * span)));
    const std::size_t first = end - std::min(count, span);

    const double nn = static_cast<double>(end - first);
    double mx = 0, my = 0;
    for (std::size_t i = first; i < end; ++i) {
        mx += static_cast<double>(k[i]);
        my += std::log(rel_err[i]);
    }
    mx /= nn;
    my /= nn;
    double sxx = 0, sxy = 0;
    for (std::size_t i = first; i < end; ++i) {
        const double dx = static_cast<double>(k[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(rel_err[i]) - my);
    }
    if (!(sxx > 0.0)) throw FitError("fit_rate: degenerate iteration indices");
    const double slope = sxy / sxx;
    const double icpt = my - slope * mx;
    // a log-drop below 1e-10 across the whole window is not decay
    const double k_span = static_cast<double>(k[end - 1] - k[first]);
    if (!std::isfinite(slope) || slope * k_span > -1e-10) throw FitError("fit_rate: trace shows no decay");
    return {std::exp(slope), std::exp(icpt), end - first};
}

RateFit fit_rate(const IterateTrace& trace, const FitOptions& opt)
{
    std::vector<std::uint64_t> k;
    std::vector<double> e;
    k.reserve(trace.rows.size());
    e.reserve(trace.rows.size());
    for (const auto& row : trace.rows) {
        k.push_back(row.k);
        e.push_back(row.rel_err);
    }
    return fit_rate(k, e, opt);
}

std::uint64_t predicted_iterations(double rho, double eps)
{
    if (!(rho > 0.0 && rho < 1.0) || !(eps > 0.0 && eps < 1.0)) return 0;
    return static_cast<std::uint64_t>(std::ceil(std::log(1.0 / eps) / std::log(1.0 / rho)));
}

} // namespace eqopt
