#include "eqopt/harness.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace eqopt;

namespace {

py::array_t<double> to_array(const Vector& v)
{
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::array_t<double> to_array(const Matrix& M)
{
    py::array_t<double> a({static_cast<py::ssize_t>(M.rows()), static_cast<py::ssize_t>(M.cols())});
    std::copy(M.data().begin(), M.data().end(), a.mutable_data());
    return a;
}

Vector to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a)
{
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
    return Vector(a.data(), a.data() + a.shape(0));
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

int two_ell_from(double ell)
{
    const double d = 2.0 * ell;
    if (std::abs(d - std::round(d)) > 1e-12 || d < 1) throw std::invalid_argument("ell must be a positive multiple of 0.5");
    return static_cast<int>(std::round(d));
}

py::dict trace_dict(const IterateTrace& t)
{
    std::vector<double> k, e, mv, ms;
    for (const auto& r : t.rows) {
        k.push_back(static_cast<double>(r.k));
        e.push_back(r.rel_err);
        mv.push_back(static_cast<double>(r.matvec_count));
        ms.push_back(r.wall_ms);
    }
    py::dict d;
    d["k"] = to_array(k);
    d["rel_err"] = to_array(e);
    d["matvec_count"] = to_array(mv);
    d["wall_ms"] = to_array(ms);
    d["status"] = to_string(t.status);
    return d;
}

} // namespace

PYBIND11_MODULE(_eqopt, mod)
{
    mod.doc() = "Linearly constrained first-order solvers and rate certificates";

    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<PoleError>(mod, "PoleError", PyExc_ArithmeticError);

    py::class_<GeneratedInstance>(mod, "Instance")
        .def_property_readonly("kind", [](const GeneratedInstance& g) { return to_string(g.spec.kind); })
        .def_property_readonly("n", [](const GeneratedInstance& g) { return g.spec.n; })
        .def_property_readonly("c", [](const GeneratedInstance& g) { return g.spec.c; })
        .def_property_readonly("rank", &GeneratedInstance::rank)
        .def_property_readonly("m", [](const GeneratedInstance& g) { return g.objective.m(); })
        .def_property_readonly("L", [](const GeneratedInstance& g) { return g.objective.L(); })
        .def_property_readonly("sigma1", [](const GeneratedInstance& g) { return g.constraint.sigma1; })
        .def_property_readonly("sigmar", [](const GeneratedInstance& g) { return g.constraint.sigmar; })
        .def_property_readonly("E", [](const GeneratedInstance& g) { return to_array(g.constraint.E); })
        .def_property_readonly("q", [](const GeneratedInstance& g) { return to_array(g.constraint.q); })
        .def_property_readonly("x_bar", [](const GeneratedInstance& g) { return to_array(g.x_bar); })
        .def("value", [](const GeneratedInstance& g, py::array_t<double> x) { return g.objective.value(to_vector(x)); })
        .def("gradient",
             [](const GeneratedInstance& g, py::array_t<double> x) { return to_array(g.objective.gradient(to_vector(x))); })
        .def("spec", [](const GeneratedInstance& g) { return json_to_py(instance_to_json(g.spec)); });

    mod.def(
        "generate_instance",
        [](const std::string& kind, std::size_t n, std::size_t c, std::size_t r, double m, double L, double sigma1,
           double sigmar, std::uint64_t seed, std::size_t samples) {
            InstanceSpec s;
            s.kind = parse_objective_kind(kind);
            s.n = n;
            s.c = c;
            s.r = r;
            s.m = m;
            s.L = L;
            s.sigma1 = sigma1;
            s.sigmar = sigmar;
            s.seed = seed;
            s.samples = samples;
            return gen_instance(s);
        },
        py::arg("kind"), py::arg("n"), py::arg("c"), py::arg("r"), py::arg("m"), py::arg("L"), py::arg("sigma1"),
        py::arg("sigmar"), py::arg("seed") = 0, py::arg("samples") = 0);

    mod.def(
        "oracle_solve",
        [](const GeneratedInstance& g) {
            const OracleSolution o = oracle_solve(g);
            py::dict d;
            d["x_star"] = to_array(o.x_star);
            d["feasibility_residual"] = o.feasibility_residual;
            d["stationarity_residual"] = o.stationarity_residual;
            d["feasibility_scale"] = o.feasibility_scale;
            d["stationarity_scale"] = o.stationarity_scale;
            d["newton_steps"] = o.newton_steps;
            d["kkt_ok"] = o.kkt_ok();
            return d;
        },
        py::arg("instance"));

    mod.def(
        "solve",
        [](const GeneratedInstance& g, const std::string& algorithm, double ell, std::uint64_t max_iter, double tol,
           std::optional<py::array_t<double>> x_star, std::optional<py::array_t<double>> x0) {
            AlgorithmSetting s;
            s.algorithm = parse_algorithm(algorithm);
            s.two_ell = two_ell_from(ell);
            const SolverParams p = resolve_params(s, g.objective, g.constraint);
            RunOptions ro;
            ro.max_iter = max_iter;
            ro.tol = tol;
            if (x0) ro.x0 = to_vector(*x0);
            const Vector ref = x_star ? to_vector(*x_star) : oracle_solve(g).x_star;
            RunResult r;
            {
                py::gil_scoped_release nogil;
                r = run(s.algorithm, g.objective, g.constraint, p, ro, ref);
            }
            py::dict d = trace_dict(r.trace);
            d["x"] = to_array(r.final_state.x);
            d["iterations"] = r.final_state.k;
            d["matvecs"] = r.final_state.matvec_count;
            if (s.algorithm == Algorithm::igm) d["predicted_rate"] = igm_predicted_rate(g.objective, g.constraint, p);
            return d;
        },
        py::arg("instance"), py::arg("algorithm") = "igm", py::arg("ell") = 1.0, py::arg("max_iter") = 100000,
        py::arg("tol") = 1e-8, py::arg("x_star") = py::none(), py::arg("x0") = py::none());

    mod.def("rate_rho_star", [](double kf, double kE, double ell) { return rate_rho_star(kf, kE, two_ell_from(ell)); },
            py::arg("kappa_f"), py::arg("kappa_E"), py::arg("ell") = 1.0);

    mod.def(
        "certify",
        [](double m, double L, double sigma_l, double sigma_u, double ell, std::optional<double> alpha1,
           std::optional<double> alpha2) {
            SynthesisSpec s = SynthesisSpec::optimal(m, L, sigma_l, sigma_u, two_ell_from(ell));
            if (alpha1) s.alpha1 = *alpha1;
            if (alpha2) s.alpha2 = *alpha2;
            RateCertificate c;
            {
                py::gil_scoped_release nogil;
                c = check_conditions(s);
            }
            return json_to_py(certificate_to_json(c, s));
        },
        py::arg("m"), py::arg("L"), py::arg("sigma_l"), py::arg("sigma_u"), py::arg("ell") = 1.0,
        py::arg("alpha1") = py::none(), py::arg("alpha2") = py::none());

    mod.def(
        "hbar",
        [](std::complex<double> z, double sigma, double gamma, double m, double L, double sigma_l, double sigma_u,
           double ell) {
            return hbar_eval(z, sigma, gamma, SynthesisSpec::optimal(m, L, sigma_l, sigma_u, two_ell_from(ell)));
        },
        py::arg("z"), py::arg("sigma"), py::arg("gamma"), py::arg("m"), py::arg("L"), py::arg("sigma_l"),
        py::arg("sigma_u"), py::arg("ell") = 1.0);

    mod.def("mode_radius", &mode_radius, py::arg("G"), py::arg("a"));

    mod.def(
        "transfer_reduce",
        [](std::complex<double> z, double sigma, double alpha1, double alpha2) {
            const ReducedTransfer r = transfer_reduce(z, sigma, alpha1, alpha2);
            return py::make_tuple(r.K1, r.K2);
        },
        py::arg("z"), py::arg("sigma"), py::arg("alpha1"), py::arg("alpha2"));

    mod.def(
        "fit_rate",
        [](py::array_t<double> k, py::array_t<double> err) {
            const Vector kv = to_vector(k);
            std::vector<std::uint64_t> ki(kv.begin(), kv.end());
            const RateFit f = fit_rate(ki, to_vector(err));
            return py::make_tuple(f.rate, f.intercept);
        },
        py::arg("k"), py::arg("rel_err"));

    mod.def(
        "run_command",
        [](const std::string& command, const std::string& config, std::optional<std::string> out,
           std::optional<std::uint64_t> seed) {
            std::optional<std::filesystem::path> o;
            if (out) o = *out;
            const ExperimentConfig cfg = load_config(config, seed, o);
            std::ostringstream log;
            {
                py::gil_scoped_release nogil;
                if (command == "generate") cmd_generate(cfg, log);
                else if (command == "solve") cmd_solve(cfg, log);
                else if (command == "bench") cmd_bench(cfg, log);
                else if (command == "certify") cmd_certify(cfg, log);
                else if (command == "plot") cmd_plot(cfg, log);
                else throw std::invalid_argument("unknown command '" + command + "'");
            }
            return log.str();
        },
        py::arg("command"), py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none());
}
