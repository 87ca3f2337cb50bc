#include "eqopt/harness.hpp"

#include "eqopt/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace eqopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key)) throw ConfigError("config: " + where + " is missing '" + key + "'");
    return get_or<T>(obj, key, T{});
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError("config: unknown key '" + k + "' in " + where);
}

json read_json_file(const fs::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + file.string() + ": " + e.what());
    }
}

void write_text(const fs::path& file, const std::string& text)
{
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

void write_json(const fs::path& file, const json& doc) { write_text(file, doc.dump(2) + "\n"); }

template <class T>
json opt_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::string format_ell(int two_ell)
{
    std::ostringstream os;
    os << 0.5 * two_ell;
    return os.str();
}

AlgorithmSetting parse_setting_entry(const json& e, std::vector<AlgorithmSetting>& out)
{
    AlgorithmSetting base;
    if (e.is_string()) {
        try {
            base.algorithm = parse_algorithm(e.get<std::string>());
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("config: ") + ex.what());
        }
        if (base.algorithm == Algorithm::igm) {
            for (int t : {1, 2, 4}) {
                base.two_ell = t;
                out.push_back(base);
            }
        } else {
            out.push_back(base);
        }
        return base;
    }
    reject_unknown(e, {"algorithm", "two_ell", "ell", "alpha1", "alpha2", "tau", "theta"}, "algorithms entry");
    try {
        base.algorithm = parse_algorithm(require<std::string>(e, "algorithm", "algorithms entry"));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    if (e.contains("alpha1")) base.alpha1 = get_or<double>(e, "alpha1", 0.0);
    if (e.contains("alpha2")) base.alpha2 = get_or<double>(e, "alpha2", 0.0);
    if (e.contains("tau")) base.tau = get_or<double>(e, "tau", 0.0);
    if (e.contains("theta")) base.theta = get_or<double>(e, "theta", 0.0);

    std::vector<int> two_ells;
    auto collect = [&](const json& v, bool halves) {
        auto one = [&](const json& x) {
            if (!x.is_number()) throw ConfigError("config: two_ell / ell must be numeric");
            const double d = x.get<double>() * (halves ? 2.0 : 1.0);
            const double r = std::round(d);
            if (std::abs(d - r) > 1e-12 || r < 1)
                throw ConfigError("config: 2*ell must be a positive integer, got " + std::to_string(d));
            two_ells.push_back(static_cast<int>(r));
        };
        if (v.is_array())
            for (const auto& x : v) one(x);
        else
            one(v);
    };
    if (e.contains("two_ell") && e.contains("ell")) throw ConfigError("config: give either two_ell or ell, not both");
    if (e.contains("two_ell")) collect(e.at("two_ell"), false);
    if (e.contains("ell")) collect(e.at("ell"), true);
    if (base.algorithm != Algorithm::igm) {
        if (!two_ells.empty()) throw ConfigError("config: two_ell only applies to igm");
        out.push_back(base);
        return base;
    }
    if (two_ells.empty()) two_ells = {2};
    for (int t : two_ells) {
        AlgorithmSetting s = base;
        s.two_ell = t;
        out.push_back(s);
    }
    return base;
}

json setting_to_json(const AlgorithmSetting& s)
{
    json j{{"algorithm", to_string(s.algorithm)}};
    if (s.algorithm == Algorithm::igm) j["two_ell"] = s.two_ell;
    if (s.alpha1) j["alpha1"] = *s.alpha1;
    if (s.alpha2) j["alpha2"] = *s.alpha2;
    if (s.tau) j["tau"] = *s.tau;
    if (s.theta) j["theta"] = *s.theta;
    return j;
}

json params_to_json(Algorithm a, const SolverParams& p)
{
    switch (a) {
    case Algorithm::igm: return {{"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"two_ell", p.two_ell}};
    case Algorithm::gda: return {{"tau", p.tau}, {"theta", p.theta}};
    case Algorithm::papc:
    case Algorithm::papc_primal: return {{"alpha1", p.alpha1}, {"alpha2", p.alpha2}};
    }
    return json::object();
}

struct Prepared {
    GeneratedInstance inst;
    OracleSolution oracle;
};

Prepared prepare(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    GeneratedInstance inst = gen_instance(cfg.instance);
    if (!cfg.x0.empty() && cfg.x0.size() != inst.objective.dim())
        throw ConfigError("config: x0 has length " + std::to_string(cfg.x0.size()) + ", expected " +
                          std::to_string(inst.objective.dim()));
    OracleSolution oracle = oracle_solve(inst);
    if (!oracle.kkt_ok())
        throw NumericalError("reference solution failed its KKT check", oracle.stationarity_residual);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    log << "instance " << to_string(cfg.instance.kind) << " n=" << cfg.instance.n << " c=" << cfg.instance.c
        << " r=" << cfg.instance.r << " kappa_f=" << cfg.instance.L / cfg.instance.m
        << " kappa_E=" << cfg.instance.sigma1 / cfg.instance.sigmar << " seed=" << cfg.instance.seed << '\n'
        << "reference: newton_steps=" << oracle.newton_steps << " |Ex-q|=" << oracle.feasibility_residual
        << " |V2'g|=" << oracle.stationarity_residual << " (" << std::fixed << std::setprecision(1) << ms
        << " ms)\n"
        << std::defaultfloat;
    return {std::move(inst), std::move(oracle)};
}

void emit_cell(const fs::path& out, CellResult& cell)
{
    const fs::path trace = out / ("trace_" + cell.setting.id() + ".csv");
    write_trace_csv(trace, cell.run.trace, cell.record.config_hash);
    cell.record.trace_path = trace.filename().string();
    write_json(out / ("run_" + cell.setting.id() + ".json"), cell.record.to_json());
}

void log_cell(std::ostream& log, const CellResult& c)
{
    log << std::left << std::setw(12) << c.setting.id() << std::right << " status=" << to_string(c.record.status)
        << " iters=" << c.record.iterations << " final=" << c.record.final_rel_err;
    if (c.record.fitted_rate) log << " fitted_rate=" << std::setprecision(8) << *c.record.fitted_rate;
    if (c.record.predicted_rate) log << " predicted=" << *c.record.predicted_rate;
    log << std::setprecision(6) << '\n';
}

std::vector<PlotSeries> series_from_traces(const std::vector<fs::path>& files, const std::vector<std::string>& labels)
{
    std::vector<PlotSeries> out;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const IterateTrace t = read_trace_csv(files[i]);
        PlotSeries s;
        s.name = i < labels.size() ? labels[i] : files[i].stem().string();
        for (const auto& r : t.rows)
            if (r.rel_err > 0.0) s.points.emplace_back(static_cast<double>(r.k), std::log10(r.rel_err));
        out.push_back(std::move(s));
    }
    return out;
}

PlotSeries reference_series(double rate, double e0, std::uint64_t kmax, const std::string& name)
{
    PlotSeries s;
    s.name = name;
    s.dashed = true;
    const std::uint64_t step = std::max<std::uint64_t>(1, kmax / 400);
    for (std::uint64_t k = 0; k <= kmax; k += step)
        s.points.emplace_back(static_cast<double>(k), std::log10(e0) + static_cast<double>(k) * std::log10(rate));
    return s;
}

} // namespace

std::string AlgorithmSetting::id() const
{
    if (algorithm == Algorithm::igm) return "igm_l" + format_ell(two_ell);
    return to_string(algorithm);
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& doc)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
    return buf;
}

json instance_to_json(const InstanceSpec& s)
{
    json j{{"kind", to_string(s.kind)}, {"n", s.n},           {"c", s.c},           {"r", s.r},
           {"m", s.m},                  {"L", s.L},           {"sigma1", s.sigma1}, {"sigmar", s.sigmar},
           {"seed", s.seed}};
    if (s.samples) j["samples"] = s.samples;
    return j;
}

InstanceSpec instance_from_json(const json& j)
{
    reject_unknown(j, {"kind", "n", "c", "r", "m", "L", "sigma1", "sigmar", "seed", "samples", "config_hash"},
                   "instance");
    InstanceSpec s;
    try {
        s.kind = parse_objective_kind(require<std::string>(j, "kind", "instance"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    auto count = [&](const char* key) {
        const json& v = j.contains(key) ? j.at(key) : json();
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(std::string("config: instance '") + key + "' must be a nonnegative integer");
        return v.get<std::size_t>();
    };
    s.n = count("n");
    s.c = count("c");
    s.r = count("r");
    s.m = require<double>(j, "m", "instance");
    s.L = require<double>(j, "L", "instance");
    s.sigma1 = require<double>(j, "sigma1", "instance");
    s.sigmar = require<double>(j, "sigmar", "instance");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0))
            throw ConfigError("config: instance 'seed' must be a nonnegative integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("samples")) s.samples = count("samples");
    return s;
}

std::vector<AlgorithmSetting> default_settings()
{
    std::vector<AlgorithmSetting> out(5);
    out[0].algorithm = Algorithm::gda;
    out[1].algorithm = Algorithm::papc;
    for (int i = 0; i < 3; ++i) {
        out[2 + i].algorithm = Algorithm::igm;
        out[2 + i].two_ell = 1 << i;
    }
    return out;
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir)
{
    reject_unknown(doc, {"name", "instance", "algorithms", "budget", "x0", "fit", "certify", "plot", "out"}, "config");
    ExperimentConfig cfg;
    cfg.name = get_or<std::string>(doc, "name", cfg.name);

    if (!doc.contains("instance")) throw ConfigError("config: missing 'instance'");
    const json& inst = doc.at("instance");
    if (inst.is_string()) {
        fs::path p = inst.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        cfg.instance = instance_from_json(read_json_file(p));
    } else {
        cfg.instance = instance_from_json(inst);
    }

    if (doc.contains("algorithms")) {
        const json& a = doc.at("algorithms");
        if (!a.is_array() || a.empty()) throw ConfigError("config: 'algorithms' must be a nonempty array");
        for (const auto& e : a) parse_setting_entry(e, cfg.settings);
    } else {
        cfg.settings = default_settings();
    }

    if (doc.contains("budget")) {
        const json& b = doc.at("budget");
        reject_unknown(b, {"max_iter", "tol", "ratio_tol"}, "budget");
        cfg.max_iter = get_or<std::uint64_t>(b, "max_iter", cfg.max_iter);
        cfg.tol = get_or<double>(b, "tol", cfg.tol);
        cfg.ratio_tol = get_or<double>(b, "ratio_tol", cfg.ratio_tol);
        if (!(cfg.tol > 0.0)) throw ConfigError("config: budget.tol must be positive");
        if (!(cfg.ratio_tol > 0.0)) throw ConfigError("config: budget.ratio_tol must be positive");
    }

    if (doc.contains("x0")) {
        const json& x0 = doc.at("x0");
        if (x0.is_string()) {
            if (x0.get<std::string>() != "zero") throw ConfigError("config: x0 must be \"zero\" or an array");
        } else if (x0.is_array()) {
            for (const auto& v : x0) {
                if (!v.is_number()) throw ConfigError("config: x0 entries must be numbers");
                cfg.x0.push_back(v.get<double>());
            }
            if (cfg.x0.size() != cfg.instance.n) throw ConfigError("config: x0 length does not match instance n");
        } else {
            throw ConfigError("config: x0 must be \"zero\" or an array");
        }
    }

    if (doc.contains("fit")) {
        reject_unknown(doc.at("fit"), {"window_fraction"}, "fit");
        cfg.window_fraction = get_or<double>(doc.at("fit"), "window_fraction", cfg.window_fraction);
        if (!(cfg.window_fraction > 0.0 && cfg.window_fraction <= 1.0))
            throw ConfigError("config: fit.window_fraction must lie in (0, 1]");
    }

    try {
        validate(cfg.instance);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    // step overrides, checked against the declared constants
    for (const auto& s : cfg.settings) {
        const auto pos = [&](const std::optional<double>& v, const char* nm) {
            if (v && !(*v > 0.0 && std::isfinite(*v)))
                throw ConfigError(std::string("config: ") + nm + " must be positive for " + s.id());
        };
        pos(s.alpha1, "alpha1");
        pos(s.alpha2, "alpha2");
        pos(s.tau, "tau");
        pos(s.theta, "theta");
        if (s.algorithm == Algorithm::igm) {
            if (s.alpha1 && *s.alpha1 >= 2.0 / cfg.instance.L) throw ConfigError("config: igm alpha1 must be < 2/L");
            if (s.alpha2 && *s.alpha2 >= 2.0 / cfg.instance.sigma1)
                throw ConfigError("config: igm alpha2 must be < 2/sigma1");
        }
    }

    if (doc.contains("certify")) {
        const json& c = doc.at("certify");
        reject_unknown(c, {"two_ell", "ell", "m", "L", "sigma_l", "sigma_u", "alpha1", "alpha2", "grid"}, "certify");
        if (c.contains("two_ell")) cfg.certify_two_ell = get_or<int>(c, "two_ell", 2);
        if (c.contains("ell")) {
            const double d = 2.0 * get_or<double>(c, "ell", 1.0);
            if (std::abs(d - std::round(d)) > 1e-12) throw ConfigError("config: certify.ell must be a multiple of 0.5");
            cfg.certify_two_ell = static_cast<int>(std::round(d));
        }
        if (cfg.certify_two_ell < 1) throw ConfigError("config: certify two_ell must be >= 1");
        const bool any = c.contains("m") || c.contains("L") || c.contains("sigma_l") || c.contains("sigma_u") ||
                         c.contains("alpha1") || c.contains("alpha2");
        if (any) {
            SynthesisSpec s = SynthesisSpec::optimal(get_or<double>(c, "m", cfg.instance.m),
                                                     get_or<double>(c, "L", cfg.instance.L),
                                                     get_or<double>(c, "sigma_l", cfg.instance.sigmar),
                                                     get_or<double>(c, "sigma_u", cfg.instance.sigma1),
                                                     cfg.certify_two_ell);
            s.alpha1 = get_or<double>(c, "alpha1", s.alpha1);
            s.alpha2 = get_or<double>(c, "alpha2", s.alpha2);
            try {
                s.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
            cfg.certify_spec = s;
        }
        if (c.contains("grid")) {
            const json& g = c.at("grid");
            reject_unknown(g, {"gamma_points", "theta_points", "sigma_points", "gamma_offset", "mode_lambda_points",
                               "mode_sigma_points"},
                           "certify.grid");
            cfg.grid.gamma_points = get_or<int>(g, "gamma_points", cfg.grid.gamma_points);
            cfg.grid.theta_points = get_or<int>(g, "theta_points", cfg.grid.theta_points);
            cfg.grid.sigma_points = get_or<int>(g, "sigma_points", cfg.grid.sigma_points);
            cfg.grid.gamma_offset = get_or<double>(g, "gamma_offset", cfg.grid.gamma_offset);
            cfg.grid.mode_lambda_points = get_or<int>(g, "mode_lambda_points", cfg.grid.mode_lambda_points);
            cfg.grid.mode_sigma_points = get_or<int>(g, "mode_sigma_points", cfg.grid.mode_sigma_points);
            if (cfg.grid.gamma_points < 1 || cfg.grid.theta_points < 2 || cfg.grid.sigma_points < 1 ||
                cfg.grid.mode_lambda_points < 1 || cfg.grid.mode_sigma_points < 1 || !(cfg.grid.gamma_offset > 0.0))
                throw ConfigError("config: certify.grid sizes out of range");
        }
    }

    if (doc.contains("plot")) {
        const json& p = doc.at("plot");
        reject_unknown(p, {"traces", "labels", "reference_rate", "title"}, "plot");
        for (const auto& t : get_or<std::vector<std::string>>(p, "traces", {})) {
            fs::path tp = t;
            cfg.plot_traces.push_back(tp.is_relative() ? base_dir / tp : tp);
        }
        cfg.plot_labels = get_or<std::vector<std::string>>(p, "labels", {});
        if (p.contains("reference_rate")) {
            const double r = get_or<double>(p, "reference_rate", 0.0);
            if (!(r > 0.0 && r < 1.0)) throw ConfigError("config: plot.reference_rate must lie in (0, 1)");
            cfg.plot_reference_rate = r;
        }
        cfg.plot_title = get_or<std::string>(p, "title", "");
    }

    cfg.out_dir = get_or<std::string>(doc, "out", cfg.out_dir.string());

    // normalized form for hashing
    json settings = json::array();
    for (const auto& s : cfg.settings) settings.push_back(setting_to_json(s));
    cfg.resolved = {{"name", cfg.name},
                    {"instance", instance_to_json(cfg.instance)},
                    {"algorithms", settings},
                    {"budget", {{"max_iter", cfg.max_iter}, {"tol", cfg.tol}, {"ratio_tol", cfg.ratio_tol}}},
                    {"x0", cfg.x0.empty() ? json("zero") : json(cfg.x0)},
                    {"fit", {{"window_fraction", cfg.window_fraction}}},
                    {"certify_two_ell", cfg.certify_two_ell}};
    if (cfg.certify_spec) {
        const auto& s = *cfg.certify_spec;
        cfg.resolved["certify"] = {{"m", s.m},           {"L", s.L},           {"sigma_l", s.sigma_l},
                                   {"sigma_u", s.sigma_u}, {"alpha1", s.alpha1}, {"alpha2", s.alpha2}};
    }
    cfg.hash = config_hash(cfg.resolved);
    return cfg;
}

ExperimentConfig load_config(const fs::path& file, std::optional<std::uint64_t> seed, std::optional<fs::path> out)
{
    json doc = read_json_file(file);
    if (seed) {
        if (!doc.is_object() || !doc.contains("instance")) throw ConfigError("config: missing 'instance'");
        if (doc["instance"].is_string()) {
            fs::path p = doc["instance"].get<std::string>();
            if (p.is_relative()) p = file.parent_path() / p;
            doc["instance"] = read_json_file(p);
            doc["instance"].erase("config_hash");
        }
        doc["instance"]["seed"] = *seed;
    }
    ExperimentConfig cfg = parse_config(doc, file.parent_path());
    if (out) cfg.out_dir = *out;
    return cfg;
}

void write_trace_csv(const fs::path& file, const IterateTrace& trace, const std::string& hash)
{
    std::ostringstream os;
    os << "k,rel_err,matvec_count,wall_ms\n";
    char buf[128];
    for (const auto& r : trace.rows) {
        std::snprintf(buf, sizeof buf, "%llu,%.17g,%llu,%.4f\n", static_cast<unsigned long long>(r.k), r.rel_err,
                      static_cast<unsigned long long>(r.matvec_count), r.wall_ms);
        os << buf;
    }
    if (!hash.empty()) os << "# config_hash=" << hash << '\n';
    os << "# status=" << to_string(trace.status) << '\n';
    write_text(file, os.str());
}

IterateTrace read_trace_csv(const fs::path& file)
{
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open trace " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != "k,rel_err,matvec_count,wall_ms")
        throw std::runtime_error("trace " + file.string() + ": unexpected header");
    IterateTrace t;
    bool have_status = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# status=";
            if (line.rfind(key, 0) == 0) {
                const std::string s = line.substr(key.size());
                if (s == "converged") t.status = RunStatus::converged;
                else if (s == "maxiter") t.status = RunStatus::maxiter;
                else if (s == "diverged") t.status = RunStatus::diverged;
                else throw std::runtime_error("trace " + file.string() + ": bad status '" + s + "'");
                have_status = true;
            }
            continue;
        }
        TraceRow r;
        unsigned long long k = 0, mv = 0;
        if (std::sscanf(line.c_str(), "%llu,%lf,%llu,%lf", &k, &r.rel_err, &mv, &r.wall_ms) != 4)
            throw std::runtime_error("trace " + file.string() + ": malformed row '" + line + "'");
        r.k = k;
        r.matvec_count = mv;
        t.rows.push_back(r);
    }
    if (!have_status) throw std::runtime_error("trace " + file.string() + ": missing status line");
    return t;
}

SolverParams resolve_params(const AlgorithmSetting& s, const Objective& obj, const Constraint& con)
{
    SolverParams p = default_params(obj, con, s.algorithm, s.two_ell);
    if (s.alpha1) p.alpha1 = *s.alpha1;
    if (s.alpha2) p.alpha2 = *s.alpha2;
    if (s.tau) p.tau = *s.tau;
    if (s.theta) p.theta = *s.theta;
    return p;
}

json RunRecord::to_json() const
{
    return {{"config_hash", config_hash},
            {"setting", setting_id},
            {"algorithm", eqopt::to_string(algorithm)},
            {"params", params_to_json(algorithm, params)},
            {"trace_path", trace_path},
            {"status", eqopt::to_string(status)},
            {"fitted_rate", opt_json(fitted_rate)},
            {"fit_intercept", opt_json(fit_intercept)},
            {"predicted_rate", opt_json(predicted_rate)},
            {"predicted_budget", opt_json(predicted_budget)},
            {"iterations_to_tol", opt_json(iterations_to_tol)},
            {"matvecs_to_tol", opt_json(matvecs_to_tol)},
            {"iterations_to_ratio_tol", opt_json(iterations_to_ratio_tol)},
            {"matvecs_to_ratio_tol", opt_json(matvecs_to_ratio_tol)},
            {"iterations", iterations},
            {"final_rel_err", final_rel_err},
            {"wall_ms", wall_ms}};
}

CellResult solve_cell(const GeneratedInstance& inst, const OracleSolution& oracle, const AlgorithmSetting& s,
                      const ExperimentConfig& cfg)
{
    CellResult cell;
    cell.setting = s;
    const SolverParams p = resolve_params(s, inst.objective, inst.constraint);
    RunOptions ro;
    ro.max_iter = cfg.max_iter;
    ro.tol = cfg.tol;
    ro.x0 = cfg.x0;
    cell.run = run(s.algorithm, inst.objective, inst.constraint, p, ro, oracle.x_star);

    RunRecord& rec = cell.record;
    const IterateTrace& tr = cell.run.trace;
    rec.config_hash = cfg.hash;
    rec.setting_id = s.id();
    rec.algorithm = s.algorithm;
    rec.params = p;
    rec.status = tr.status;
    rec.iterations = cell.run.final_state.k;
    rec.final_rel_err = tr.final_rel_err();
    rec.wall_ms = tr.rows.empty() ? 0.0 : tr.rows.back().wall_ms;
    rec.iterations_to_tol = tr.iterations_to(cfg.tol);
    rec.matvecs_to_tol = tr.matvecs_to(cfg.tol);
    rec.iterations_to_ratio_tol = tr.iterations_to(cfg.ratio_tol);
    rec.matvecs_to_ratio_tol = tr.matvecs_to(cfg.ratio_tol);
    try {
        FitOptions fo;
        fo.window_fraction = cfg.window_fraction;
        const RateFit f = fit_rate(tr, fo);
        rec.fitted_rate = f.rate;
        rec.fit_intercept = f.intercept;
    } catch (const FitError&) {
    }
    if (s.algorithm == Algorithm::igm) {
        const double rho = igm_predicted_rate(inst.objective, inst.constraint, p);
        rec.predicted_rate = rho;
        const std::uint64_t base = predicted_iterations(rho, cfg.tol);
        if (base > 0) rec.predicted_budget = static_cast<std::uint64_t>(std::ceil(1.5 * static_cast<double>(base)));
    }
    return cell;
}

SynthesisSpec synthesis_spec_for(const ExperimentConfig& cfg)
{
    if (cfg.certify_spec) return *cfg.certify_spec;
    return SynthesisSpec::optimal(cfg.instance.m, cfg.instance.L, cfg.instance.sigmar, cfg.instance.sigma1,
                                  cfg.certify_two_ell);
}

json certificate_to_json(const RateCertificate& c, const SynthesisSpec& s)
{
    auto report = [](const ConditionReport& r) {
        return json{{"pass", r.pass},
                    {"worst", r.worst},
                    {"where", {{"gamma", r.where.gamma}, {"theta", r.where.theta}, {"sigma", r.where.sigma}}},
                    {"detail", r.detail}};
    };
    return {{"rho", c.rho},
            {"rho_star", c.rho_star},
            {"L_tilde", c.L_tilde},
            {"spr_min_margin", c.spr_min_margin},
            {"worst_point", {{"gamma", c.worst_point.gamma}, {"theta", c.worst_point.theta}, {"sigma", c.worst_point.sigma}}},
            {"pole_max_modulus", c.pole_max_modulus},
            {"mode_scan_max_radius", c.mode_scan_max_radius},
            {"pass", c.pass},
            {"L", c.L},
            {"hb_at_one_null", c.hb_at_one_null},
            {"hb_at_one_null_equals_L_over_m", c.matches_L_over_m},
            {"mode_scan_within_rho", c.mode_scan_max_radius <= c.rho + 1e-12},
            {"conditions",
             {{"causality", report(c.causality)},
              {"tracking", report(c.tracking)},
              {"pole_at_one", report(c.pole_at_one)},
              {"positivity", report(c.positivity)},
              {"stability", report(c.stability)}}},
            {"spec",
             {{"m", s.m},
              {"L", s.L},
              {"sigma_l", s.sigma_l},
              {"sigma_u", s.sigma_u},
              {"two_ell", s.two_ell},
              {"alpha1", s.alpha1},
              {"alpha2", s.alpha2}}}};
}

void cmd_generate(const ExperimentConfig& cfg, std::ostream& log)
{
    const GeneratedInstance inst = gen_instance(cfg.instance);
    json j = instance_to_json(cfg.instance);
    j["config_hash"] = cfg.hash;
    const fs::path file = cfg.out_dir / "instance.json";
    write_json(file, j);
    std::size_t nnz = 0;
    for (double v : inst.x_bar) nnz += v != 0.0;
    log << "wrote " << file.string() << " (rank " << inst.rank() << ", nnz(x_bar) " << nnz << ", L " << inst.objective.L()
        << ")\n";
}

void cmd_solve(const ExperimentConfig& cfg, std::ostream& log)
{
    if (cfg.settings.empty()) throw ConfigError("config: no algorithm to solve with");
    const Prepared prep = prepare(cfg, log);
    CellResult cell = solve_cell(prep.inst, prep.oracle, cfg.settings.front(), cfg);
    emit_cell(cfg.out_dir, cell);
    log_cell(log, cell);
    if (cell.record.status == RunStatus::diverged) throw std::runtime_error(cell.setting.id() + " diverged");
}

void cmd_bench(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Prepared prep = prepare(cfg, log);

    std::vector<std::future<CellResult>> jobs;
    for (const auto& s : cfg.settings)
        jobs.push_back(std::async(std::launch::async, [&prep, &cfg, s] { return solve_cell(prep.inst, prep.oracle, s, cfg); }));
    std::vector<CellResult> cells;
    for (auto& j : jobs) cells.push_back(j.get());

    std::uint64_t kmax = 1;
    std::vector<fs::path> traces;
    std::vector<std::string> labels;
    json records = json::array();
    for (auto& c : cells) {
        emit_cell(cfg.out_dir, c);
        log_cell(log, c);
        kmax = std::max(kmax, c.record.iterations);
        traces.push_back(cfg.out_dir / c.record.trace_path);
        labels.push_back(c.setting.id());
        records.push_back(c.record.to_json());
    }

    // dashed reference: rel_err(0) * rho_star(ell = 1)^k
    const double kf = cfg.instance.L / cfg.instance.m;
    const double kE = cfg.instance.sigma1 / cfg.instance.sigmar;
    const double rho_ref = rate_rho_star(kf, kE, 2);
    const double e0 = cells.front().run.trace.rows.front().rel_err;
    {
        std::ostringstream os;
        os << "k,rel_err\n" << std::setprecision(17);
        const std::uint64_t step = std::max<std::uint64_t>(1, kmax / 1000);
        for (std::uint64_t k = 0; k <= kmax; k += step) os << k << ',' << e0 * std::pow(rho_ref, static_cast<double>(k)) << '\n';
        os << "# config_hash=" << cfg.hash << "\n# rho_star=" << rho_ref << '\n';
        write_text(cfg.out_dir / "reference.csv", os.str());
    }

    auto find = [&](const std::string& id) -> const RunRecord* {
        for (const auto& c : cells)
            if (c.setting.id() == id) return &c.record;
        return nullptr;
    };
    auto ratio = [&](const std::string& a, const std::string& b) -> json {
        const RunRecord* ra = find(a);
        const RunRecord* rb = find(b);
        if (!ra || !rb || !ra->iterations_to_ratio_tol || !rb->iterations_to_ratio_tol || *rb->iterations_to_ratio_tol == 0)
            return nullptr;
        return static_cast<double>(*ra->iterations_to_ratio_tol) / static_cast<double>(*rb->iterations_to_ratio_tol);
    };

    std::vector<PlotSeries> series = series_from_traces(traces, labels);
    std::ostringstream refname;
    refname << "rho_star(ell=1)=" << std::setprecision(6) << rho_ref;
    series.push_back(reference_series(rho_ref, e0, kmax, refname.str()));
    PlotOptions po;
    po.title = cfg.plot_title.empty() ? cfg.name : cfg.plot_title;
    write_text(cfg.out_dir / "convergence.svg", render_svg(series, po));

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json summary{{"config_hash", cfg.hash},
                 {"name", cfg.name},
                 {"instance", instance_to_json(cfg.instance)},
                 {"reference", {{"feasibility_residual", prep.oracle.feasibility_residual},
                                {"stationarity_residual", prep.oracle.stationarity_residual},
                                {"newton_steps", prep.oracle.newton_steps}}},
                 {"rho_star_ell1", rho_ref},
                 {"ratio_tol", cfg.ratio_tol},
                 {"ratios",
                  {{"igm_l1_over_igm_l2", ratio("igm_l1", "igm_l2")}, {"papc_over_igm_l1", ratio("papc", "igm_l1")},
                   {"gda_over_papc", ratio("gda", "papc")}}},
                 {"runs", records},
                 {"plot", "convergence.svg"},
                 {"wall_seconds", secs}};
    write_json(cfg.out_dir / "bench.json", summary);
    log << "bench done in " << std::fixed << std::setprecision(2) << secs << " s, outputs in " << cfg.out_dir.string()
        << '\n'
        << std::defaultfloat;
}

void cmd_certify(const ExperimentConfig& cfg, std::ostream& log)
{
    const SynthesisSpec spec = synthesis_spec_for(cfg);
    const RateCertificate cert = check_conditions(spec, cfg.grid);
    json j = certificate_to_json(cert, spec);
    j["config_hash"] = cfg.hash;
    const fs::path file = cfg.out_dir / "certificate.json";
    write_json(file, j);
    log << "rho=" << cert.rho << " rho_star=" << cert.rho_star << " spr_min_margin=" << cert.spr_min_margin
        << " pole_max_modulus=" << cert.pole_max_modulus << " pass=" << (cert.pass ? "true" : "false") << '\n'
        << "wrote " << file.string() << '\n';
}

void cmd_plot(const ExperimentConfig& cfg, std::ostream& log)
{
    std::vector<fs::path> traces = cfg.plot_traces;
    std::vector<std::string> labels = cfg.plot_labels;
    if (traces.empty()) {
        if (fs::is_directory(cfg.out_dir))
            for (const auto& e : fs::directory_iterator(cfg.out_dir)) {
                const std::string nm = e.path().filename().string();
                if (nm.rfind("trace_", 0) == 0 && e.path().extension() == ".csv") traces.push_back(e.path());
            }
        std::sort(traces.begin(), traces.end());
        labels.clear();
        for (const auto& t : traces) labels.push_back(t.stem().string().substr(6));
    }
    if (traces.empty()) throw ConfigError("config: nothing to plot (no plot.traces and no trace_*.csv in the output directory)");

    std::vector<PlotSeries> series = series_from_traces(traces, labels);
    std::uint64_t kmax = 1;
    double e0 = 1.0;
    for (const auto& s : series)
        if (!s.points.empty()) {
            kmax = std::max<std::uint64_t>(kmax, static_cast<std::uint64_t>(s.points.back().first));
            e0 = std::pow(10.0, s.points.front().second);
        }
    const double rate = cfg.plot_reference_rate.value_or(
        rate_rho_star(cfg.instance.L / cfg.instance.m, cfg.instance.sigma1 / cfg.instance.sigmar, 2));
    std::ostringstream nm;
    nm << "rho=" << std::setprecision(6) << rate;
    series.push_back(reference_series(rate, e0, kmax, nm.str()));
    PlotOptions po;
    po.title = cfg.plot_title.empty() ? cfg.name : cfg.plot_title;
    const fs::path file = cfg.out_dir / "plot.svg";
    write_text(file, render_svg(series, po));
    log << "wrote " << file.string() << " (" << series.size() << " series)\n";
}

} // namespace eqopt
