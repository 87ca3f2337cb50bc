#pragma once

// Experiment orchestration behind the eqopt CLI: JSON configs, reference
// solutions, solver cells, trace/record/certificate files and plots.

#include "eqopt/analysis.hpp"
#include "eqopt/certificate.hpp"
#include "eqopt/oracle.hpp"
#include "eqopt/problems.hpp"
#include "eqopt/solvers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqopt {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AlgorithmSetting {
    Algorithm algorithm = Algorithm::igm;
    int two_ell = 2;
    std::optional<double> alpha1, alpha2, tau, theta;

    /// File-name friendly label: gda, papc, papc_primal, igm_l0.5, igm_l1, ...
    std::string id() const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    InstanceSpec instance;
    std::vector<AlgorithmSetting> settings;
    std::uint64_t max_iter = 100000;
    double tol = 1e-8;
    double ratio_tol = 1e-6; ///< level at which iterations/matvecs are compared
    Vector x0;               ///< empty: x0 = 0
    double window_fraction = 0.5;
    std::optional<SynthesisSpec> certify_spec; ///< empty: derived from the instance
    int certify_two_ell = 2;
    GridOptions grid;
    std::vector<std::filesystem::path> plot_traces;
    std::vector<std::string> plot_labels;
    std::optional<double> plot_reference_rate;
    std::string plot_title;
    std::filesystem::path out_dir = "out";

    nlohmann::json resolved; ///< normalized document the hash is computed from
    std::string hash;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
/// Hex FNV-1a of the compact JSON dump (keys are sorted by the dump).
std::string config_hash(const nlohmann::json& doc);

/// Parses and validates. Relative paths resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
/// Reads a config file; seed and out override the document. Throws ConfigError.
ExperimentConfig load_config(const std::filesystem::path& file, std::optional<std::uint64_t> seed = std::nullopt,
                             std::optional<std::filesystem::path> out = std::nullopt);

/// The five default settings: GDA, PAPC, I-GM with ell in {0.5, 1, 2}.
std::vector<AlgorithmSetting> default_settings();

nlohmann::json instance_to_json(const InstanceSpec& spec);
InstanceSpec instance_from_json(const nlohmann::json& doc);

void write_trace_csv(const std::filesystem::path& file, const IterateTrace& trace, const std::string& hash);
IterateTrace read_trace_csv(const std::filesystem::path& file);

SolverParams resolve_params(const AlgorithmSetting& s, const Objective& obj, const Constraint& con);

struct RunRecord {
    std::string config_hash;
    std::string setting_id;
    Algorithm algorithm = Algorithm::igm;
    SolverParams params;
    std::string trace_path;
    RunStatus status = RunStatus::maxiter;
    std::optional<double> fitted_rate;
    std::optional<double> fit_intercept;
    std::optional<double> predicted_rate;      ///< I-GM only
    std::optional<std::uint64_t> predicted_budget; ///< 1.5 ceil(log(1/tol)/log(1/rho)), I-GM only
    std::optional<std::uint64_t> iterations_to_tol;
    std::optional<std::uint64_t> matvecs_to_tol;
    std::optional<std::uint64_t> iterations_to_ratio_tol;
    std::optional<std::uint64_t> matvecs_to_ratio_tol;
    std::uint64_t iterations = 0;
    double final_rel_err = 0.0;
    double wall_ms = 0.0;

    nlohmann::json to_json() const;
};

struct CellResult {
    AlgorithmSetting setting;
    RunResult run;
    RunRecord record;
};

/// Runs one setting against the reference solution; trace_path is filled
/// in by the caller when the trace is written.
CellResult solve_cell(const GeneratedInstance& inst, const OracleSolution& oracle, const AlgorithmSetting& s,
                      const ExperimentConfig& cfg);

SynthesisSpec synthesis_spec_for(const ExperimentConfig& cfg);
nlohmann::json certificate_to_json(const RateCertificate& cert, const SynthesisSpec& spec);

/// Subcommands. Each writes into cfg.out_dir, logs progress to `log` and
/// throws on failure.
void cmd_generate(const ExperimentConfig& cfg, std::ostream& log);
void cmd_solve(const ExperimentConfig& cfg, std::ostream& log);
void cmd_bench(const ExperimentConfig& cfg, std::ostream& log);
void cmd_certify(const ExperimentConfig& cfg, std::ostream& log);
void cmd_plot(const ExperimentConfig& cfg, std::ostream& log);

} // namespace eqopt
