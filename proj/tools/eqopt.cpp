// eqopt: generate | solve | bench | certify | plot --config <file.json> [--out <dir>] [--seed <u64>]
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or usage.

#include "eqopt/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Equality-constrained first-order solvers: instances, runs, benchmarks and rate certificates"};
    app.require_subcommand(1, 1);

    std::string config;
    std::string out;
    std::uint64_t seed = 0;

    struct Cmd {
        const char* name;
        const char* help;
        void (*fn)(const eqopt::ExperimentConfig&, std::ostream&);
    };
    const Cmd cmds[] = {
        {"generate", "write the instance description (instance.json)", eqopt::cmd_generate},
        {"solve", "run the first configured algorithm and write its trace and run record", eqopt::cmd_solve},
        {"bench", "run every configured algorithm, write traces, records, bench.json and convergence.svg",
         eqopt::cmd_bench},
        {"certify", "check the frequency-domain conditions and write certificate.json", eqopt::cmd_certify},
        {"plot", "render trace CSVs to plot.svg", eqopt::cmd_plot},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "instance seed (overrides the config)");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            std::optional<std::uint64_t> seed_opt;
            if (subs[i]->count("--seed")) seed_opt = seed;
            std::optional<std::filesystem::path> out_opt;
            if (!out.empty()) out_opt = out;
            const eqopt::ExperimentConfig cfg = eqopt::load_config(config, seed_opt, out_opt);
            cmds[i].fn(cfg, std::cout);
        } catch (const eqopt::ConfigError& e) {
            std::cerr << "eqopt: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "eqopt: " << e.what() << '\n';
            return 1;
        }
    }
    return 0;
}
