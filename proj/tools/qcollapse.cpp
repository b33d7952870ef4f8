#include <CLI11.hpp>
#include <iostream>

#include "qcollapse/cli.hpp"
#include "qcollapse/error.hpp"

namespace {

enum Exit { ok = 0, config_error = 1, numerical_error = 2, io_error = 3 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned workers = 0;
};

void add_flags(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config, "run configuration file")->required();
    sub->add_option("--seed", f.seed, "override run.seed");
    sub->add_option("--out", f.out, "override run.output_dir");
    sub->add_option("--workers", f.workers, "ensemble worker threads (0 = hardware)");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conditional atom-number dynamics under cavity photodetection"};
    app.require_subcommand(1);
    Flags flags;
    auto* traj = app.add_subcommand("trajectory", "one trajectory with and without jumps");
    auto* ens = app.add_subcommand("ensemble", "many trajectories; martingale and outcome statistics");
    auto* oracle = app.add_subcommand("oracle-compare", "reduced engine against the Fock-basis engine");
    auto* uni = app.add_subcommand("unitary", "lossless collapse and revival of the coherence proxy");
    for (auto* sub : {traj, ens, oracle, uni}) add_flags(sub, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::config_error;
    }

    try {
        qcollapse::cli::RunConfig cfg = qcollapse::cli::load_config(flags.config);
        if (flags.seed) cfg.seed = *flags.seed;
        if (flags.out) cfg.output_dir = *flags.out;
        else if (cfg.output_dir.is_relative()) cfg.output_dir = cfg.base_dir / cfg.output_dir;

        if (*traj) return qcollapse::cli::cmd_trajectory(cfg, std::cout);
        if (*ens) return qcollapse::cli::cmd_ensemble(cfg, flags.workers, std::cout);
        if (*oracle) return qcollapse::cli::cmd_oracle_compare(cfg, std::cout);
        return qcollapse::cli::cmd_unitary(cfg, std::cout);
    } catch (const qcollapse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::config_error;
    } catch (const qcollapse::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return Exit::io_error;
    } catch (const qcollapse::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return Exit::numerical_error;
    }
}
