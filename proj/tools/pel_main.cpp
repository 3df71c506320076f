// pel: run prototype-enhanced label experiments on synthetic data.
//
//   pel <subcommand> --config PATH --out DIR [--set key=value ...]
//
// Exit codes: 0 ok, 1 failure, 2 config error, 3 divergence, 4 gradcheck failed.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pel/commands.hpp"

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = "pel_out";
    std::vector<std::string> overrides;
    double perturb = 0.0;
};

void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file (omit for defaults)");
    cmd->add_option("--out", opts.out_dir, "output directory (created if absent)");
    cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set beta=8")->allow_extra_args(false);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prototype-enhanced soft-target training on synthetic fine-grained data"};
    app.require_subcommand(1);
    Options opts;

    struct Entry {
        const char* name;
        const char* help;
        int (*run)(const pel::ExperimentConfig&, const std::filesystem::path&, std::ostream&);
    };
    const Entry entries[] = {
        {"train", "train one model and write metrics.csv, model and bank checkpoints", pel::cmd_train},
        {"sweep-beta", "train once per beta value and write beta_sweep.csv", pel::cmd_sweep_beta},
        {"bench-noise", "label-noise grid of strategies x noise rates with seed replicates", pel::cmd_bench_noise},
        {"gen-data", "write the synthetic train/test sets as CSV", pel::cmd_gen_data},
    };
    std::vector<std::pair<CLI::App*, const Entry*>> commands;
    for (const auto& e : entries) {
        auto* cmd = app.add_subcommand(e.name, e.help);
        add_common(cmd, opts);
        commands.emplace_back(cmd, &e);
    }
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    add_common(gradcheck, opts);
    gradcheck->add_option("--perturb-gradient", opts.perturb, "add this to every analytic gradient entry (test hook)");

    CLI11_PARSE(app, argc, argv);

    pel::ExperimentConfig config;
    try {
        config = opts.config_path.empty() ? pel::parse_config_text("", opts.overrides)
                                          : pel::parse_config(opts.config_path, opts.overrides);
        config.train.validate();
        config.data.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return pel::kExitConfigError;
    }

    try {
        if (gradcheck->parsed()) return pel::cmd_gradcheck(config, opts.out_dir, std::cout, opts.perturb);
        for (const auto& [cmd, entry] : commands) {
            if (cmd->parsed()) return entry->run(config, opts.out_dir, std::cout);
        }
    } catch (const pel::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return pel::kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pel::kExitFailure;
    }
    return pel::kExitFailure;
}
