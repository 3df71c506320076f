#pragma once

// Subcommands of the pel tool. Each writes CSV into an output directory
// (created if absent) and returns a process exit code.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "pel/config.hpp"
#include "pel/gradcheck.hpp"

namespace pel {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfigError = 2,
    kExitDivergence = 3,
    kExitGradcheckFailed = 4,
};

struct NoiseBenchCell {
    double rate = 0.0;
    Strategy strategy = Strategy::pel;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;
    std::string error;
};

struct NoiseBenchSummary {
    double rate = 0.0;
    Strategy strategy = Strategy::pel;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over successful replicates
    std::size_t n_ok = 0;
};

struct NoiseBenchResult {
    NoiseMode mode = NoiseMode::uniform;
    std::vector<NoiseBenchCell> cells;        // rate-major, then strategy, then replicate
    std::vector<NoiseBenchSummary> summary;   // rate-major, then strategy

    const NoiseBenchSummary& at(double rate, Strategy strategy) const;
};

inline constexpr Strategy kBenchStrategies[] = {Strategy::onehot_ce, Strategy::label_smoothing, Strategy::pel};

/// Replicate r uses data seed data.seed + r and training seed train.seed + r;
/// all strategies of one (rate, replicate) see identical data.
NoiseBenchResult run_noise_benchmark(const ExperimentConfig& config, NoiseMode mode);

void write_noise_benchmark(const NoiseBenchResult& result, const std::filesystem::path& out_dir);

/// Replicate datasets: generate with the data seed, then corrupt the clean
/// training labels at `rate`.
GeneratedData make_noisy_data(const SyntheticSpec& spec, double rate, NoiseMode mode);

int cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_sweep_beta(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_bench_noise(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Finite-difference suite on three seeds (train.seed, +1, +2).
int cmd_gradcheck(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log,
                  double perturb = 0.0);

}  // namespace pel
