#include "pel/commands.hpp"

#include <cmath>
#include <iomanip>

#include "io_util.hpp"
#include "pel/parallel.hpp"

namespace pel {

namespace fs = std::filesystem;

namespace {

void prepare_dir(const fs::path& dir) { fs::create_directories(dir); }

std::string fmt(double v) { return io::format_double(v); }

}  // namespace

const NoiseBenchSummary& NoiseBenchResult::at(double rate, Strategy strategy) const {
    for (const auto& s : summary) {
        if (s.rate == rate && s.strategy == strategy) return s;
    }
    throw std::out_of_range("no benchmark cell for rate " + fmt(rate) + " / " + to_string(strategy));
}

GeneratedData make_noisy_data(const SyntheticSpec& spec, double rate, NoiseMode mode) {
    SyntheticSpec clean = spec;
    clean.mislabel_rate = 0.0;
    GeneratedData data = generate(clean);
    data.train = inject_label_noise(data.train, rate, mix_seed(spec.seed, 2), mode, spec.classes_per_group());
    return data;
}

NoiseBenchResult run_noise_benchmark(const ExperimentConfig& config, NoiseMode mode) {
    if (config.noise_rates.empty()) throw std::invalid_argument("noise_rates: empty");
    if (config.replicates == 0) throw std::invalid_argument("replicates: must be positive");
    NoiseBenchResult result;
    result.mode = mode;

    const std::size_t n_strategies = std::size(kBenchStrategies);
    const std::size_t n_units = config.noise_rates.size() * config.replicates;
    result.cells.resize(n_units * n_strategies);

    // One unit = one (rate, replicate) dataset shared by all strategies.
    parallel_for(n_units, worker_slots(), [&](std::size_t unit) {
        const std::size_t rate_index = unit / config.replicates;
        const std::size_t replicate = unit % config.replicates;
        const double rate = config.noise_rates[rate_index];
        SyntheticSpec spec = config.data;
        spec.seed = config.data.seed + replicate;

        std::optional<GeneratedData> data;
        std::string data_error;
        try {
            data = make_noisy_data(spec, rate, mode);
        } catch (const std::exception& e) {
            data_error = e.what();
        }
        for (std::size_t s = 0; s < n_strategies; ++s) {
            NoiseBenchCell& cell = result.cells[(rate_index * n_strategies + s) * config.replicates + replicate];
            cell.rate = rate;
            cell.strategy = kBenchStrategies[s];
            cell.replicate = replicate;
            cell.seed = config.train.seed + replicate;
            cell.test_accuracy = std::nan("");
            if (!data) {
                cell.error = data_error;
                continue;
            }
            try {
                TrainConfig train_config = config.train;
                train_config.strategy = cell.strategy;
                train_config.seed = cell.seed;
                cell.test_accuracy = evaluate(train(train_config, data->train, data->test).model, data->test);
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    });

    for (std::size_t r = 0; r < config.noise_rates.size(); ++r) {
        for (std::size_t s = 0; s < n_strategies; ++s) {
            NoiseBenchSummary summary{config.noise_rates[r], kBenchStrategies[s], 0.0, 0.0, 0};
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t k = 0; k < config.replicates; ++k) {
                const auto& cell = result.cells[(r * n_strategies + s) * config.replicates + k];
                if (!cell.error.empty()) continue;
                sum += cell.test_accuracy;
                ++summary.n_ok;
            }
            if (summary.n_ok > 0) summary.mean = sum / static_cast<double>(summary.n_ok);
            for (std::size_t k = 0; k < config.replicates; ++k) {
                const auto& cell = result.cells[(r * n_strategies + s) * config.replicates + k];
                if (cell.error.empty()) sum_sq += (cell.test_accuracy - summary.mean) * (cell.test_accuracy - summary.mean);
            }
            summary.stddev = summary.n_ok > 1 ? std::sqrt(sum_sq / static_cast<double>(summary.n_ok - 1)) : 0.0;
            if (summary.n_ok == 0) summary.mean = std::nan("");
            result.summary.push_back(summary);
        }
    }
    return result;
}

void write_noise_benchmark(const NoiseBenchResult& result, const fs::path& out_dir) {
    prepare_dir(out_dir);
    const std::string suffix = result.mode == NoiseMode::uniform ? "" : "_" + to_string(result.mode);
    {
        auto os = io::open_out((out_dir / ("bench_noise_cells" + suffix + ".csv")).string(), false);
        os << "noise_mode,rate,strategy,replicate,seed,test_accuracy,error\n";
        for (const auto& c : result.cells) {
            os << to_string(result.mode) << ',' << fmt(c.rate) << ',' << to_string(c.strategy) << ',' << c.replicate
               << ',' << c.seed << ',' << fmt(c.test_accuracy) << ",\"" << c.error << "\"\n";
        }
    }
    auto os = io::open_out((out_dir / ("bench_noise" + suffix + ".csv")).string(), false);
    os << "noise_mode,rate,strategy,mean_test_accuracy,stddev_test_accuracy,replicates_ok\n";
    for (const auto& s : result.summary) {
        os << to_string(result.mode) << ',' << fmt(s.rate) << ',' << to_string(s.strategy) << ',' << fmt(s.mean) << ','
           << fmt(s.stddev) << ',' << s.n_ok << '\n';
    }
}

int cmd_gen_data(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    prepare_dir(out_dir);
    const GeneratedData data = generate(config.data);
    save_csv(data.train, out_dir / "train.csv");
    save_csv(data.test, out_dir / "test.csv");
    log << "wrote " << data.train.size() << " training rows (" << data.train.corrupted_count() << " mislabeled) and "
        << data.test.size() << " test rows to " << out_dir.string() << '\n';
    return kExitOk;
}

int cmd_train(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    prepare_dir(out_dir);
    const GeneratedData data = generate(config.data);
    const TrainResult result = train(config.train, data.train, data.test);
    result.log.save_csv(out_dir / "metrics.csv");
    result.model.save_binary(out_dir / "model.bin");
    result.model.save_text(out_dir / "model.txt");
    if (result.bank) result.bank->save_text(out_dir / "bank.txt");
    {
        auto os = io::open_out((out_dir / "config.txt").string(), false);
        os << render_config(config);
    }
    const double accuracy = evaluate(result.model, data.test);
    log << "strategy=" << to_string(config.train.strategy) << " epochs=" << config.train.epochs
        << " test_accuracy=" << std::fixed << std::setprecision(4) << accuracy << '\n';
    return kExitOk;
}

int cmd_sweep_beta(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    prepare_dir(out_dir);
    const GeneratedData data = generate(config.data);
    const auto rows = run_beta_sweep(config.train, config.betas, data.train, data.test);
    auto os = io::open_out((out_dir / "beta_sweep.csv").string(), false);
    os << "beta,test_accuracy,error\n";
    bool all_ok = true;
    for (const auto& row : rows) {
        os << fmt(row.beta) << ',' << fmt(row.test_accuracy) << ",\"" << row.error << "\"\n";
        log << "beta=" << row.beta << " test_accuracy=" << row.test_accuracy
            << (row.error.empty() ? "" : " error=" + row.error) << '\n';
        all_ok = all_ok && row.error.empty();
    }
    return all_ok ? kExitOk : kExitFailure;
}

int cmd_bench_noise(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
    const NoiseBenchResult result = run_noise_benchmark(config, config.data.mislabel_mode);
    write_noise_benchmark(result, out_dir);
    bool all_ok = true;
    for (const auto& s : result.summary) {
        log << "rate=" << s.rate << ' ' << std::setw(16) << std::left << to_string(s.strategy) << std::right
            << " mean=" << std::fixed << std::setprecision(4) << s.mean << " sd=" << s.stddev << " n=" << s.n_ok
            << '\n';
        log.unsetf(std::ios::floatfield);
        all_ok = all_ok && s.n_ok == config.replicates;
    }
    return all_ok ? kExitOk : kExitFailure;
}

int cmd_gradcheck(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log, double perturb) {
    prepare_dir(out_dir);
    auto os = io::open_out((out_dir / "gradcheck.csv").string(), false);
    os << "seed,parameter_group,entries,max_rel_error\n";
    bool pass = true;
    for (std::uint64_t k = 0; k < 3; ++k) {
        const GradcheckReport report = gradcheck_toy_model(config.train.seed + k, config.train.beta, perturb);
        for (const auto& g : report.groups) {
            os << report.seed << ',' << g.name << ',' << g.entries << ',' << fmt(g.max_rel_error) << '\n';
            log << "seed=" << report.seed << ' ' << std::setw(18) << std::left << g.name << std::right
                << " max_rel_err=" << std::scientific << std::setprecision(3) << g.max_rel_error
                << (g.max_rel_error < kGradcheckTolerance ? "  ok" : "  FAIL") << '\n';
            log.unsetf(std::ios::floatfield);
        }
        pass = pass && report.max_rel_error() < kGradcheckTolerance;
    }
    log << (pass ? "gradcheck passed" : "gradcheck FAILED") << '\n';
    return pass ? kExitOk : kExitGradcheckFailed;
}

}  // namespace pel
