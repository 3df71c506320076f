#pragma once

// Training loop for prototype-enhanced soft targets and the two baselines
// (one-hot cross-entropy, label smoothing), plus evaluation and sweeps.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pel/encoder_model.hpp"
#include "pel/label_enhancer.hpp"
#include "pel/prototype_bank.hpp"
#include "pel/synth_data.hpp"

namespace pel {

enum class Strategy { pel, onehot_ce, label_smoothing };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& text);

std::string to_string(SimilarityMode mode);
SimilarityMode similarity_mode_from_string(const std::string& text);

struct TrainConfig {
    Strategy strategy = Strategy::pel;
    double beta = 6.0;
    double alpha = 0.9;
    double t1 = 1.0;
    double t2 = 1.0;
    double lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t batch_size = 8;
    std::size_t epochs = 120;
    double smoothing_epsilon = 0.1;
    bool normalize_enhanced_target = false;  // divide the fused target by beta + 1
    bool score_before_update = false;        // score with the bank as it was before this batch
    SimilarityMode cosine_mode = SimilarityMode::normalized;
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden_dims{64};
    std::size_t feature_dim = 32;
    bool record_wall_clock = true;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    SgdSettings sgd() const { return {lr, momentum, weight_decay}; }
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;       // mean per-instance loss over the epoch
    double train_accuracy = 0.0;   // running accuracy against observed labels
    double test_accuracy = 0.0;
    double prototype_drift = 0.0;  // mean per-batch ||P_after - P_before||_F
    double wall_seconds = 0.0;

    bool operator==(const EpochMetrics&) const = default;
};

struct MetricsLog {
    std::vector<EpochMetrics> rows;

    void save_csv(const std::filesystem::path& path) const;

    bool operator==(const MetricsLog&) const = default;
};

struct TrainResult {
    MlpModel model;
    std::optional<PrototypeBank> bank;  // only for the pel strategy
    MetricsLog log;
};

/// A loss or activation stopped being finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t batch, const std::string& detail);
    std::size_t epoch() const { return epoch_; }
    std::size_t batch() const { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

ModelShape model_shape_for(const TrainConfig& config, const Dataset& data);

/// Trains a fresh model. For the pel strategy each batch runs: forward, class
/// means on observed labels, EMA update, similarity scores, label fusion, KL
/// loss, backward, SGD step. The bank is seeded from one forward pass over the
/// training set before the first epoch and persists across epochs.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set);

/// Fraction of samples whose prediction equals the true class. Uses the model
/// alone.
double evaluate(const MlpModel& model, const Dataset& data);

/// Similarity scores of every sample against a bank (one row per sample).
Matrix similarity_profile(const MlpModel& model, const PrototypeBank& bank, const Dataset& data, Temperature t2,
                          SimilarityMode mode = SimilarityMode::normalized);

struct BetaSweepRow {
    double beta = 0.0;
    double test_accuracy = 0.0;
    std::string error;  // empty on success
};

/// One full training run per beta on the same data and seed, sorted by beta.
/// A failing cell is recorded and does not stop the others.
std::vector<BetaSweepRow> run_beta_sweep(const TrainConfig& config, std::span<const double> betas,
                                         const Dataset& train_set, const Dataset& test_set);

}  // namespace pel
