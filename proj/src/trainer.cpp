#include "pel/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "io_util.hpp"
#include "pel/parallel.hpp"

namespace pel {

namespace {

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw std::invalid_argument(field + ": " + message);
}

void check_datasets(const Dataset& train_set, const Dataset& test_set) {
    if (train_set.samples.empty()) throw std::invalid_argument("training set is empty");
    if (test_set.samples.empty()) throw std::invalid_argument("test set is empty");
    if (train_set.input_dim != test_set.input_dim || train_set.n_classes != test_set.n_classes) {
        throw std::invalid_argument("training and test sets disagree on input_dim or class count");
    }
    for (const auto* ds : {&train_set, &test_set}) {
        for (const auto& s : ds->samples) {
            if (s.x.size() != ds->input_dim) throw std::invalid_argument("sample dimension mismatch");
            if (s.true_class >= ds->n_classes || s.observed_class >= ds->n_classes) {
                throw std::invalid_argument("class index out of range");
            }
        }
    }
}

Matrix stack_features(const std::vector<ForwardCache>& caches) {
    Matrix features(caches.size(), caches.front().feature.size());
    for (std::size_t i = 0; i < caches.size(); ++i) {
        std::copy(caches[i].feature.begin(), caches[i].feature.end(), features.row(i).begin());
    }
    return features;
}

}  // namespace

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::pel: return "pel";
        case Strategy::onehot_ce: return "onehot_ce";
        case Strategy::label_smoothing: return "label_smoothing";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& text) {
    if (text == "pel") return Strategy::pel;
    if (text == "onehot_ce") return Strategy::onehot_ce;
    if (text == "label_smoothing") return Strategy::label_smoothing;
    throw std::invalid_argument("unknown strategy '" + text + "' (expected pel, onehot_ce or label_smoothing)");
}

std::string to_string(SimilarityMode mode) { return mode == SimilarityMode::normalized ? "normalized" : "raw_dot"; }

SimilarityMode similarity_mode_from_string(const std::string& text) {
    if (text == "normalized") return SimilarityMode::normalized;
    if (text == "raw_dot") return SimilarityMode::raw_dot;
    throw std::invalid_argument("unknown cosine_mode '" + text + "' (expected normalized or raw_dot)");
}

void TrainConfig::validate() const {
    require(beta > 0.0 && std::isfinite(beta), "beta", "must be positive");
    require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
    require(t1 > 0.0 && std::isfinite(t1), "t1", "must be positive");
    require(t2 > 0.0 && std::isfinite(t2), "t2", "must be positive");
    require(lr > 0.0 && std::isfinite(lr), "lr", "must be positive");
    require(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
    require(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay", "must be nonnegative");
    require(batch_size > 0, "batch_size", "must be positive");
    require(smoothing_epsilon >= 0.0 && smoothing_epsilon < 1.0, "smoothing_epsilon", "must lie in [0, 1)");
    require(feature_dim > 0, "feature_dim", "must be positive");
    for (std::size_t h : hidden_dims) require(h > 0, "hidden_dims", "widths must be positive");
}

void MetricsLog::save_csv(const std::filesystem::path& path) const {
    auto os = io::open_out(path.string(), false);
    os << "epoch,train_loss,train_accuracy,test_accuracy,prototype_drift,wall_seconds\n";
    for (const auto& r : rows) {
        os << r.epoch << ',' << io::format_double(r.train_loss) << ',' << io::format_double(r.train_accuracy) << ','
           << io::format_double(r.test_accuracy) << ',' << io::format_double(r.prototype_drift) << ','
           << io::format_double(r.wall_seconds) << '\n';
    }
    if (!os) throw io::FormatError("failed writing '" + path.string() + "'");
}

DivergenceError::DivergenceError(std::size_t epoch, std::size_t batch, const std::string& detail)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                         ": " + detail),
      epoch_(epoch),
      batch_(batch) {}

ModelShape model_shape_for(const TrainConfig& config, const Dataset& data) {
    return {data.input_dim, config.hidden_dims, config.feature_dim, data.n_classes};
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set) {
    config.validate();
    check_datasets(train_set, test_set);
    using Clock = std::chrono::steady_clock;

    const std::size_t n_classes = train_set.n_classes;
    const Temperature t2(config.t2);
    const bool use_bank = config.strategy == Strategy::pel;
    TrainResult result{MlpModel(model_shape_for(config, train_set), Temperature(config.t1), mix_seed(config.seed, 0)),
                       std::nullopt, {}};
    MlpModel& model = result.model;

    if (use_bank) {
        std::vector<ForwardCache> caches;
        std::vector<std::size_t> labels;
        caches.reserve(train_set.size());
        for (const auto& s : train_set.samples) {
            caches.push_back(model.forward(s.x));
            labels.push_back(s.observed_class);
        }
        result.bank = PrototypeBank::from_features(stack_features(caches), labels, n_classes, config.alpha);
    }

    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 1));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    ParameterSet velocity;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto started = Clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0, drift_sum = 0.0;
        std::size_t correct = 0, n_batches = 0;

        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, order.size());
            const std::size_t batch_index = n_batches++;
            const std::size_t batch_len = end - begin;
            try {
                std::vector<ForwardCache> caches;
                std::vector<std::size_t> labels;
                for (std::size_t k = begin; k < end; ++k) {
                    const Sample& s = train_set.samples[order[k]];
                    caches.push_back(model.forward(s.x));
                    labels.push_back(s.observed_class);
                }

                std::vector<Vector> targets(batch_len);
                if (use_bank) {
                    PrototypeBank& bank = *result.bank;
                    const Matrix before = bank.prototypes();
                    std::vector<Vector> scores(batch_len);
                    auto score_all = [&] {
                        for (std::size_t i = 0; i < batch_len; ++i) {
                            scores[i] = bank.similarity_scores(caches[i].feature, t2, config.cosine_mode);
                        }
                    };
                    if (config.score_before_update) score_all();
                    bank.ema_update(batch_class_means(stack_features(caches), labels));
                    if (!config.score_before_update) score_all();

                    double drift = 0.0;
                    for (std::size_t i = 0; i < before.data.size(); ++i) {
                        const double d = bank.prototypes().data[i] - before.data[i];
                        drift += d * d;
                    }
                    drift_sum += std::sqrt(drift);

                    for (std::size_t i = 0; i < batch_len; ++i) {
                        targets[i] = fuse_labels(one_hot(n_classes, labels[i]), scores[i], config.beta).values;
                        if (config.normalize_enhanced_target) {
                            for (double& t : targets[i]) t /= config.beta + 1.0;
                        }
                    }
                } else {
                    for (std::size_t i = 0; i < batch_len; ++i) {
                        const Vector y = one_hot(n_classes, labels[i]);
                        targets[i] = config.strategy == Strategy::label_smoothing
                                         ? smooth_labels(y, config.smoothing_epsilon)
                                         : y;
                    }
                }

                GradientSet grads = ParameterSet::zeros_like(model.parameters());
                const double inv_batch = 1.0 / static_cast<double>(batch_len);
                for (std::size_t i = 0; i < batch_len; ++i) {
                    const double loss = kl_loss(targets[i], caches[i].probabilities);
                    if (!std::isfinite(loss)) throw NonFiniteActivation("non-finite loss");
                    loss_sum += loss;
                    if (argmax(caches[i].probabilities) == labels[i]) ++correct;
                    grads.add_scaled(model.backward(caches[i], targets[i]), inv_batch);
                }
                sgd_step(model, grads, config.sgd(), velocity);
            } catch (const NonFiniteActivation& e) {
                throw DivergenceError(epoch, batch_index, e.what());
            } catch (const NumericError& e) {
                throw DivergenceError(epoch, batch_index, e.what());
            }
        }

        EpochMetrics row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(order.size());
        row.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        try {
            row.test_accuracy = evaluate(model, test_set);
        } catch (const NonFiniteActivation& e) {
            throw DivergenceError(epoch, n_batches, e.what());
        } catch (const NumericError& e) {
            throw DivergenceError(epoch, n_batches, e.what());
        }
        row.prototype_drift = use_bank ? drift_sum / static_cast<double>(n_batches) : 0.0;
        row.wall_seconds =
            config.record_wall_clock ? std::chrono::duration<double>(Clock::now() - started).count() : 0.0;
        result.log.rows.push_back(row);
    }
    return result;
}

double evaluate(const MlpModel& model, const Dataset& data) {
    if (data.samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::size_t correct = 0;
    for (const auto& s : data.samples) {
        if (model.predict(s.x) == s.true_class) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

Matrix similarity_profile(const MlpModel& model, const PrototypeBank& bank, const Dataset& data, Temperature t2,
                          SimilarityMode mode) {
    Matrix out(data.size(), bank.n_classes());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Vector w = bank.similarity_scores(model.forward(data.samples[i].x).feature, t2, mode);
        std::copy(w.begin(), w.end(), out.row(i).begin());
    }
    return out;
}

std::vector<BetaSweepRow> run_beta_sweep(const TrainConfig& config, std::span<const double> betas,
                                         const Dataset& train_set, const Dataset& test_set) {
    if (betas.empty()) throw std::invalid_argument("beta sweep needs at least one beta");
    std::vector<double> sorted(betas.begin(), betas.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<BetaSweepRow> rows(sorted.size());
    parallel_for(sorted.size(), worker_slots(), [&](std::size_t i) {
        rows[i].beta = sorted[i];
        try {
            TrainConfig cell = config;
            cell.strategy = Strategy::pel;
            cell.beta = sorted[i];
            rows[i].test_accuracy = evaluate(train(cell, train_set, test_set).model, test_set);
        } catch (const std::exception& e) {
            rows[i].test_accuracy = std::nan("");
            rows[i].error = e.what();
        }
    });
    return rows;
}

}  // namespace pel
