#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pel/trainer.hpp"

using namespace pel;

namespace {

// Small, fast variant of the benchmark data.
SyntheticSpec small_spec() {
    SyntheticSpec spec;
    spec.input_dim = 16;
    spec.samples_per_class_train = 20;
    spec.samples_per_class_test = 20;
    return spec;
}

TrainConfig small_config(Strategy strategy) {
    TrainConfig c;
    c.strategy = strategy;
    c.epochs = 5;
    c.hidden_dims = {16};
    c.feature_dim = 8;
    c.record_wall_clock = false;
    return c;
}

// Three separable classes in 4 dimensions.
std::pair<Dataset, Dataset> toy_three_class() {
    SyntheticSpec spec;
    spec.n_classes = 3;
    spec.n_super_groups = 3;
    spec.input_dim = 4;
    spec.group_spread = 0.1;
    spec.intra_noise_sigma = 0.05;
    spec.samples_per_class_train = 20;
    spec.samples_per_class_test = 20;
    spec.seed = 3;
    auto data = generate(spec);
    return {data.train, data.test};
}

}  // namespace

TEST(TrainConfig, PaperDefaults) {
    const TrainConfig c;
    EXPECT_EQ(c.alpha, 0.9);
    EXPECT_EQ(c.beta, 6.0);
    EXPECT_EQ(c.t1, 1.0);
    EXPECT_EQ(c.t2, 1.0);
    EXPECT_EQ(c.lr, 0.001);
    EXPECT_EQ(c.momentum, 0.9);
    EXPECT_EQ(c.weight_decay, 1e-4);
    EXPECT_EQ(c.batch_size, 8u);
    EXPECT_FALSE(c.normalize_enhanced_target);
    EXPECT_FALSE(c.score_before_update);
    EXPECT_EQ(c.cosine_mode, SimilarityMode::normalized);
}

TEST(TrainConfig, ValidationNamesField) {
    TrainConfig c;
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.beta = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.batch_size = 0;
    try {
        c.validate();
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
    }
}

TEST(Train, ZeroEpochsLeavesModelAtInit) {
    const GeneratedData data = generate(small_spec());
    TrainConfig c = small_config(Strategy::pel);
    c.epochs = 0;
    const TrainResult r = train(c, data.train, data.test);
    EXPECT_TRUE(r.log.rows.empty());
    const MlpModel init(model_shape_for(c, data.train), Temperature(c.t1), mix_seed(c.seed, 0));
    EXPECT_EQ(r.model.parameters(), init.parameters());
    ASSERT_TRUE(r.bank.has_value());
    EXPECT_EQ(r.bank->initialized_count(), data.train.n_classes);
}

TEST(Train, BankInitializedFromClassMeansOfInitialFeatures) {
    const GeneratedData data = generate(small_spec());
    TrainConfig c = small_config(Strategy::pel);
    c.epochs = 0;
    const TrainResult r = train(c, data.train, data.test);
    Matrix expected(data.train.n_classes, c.feature_dim);
    std::vector<double> counts(data.train.n_classes, 0.0);
    for (const auto& s : data.train.samples) {
        const Vector f = r.model.forward(s.x).feature;
        for (std::size_t d = 0; d < f.size(); ++d) expected(s.observed_class, d) += f[d];
        counts[s.observed_class] += 1.0;
    }
    for (std::size_t n = 0; n < expected.rows; ++n) {
        for (std::size_t d = 0; d < expected.cols; ++d) {
            EXPECT_NEAR(r.bank->prototype(n)[d], expected(n, d) / counts[n], 1e-12);
        }
    }
}

TEST(Train, OneRowPerEpochWithSaneMetrics) {
    const GeneratedData data = generate(small_spec());
    for (Strategy s : {Strategy::pel, Strategy::onehot_ce, Strategy::label_smoothing}) {
        const TrainResult r = train(small_config(s), data.train, data.test);
        ASSERT_EQ(r.log.rows.size(), 5u);
        for (std::size_t e = 0; e < 5; ++e) {
            const auto& row = r.log.rows[e];
            EXPECT_EQ(row.epoch, e + 1);
            EXPECT_TRUE(std::isfinite(row.train_loss));
            EXPECT_GE(row.train_accuracy, 0.0);
            EXPECT_LE(row.train_accuracy, 1.0);
            EXPECT_GE(row.test_accuracy, 0.0);
            EXPECT_LE(row.test_accuracy, 1.0);
            EXPECT_TRUE(std::isfinite(row.prototype_drift));
            if (s == Strategy::pel) {
                EXPECT_GT(row.prototype_drift, 0.0);
            } else {
                EXPECT_EQ(row.prototype_drift, 0.0);
            }
        }
        EXPECT_EQ(r.bank.has_value(), s == Strategy::pel);
    }
}

TEST(Train, DeterministicMetricsLog) {
    const GeneratedData data = generate(small_spec());
    const TrainConfig c = small_config(Strategy::pel);
    const TrainResult a = train(c, data.train, data.test);
    const TrainResult b = train(c, data.train, data.test);
    EXPECT_EQ(a.log, b.log);
    EXPECT_EQ(a.model.parameters(), b.model.parameters());
    EXPECT_EQ(*a.bank, *b.bank);
}

TEST(Train, OneHotBaselineFitsSeparableToySet) {
    auto [train_set, test_set] = toy_three_class();
    TrainConfig c = small_config(Strategy::onehot_ce);
    c.epochs = 200;
    const TrainResult r = train(c, train_set, test_set);
    std::size_t first = 0;
    for (const auto& row : r.log.rows) {
        if (row.train_accuracy >= 0.95) {
            first = row.epoch;
            break;
        }
    }
    EXPECT_GT(first, 0u);
    EXPECT_LE(first, 200u);
}

TEST(Train, PelKeepsUpWithOneHotOnToySet) {
    auto [train_set, test_set] = toy_three_class();
    TrainConfig c = small_config(Strategy::onehot_ce);
    c.epochs = 60;
    const double ce = train(c, train_set, test_set).log.rows.back().train_accuracy;
    c.strategy = Strategy::pel;
    const double pel = train(c, train_set, test_set).log.rows.back().train_accuracy;
    EXPECT_GE(pel, ce - 0.02);
}

TEST(Train, AblationSwitchesChangeTheRun) {
    const GeneratedData data = generate(small_spec());
    const TrainConfig base = small_config(Strategy::pel);
    const auto reference = train(base, data.train, data.test).model.parameters();
    for (int variant = 0; variant < 3; ++variant) {
        TrainConfig c = base;
        if (variant == 0) c.normalize_enhanced_target = true;
        if (variant == 1) c.score_before_update = true;
        if (variant == 2) c.cosine_mode = SimilarityMode::raw_dot;
        EXPECT_NE(train(c, data.train, data.test).model.parameters(), reference) << variant;
    }
}

TEST(Train, DivergenceReportsEpochAndBatch) {
    const GeneratedData data = generate(small_spec());
    TrainConfig c = small_config(Strategy::onehot_ce);
    c.lr = 1e200;
    try {
        train(c, data.train, data.test);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.epoch(), 1u);
        EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
    }
}

TEST(Train, RejectsMismatchedDatasets) {
    const GeneratedData a = generate(small_spec());
    SyntheticSpec other = small_spec();
    other.input_dim = 8;
    const GeneratedData b = generate(other);
    EXPECT_THROW(train(small_config(Strategy::pel), a.train, b.test), std::invalid_argument);
}

TEST(Evaluate, UniformModelScoresChance) {
    const GeneratedData data = generate(small_spec());
    MlpModel model(model_shape_for(small_config(Strategy::pel), data.test), Temperature(1.0), 1);
    auto& head = model.mutable_parameters().layers.back();
    std::fill(head.weight.data.begin(), head.weight.data.end(), 0.0);
    // Ties resolve to class 0, so exactly one class in eight is right.
    EXPECT_DOUBLE_EQ(evaluate(model, data.test), 1.0 / 8.0);
    EXPECT_THROW(evaluate(model, Dataset{}), std::invalid_argument);
}

TEST(Evaluate, MemorizedTrainingSetScoresOne) {
    auto [train_set, test_set] = toy_three_class();
    TrainConfig c = small_config(Strategy::onehot_ce);
    c.epochs = 150;
    const TrainResult r = train(c, train_set, test_set);
    EXPECT_DOUBLE_EQ(evaluate(r.model, train_set), 1.0);
}

TEST(Evaluate, IndependentOfBank) {
    const GeneratedData data = generate(small_spec());
    TrainResult r = train(small_config(Strategy::pel), data.train, data.test);
    const double with_bank = evaluate(r.model, data.test);
    const PrototypeBank snapshot = *r.bank;
    r.bank.reset();
    EXPECT_EQ(evaluate(r.model, data.test), with_bank);
    EXPECT_EQ(r.model.parameter_count(),
              MlpModel(model_shape_for(small_config(Strategy::onehot_ce), data.train), Temperature(1.0), 0)
                  .parameter_count());
    EXPECT_EQ(snapshot.n_classes(), 8u);
}

TEST(BetaSweep, SortedOneRowPerBeta) {
    const GeneratedData data = generate(small_spec());
    TrainConfig c = small_config(Strategy::pel);
    c.epochs = 2;
    const std::vector<double> betas{8.0, 4.0, 6.0};
    const auto rows = run_beta_sweep(c, betas, data.train, data.test);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].beta, 4.0);
    EXPECT_EQ(rows[1].beta, 6.0);
    EXPECT_EQ(rows[2].beta, 8.0);
    for (const auto& row : rows) EXPECT_TRUE(row.error.empty());
}

TEST(BetaSweep, SingleBetaEqualsOneTrainCall) {
    const GeneratedData data = generate(small_spec());
    TrainConfig c = small_config(Strategy::pel);
    c.epochs = 2;
    c.beta = 4.0;
    const std::vector<double> betas{4.0};
    const auto rows = run_beta_sweep(c, betas, data.train, data.test);
    EXPECT_EQ(rows.at(0).test_accuracy, evaluate(train(c, data.train, data.test).model, data.test));
}

TEST(BetaSweep, FailingCellDoesNotAbortOthers) {
    const GeneratedData data = generate(small_spec());
    TrainConfig c = small_config(Strategy::pel);
    c.epochs = 1;
    const std::vector<double> betas{-1.0, 6.0};
    const auto rows = run_beta_sweep(c, betas, data.train, data.test);
    EXPECT_FALSE(rows[0].error.empty());
    EXPECT_TRUE(rows[1].error.empty());
    EXPECT_THROW(run_beta_sweep(c, std::vector<double>{}, data.train, data.test), std::invalid_argument);
}

TEST(Train, PrototypeDriftSettlesOnToyBenchmark) {
    const GeneratedData data = generate(SyntheticSpec{});
    TrainConfig c;
    c.record_wall_clock = false;
    const TrainResult r = train(c, data.train, data.test);
    const auto& rows = r.log.rows;
    for (const auto& row : rows) EXPECT_TRUE(std::isfinite(row.prototype_drift));
    // Least-squares slope of the 10-epoch trailing mean over the last quarter.
    const std::size_t window = 10;
    const std::size_t start = rows.size() - rows.size() / 4;
    std::vector<double> xs, ys;
    for (std::size_t e = start; e < rows.size(); ++e) {
        double sum = 0.0;
        for (std::size_t k = e + 1 - window; k <= e; ++k) sum += rows[k].prototype_drift;
        xs.push_back(static_cast<double>(e));
        ys.push_back(sum / static_cast<double>(window));
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    EXPECT_LE(sxy / sxx, 0.0);
    EXPECT_LT(rows.back().train_loss, rows.front().train_loss);
}
