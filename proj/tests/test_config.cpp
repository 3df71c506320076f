#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pel/config.hpp"

using namespace pel;

TEST(ParseConfig, EmptyTextGivesDefaults) {
    const ExperimentConfig c = parse_config_text("");
    EXPECT_EQ(c.train.beta, 6.0);
    EXPECT_EQ(c.train.alpha, 0.9);
    EXPECT_EQ(c.train.t1, 1.0);
    EXPECT_EQ(c.train.t2, 1.0);
    EXPECT_EQ(c.train.lr, 0.001);
    EXPECT_EQ(c.betas, (std::vector<double>{4.0, 6.0, 8.0}));
    EXPECT_EQ(c.noise_rates, (std::vector<double>{0.0, 0.1, 0.2, 0.3}));
    EXPECT_EQ(c.replicates, 5u);
}

TEST(ParseConfig, EmptyFileGivesDefaults) {
    const auto path = std::filesystem::temp_directory_path() / "pel_test_empty.cfg";
    { std::ofstream os(path); }
    const ExperimentConfig c = parse_config(path);
    EXPECT_EQ(c.train.beta, 6.0);
    EXPECT_EQ(c.train.lr, 0.001);
    std::filesystem::remove(path);
}

TEST(ParseConfig, ValuesCommentsAndOverrides) {
    const ExperimentConfig c = parse_config_text(
        "# benchmark\n"
        "strategy = label_smoothing\n"
        "beta=4   # trailing comment\n"
        "hidden_dims=32,16\n"
        "normalize_enhanced_target=true\n"
        "mislabel_mode=sibling\n"
        "cosine_mode=raw_dot\n"
        "betas=2,3\n",
        {"beta=8", "epochs=7"});
    EXPECT_EQ(c.train.strategy, Strategy::label_smoothing);
    EXPECT_EQ(c.train.beta, 8.0);
    EXPECT_EQ(c.train.epochs, 7u);
    EXPECT_EQ(c.train.hidden_dims, (std::vector<std::size_t>{32, 16}));
    EXPECT_TRUE(c.train.normalize_enhanced_target);
    EXPECT_EQ(c.data.mislabel_mode, NoiseMode::sibling);
    EXPECT_EQ(c.train.cosine_mode, SimilarityMode::raw_dot);
    EXPECT_EQ(c.betas, (std::vector<double>{2.0, 3.0}));
}

TEST(ParseConfig, UnknownKeyNamesKeyAndLine) {
    try {
        parse_config_text("beta=6\nbetta=8\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "betta");
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("betta"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text("", {"betta=1"}), ConfigError);
}

TEST(ParseConfig, TypeMismatchNamesKeyAndLine) {
    try {
        parse_config_text("\n\nepochs=many\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "epochs");
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_config_text("normalize_enhanced_target=yes"), ConfigError);
    EXPECT_THROW(parse_config_text("strategy=bogus"), ConfigError);
    EXPECT_THROW(parse_config_text("beta"), ConfigError);
}

TEST(ParseConfig, MissingFileIsAnError) {
    EXPECT_THROW(parse_config("/nonexistent/pel.cfg"), ConfigError);
}

TEST(ParseConfig, RenderedConfigParsesBack) {
    ExperimentConfig c = parse_config_text("beta=7.25\nhidden_dims=12,8\nseed=99\nmislabel_rate=0.15\n");
    const ExperimentConfig again = parse_config_text(render_config(c));
    EXPECT_EQ(render_config(again), render_config(c));
    EXPECT_EQ(again.train.beta, 7.25);
    EXPECT_EQ(config_keys().size(), 31u);
}
