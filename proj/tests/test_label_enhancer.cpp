#include <gtest/gtest.h>

#include <random>

#include "pel/label_enhancer.hpp"

using namespace pel;

TEST(FuseLabels, UniformScoresWithDefaultBeta) {
    const EnhancedLabel y = fuse_labels(one_hot(4, 2), Vector(4, 0.25), 6.0);
    EXPECT_EQ(y.values, (Vector{0.25, 0.25, 6.25, 0.25}));
    EXPECT_EQ(y.beta, 6.0);
}

TEST(FuseLabels, AlignedScores) {
    const Vector y = one_hot(3, 1);
    const EnhancedLabel fused = fuse_labels(y, y, 6.0);
    EXPECT_EQ(fused.values, (Vector{0.0, 7.0, 0.0}));
}

TEST(FuseLabels, SmallBetaApproachesScores) {
    const Vector w{0.2, 0.5, 0.3};
    const EnhancedLabel fused = fuse_labels(one_hot(3, 0), w, 1e-12);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(fused.values[j], w[j], 1e-11);
}

TEST(FuseLabels, RejectsBadInput) {
    EXPECT_THROW(fuse_labels(one_hot(3, 0), Vector(4, 0.25), 6.0), NumericError);
    EXPECT_THROW(fuse_labels(one_hot(2, 0), Vector(2, 0.5), 0.0), NumericError);
    EXPECT_THROW(fuse_labels(one_hot(2, 0), Vector(2, 0.5), -1.0), NumericError);
}

TEST(FuseLabels, InstanceSpecificOnNegatives) {
    // Two instances of class 0 with different similarity scores keep
    // different mass on the negative classes.
    const Vector y = one_hot(4, 0);
    const Vector w_a{0.4, 0.3, 0.2, 0.1};
    const Vector w_b{0.4, 0.1, 0.2, 0.3};
    const EnhancedLabel a = fuse_labels(y, w_a, 6.0);
    const EnhancedLabel b = fuse_labels(y, w_b, 6.0);
    EXPECT_EQ(a.values[0], b.values[0]);
    EXPECT_NE(a.values[1], b.values[1]);
    EXPECT_NE(a.values[3], b.values[3]);
}

TEST(SmoothLabels, Examples) {
    EXPECT_EQ(smooth_labels(one_hot(4, 1), 0.0), one_hot(4, 1));
    const Vector s = smooth_labels(one_hot(4, 0), 0.2);
    EXPECT_NEAR(s[0], 0.85, 1e-15);
    for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(s[j], 0.05, 1e-15);
    const Vector near_uniform = smooth_labels(one_hot(4, 3), 1.0 - 1e-12);
    for (double x : near_uniform) EXPECT_NEAR(x, 0.25, 1e-11);
}

TEST(SmoothLabels, RejectsEpsilonOutOfRange) {
    EXPECT_THROW(smooth_labels(one_hot(3, 0), 1.0), NumericError);
    EXPECT_THROW(smooth_labels(one_hot(3, 0), -0.1), NumericError);
}

TEST(SmoothLabels, SameForEveryInstanceOfAClass) {
    EXPECT_EQ(smooth_labels(one_hot(5, 2), 0.1), smooth_labels(one_hot(5, 2), 0.1));
}

TEST(FuseLabels, SumAndArgmaxProperties) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0.0, 2.0);
    std::uniform_int_distribution<std::size_t> dim(2, 10);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t classes = dim(rng);
        Vector logits(classes);
        for (double& x : logits) x = n(rng);
        const Vector w = tempered_softmax(logits, Temperature(1.0));
        const std::size_t target = std::uniform_int_distribution<std::size_t>(0, classes - 1)(rng);
        for (double beta : {1.5, 4.0, 6.0, 8.0}) {
            const EnhancedLabel y = fuse_labels(one_hot(classes, target), w, beta);
            double total = 0.0;
            for (double x : y.values) total += x;
            EXPECT_NEAR(total, beta + 1.0, 1e-9);
            EXPECT_EQ(argmax(y.values), target);
            EXPECT_GE(y.values[target], beta);
        }
    }
}
