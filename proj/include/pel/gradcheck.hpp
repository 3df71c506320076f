#pragma once

// Central finite-difference check of MlpModel::backward.

#include <cstdint>
#include <string>
#include <vector>

#include "pel/encoder_model.hpp"

namespace pel {

struct GradcheckGroup {
    std::string name;
    std::size_t entries = 0;
    double max_rel_error = 0.0;
};

struct GradcheckReport {
    std::uint64_t seed = 0;
    std::vector<GradcheckGroup> groups;

    double max_rel_error() const;
};

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;

/// Compares the analytic gradient of the mean KL loss over (inputs, targets)
/// with central differences for every parameter entry. Relative error is
/// |a - b| / max(|a|, |b|, 1e-8). `perturb` is added to every analytic entry
/// so callers can confirm the detector fires.
GradcheckReport check_gradients(const MlpModel& model, const std::vector<Vector>& inputs,
                                const std::vector<Vector>& targets, double step = kGradcheckStep,
                                double perturb = 0.0);

/// 8 -> 16 -> 8 feature, 5-class model with random inputs and enhanced
/// targets (beta * one_hot + random simplex), all drawn from `seed`.
GradcheckReport gradcheck_toy_model(std::uint64_t seed, double beta, double perturb = 0.0);

}  // namespace pel
