#pragma once

#include <span>

#include "pel/mathcore.hpp"

namespace pel {

/// beta * y + w. Sums to beta + 1; not renormalized.
struct EnhancedLabel {
    Vector values;
    double beta = 0.0;
};

/// Fuses a one-hot target with similarity scores. Rejects beta <= 0.
EnhancedLabel fuse_labels(std::span<const double> one_hot_target, std::span<const double> scores, double beta);

/// Label-smoothing baseline: 1 - eps + eps/N on the target, eps/N elsewhere.
Vector smooth_labels(std::span<const double> one_hot_target, double epsilon);

}  // namespace pel
