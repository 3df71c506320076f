#include "pel/label_enhancer.hpp"

#include <cmath>
#include <string>

namespace pel {

EnhancedLabel fuse_labels(std::span<const double> one_hot_target, std::span<const double> scores, double beta) {
    if (one_hot_target.size() != scores.size()) throw NumericError("fuse_labels: dimension mismatch");
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw NumericError("fuse_labels: beta must be positive, got " + std::to_string(beta));
    }
    one_hot_index(one_hot_target);
    EnhancedLabel out{Vector(scores.size()), beta};
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (scores[j] < 0.0) throw NumericError("fuse_labels: similarity scores must be nonnegative");
        out.values[j] = beta * one_hot_target[j] + scores[j];
    }
    return out;
}

Vector smooth_labels(std::span<const double> one_hot_target, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw NumericError("smooth_labels: epsilon must lie in [0, 1), got " + std::to_string(epsilon));
    }
    const std::size_t target = one_hot_index(one_hot_target);
    const double share = epsilon / static_cast<double>(one_hot_target.size());
    Vector out(one_hot_target.size(), share);
    out[target] = 1.0 - epsilon + share;
    return out;
}

}  // namespace pel
