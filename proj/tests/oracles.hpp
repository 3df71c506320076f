#pragma once

// Test-only reference computations, independent of the code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pel/encoder_model.hpp"

namespace pel::testing {

/// Central differences of `loss` with respect to every parameter entry.
inline ParameterSet finite_difference_gradient(const MlpModel& model, const std::function<double(const MlpModel&)>& loss,
                                               double h = 1e-5) {
    MlpModel probe = model;
    ParameterSet numeric = ParameterSet::zeros_like(model.parameters());
    auto out = numeric.arrays();
    for (std::size_t a = 0; a < out.size(); ++a) {
        for (std::size_t k = 0; k < out[a].size(); ++k) {
            const double saved = probe.parameters().arrays()[a][k];
            probe.mutable_parameters().arrays()[a][k] = saved + h;
            const double up = loss(probe);
            probe.mutable_parameters().arrays()[a][k] = saved - h;
            const double down = loss(probe);
            probe.mutable_parameters().arrays()[a][k] = saved;
            out[a][k] = (up - down) / (2.0 * h);
        }
    }
    return numeric;
}

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Largest entrywise relative error between two gradient sets.
inline double max_relative_error(const ParameterSet& a, const ParameterSet& b) {
    double worst = 0.0;
    const auto xs = a.arrays();
    const auto ys = b.arrays();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t k = 0; k < xs[i].size(); ++k) worst = std::max(worst, relative_error(xs[i][k], ys[i][k]));
    }
    return worst;
}

/// Sum of w log(w / p) with the textbook 0 log 0 = 0 convention; no clamping.
inline double reference_kl(const std::vector<double>& w, const std::vector<double>& p) {
    double total = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] > 0.0) total += w[j] * std::log(w[j] / p[j]);
    }
    return total;
}

/// Softmax written out directly, without max-subtraction.
inline std::vector<double> reference_softmax(const std::vector<double>& z, double t) {
    std::vector<double> p(z.size());
    double total = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) total += p[j] = std::exp(z[j] / t);
    for (double& x : p) x /= total;
    return p;
}

}  // namespace pel::testing
