#include "pel/mathcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pel {

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw NumericError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                           " vs " + std::to_string(b.size()) + ")");
    }
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0); }

}  // namespace

Temperature::Temperature(double t) : t_(t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw NumericError("temperature must be a positive finite number, got " + std::to_string(t));
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::size_t argmax(std::span<const double> v) {
    if (v.empty()) throw NumericError("argmax of an empty vector");
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Vector one_hot(std::size_t n, std::size_t index) {
    if (index >= n) throw NumericError("one_hot: index " + std::to_string(index) + " out of range");
    Vector y(n, 0.0);
    y[index] = 1.0;
    return y;
}

std::size_t one_hot_index(std::span<const double> y) {
    std::size_t hot = y.size();
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (y[j] == 1.0) {
            if (hot != y.size()) throw NumericError("label is not one-hot: more than one hot entry");
            hot = j;
        } else if (y[j] != 0.0) {
            throw NumericError("label is not one-hot: entry " + std::to_string(j) + " is neither 0 nor 1");
        }
    }
    if (hot == y.size()) throw NumericError("label is not one-hot: no hot entry");
    return hot;
}

Vector tempered_softmax(std::span<const double> logits, Temperature t) {
    if (logits.empty()) throw NumericError("tempered_softmax: empty logits");
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (!std::isfinite(logits[j])) {
            throw NumericError("tempered_softmax: non-finite logit at index " + std::to_string(j));
        }
    }
    const double inv_t = 1.0 / t.value();
    const double peak = *std::max_element(logits.begin(), logits.end());
    Vector out(logits.size());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp((logits[j] - peak) * inv_t);
        total += out[j];
    }
    for (double& p : out) p /= total;
    return out;
}

Vector l2_normalize(std::span<const double> v) {
    const double norm = l2_norm(v);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericError("l2_normalize: vector has zero or non-finite norm (dead feature?)");
    }
    Vector out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return out;
}

double cross_entropy(std::span<const double> y, std::span<const double> yhat) {
    require_same_size(y, yhat, "cross_entropy");
    const std::size_t target = one_hot_index(y);
    return -std::log(clamp_probability(yhat[target]));
}

double kl_loss(std::span<const double> target, std::span<const double> yhat) {
    require_same_size(target, yhat, "kl_loss");
    double loss = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
        const double t = target[j];
        if (t < 0.0 || !std::isfinite(t)) {
            throw NumericError("kl_loss: target entry " + std::to_string(j) + " is negative or non-finite");
        }
        if (t == 0.0) continue;
        loss += t * (std::log(t) - std::log(clamp_probability(yhat[j])));
    }
    return loss;
}

}  // namespace pel
