#pragma once

// Numerical primitives shared by every module: tempered softmax, L2
// normalization, dot products and the two training losses. All arithmetic is
// double precision.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pel {

using Vector = std::vector<double>;

/// Probabilities are clamped to [kProbabilityFloor, 1] before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// Dense row-major matrix. Only the shapes this library needs are supported.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

/// Softmax temperature. Always strictly positive.
class Temperature {
public:
    explicit Temperature(double t = 1.0);
    double value() const { return t_; }

private:
    double t_;
};

/// Thrown for inputs that violate an operation's precondition.
class NumericError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Independent seed for a named sub-stream of a run (splitmix64 finalizer).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
std::size_t argmax(std::span<const double> v);

/// Unit vector with 1 at `index`.
Vector one_hot(std::size_t n, std::size_t index);

/// Index of the hot entry. Throws unless `y` is exactly one-hot.
std::size_t one_hot_index(std::span<const double> y);

/// exp(z_j / t) / sum_n exp(z_n / t), evaluated with max-subtraction.
/// Rejects non-finite logits.
Vector tempered_softmax(std::span<const double> logits, Temperature t);

/// v / ||v||_2. A zero (or non-finite) vector is rejected.
Vector l2_normalize(std::span<const double> v);

/// -sum_j y_j log(yhat_j) for a one-hot y, with yhat clamped.
double cross_entropy(std::span<const double> y, std::span<const double> yhat);

/// sum_j t_j log(t_j / yhat_j) with 0 log 0 = 0 and yhat clamped.
/// `target` only needs to be nonnegative; it is not renormalized.
double kl_loss(std::span<const double> target, std::span<const double> yhat);

}  // namespace pel
