#pragma once

// Small MLP encoder producing L2-normalized features, a linear classifier
// head on top, exact analytic gradients of the soft-target KL loss, and SGD
// with momentum and weight decay.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pel/mathcore.hpp"

namespace pel {

/// One affine map. `weight` is out x in.
struct DenseLayer {
    Matrix weight;
    Vector bias;

    bool operator==(const DenseLayer&) const = default;
};

/// All trainable arrays: the encoder layers followed by the classifier head.
/// Gradients and optimizer velocity share this layout.
struct ParameterSet {
    std::vector<DenseLayer> layers;

    static ParameterSet zeros_like(const ParameterSet& other);

    std::size_t scalar_count() const;

    /// Every weight and bias array, in layer order (weight before bias).
    std::vector<std::span<double>> arrays();
    std::vector<std::span<const double>> arrays() const;

    /// Names matching arrays(): "encoder.<i>.weight", ..., "head.bias".
    std::vector<std::string> array_names() const;

    /// this += scale * other
    void add_scaled(const ParameterSet& other, double scale);

    bool operator==(const ParameterSet&) const = default;
};

using GradientSet = ParameterSet;

struct ModelShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t feature_dim = 0;
    std::size_t n_classes = 0;

    bool operator==(const ModelShape&) const = default;
};

/// Raised when an activation stops being finite.
class NonFiniteActivation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Intermediates of one forward pass, consumed by backward().
struct ForwardCache {
    Vector input;
    std::vector<Vector> pre_activations;  // one per encoder layer
    std::vector<Vector> activations;      // encoder layer outputs (rectified for hidden layers)
    double raw_norm = 0.0;                // ||v|| before normalization
    Vector feature;                       // f = v / ||v||
    Vector logits;
    Vector probabilities;                 // tempered softmax of the logits
    std::uint64_t parameter_stamp = 0;  // identifies the parameter state used
};

class MlpModel {
public:
    /// Glorot-uniform weights drawn from `seed`; zero biases.
    MlpModel(ModelShape shape, Temperature t1, std::uint64_t seed);
    MlpModel(ModelShape shape, Temperature t1, ParameterSet params);

    ForwardCache forward(std::span<const double> x) const;

    /// Gradient of kl_loss(target, yhat) for one instance, with the target
    /// held constant. Rejects a cache not produced by this model's current
    /// parameters.
    GradientSet backward(const ForwardCache& cache, std::span<const double> target) const;

    /// argmax of the predicted distribution.
    std::size_t predict(std::span<const double> x) const;

    const ModelShape& shape() const { return shape_; }
    Temperature t1() const { return t1_; }
    const ParameterSet& parameters() const { return params_; }

    /// Mutable access invalidates every outstanding forward cache.
    ParameterSet& mutable_parameters();

    std::size_t parameter_count() const { return params_.scalar_count(); }

    void save_binary(const std::filesystem::path& path) const;
    static MlpModel load_binary(const std::filesystem::path& path);
    void save_text(const std::filesystem::path& path) const;
    static MlpModel load_text(const std::filesystem::path& path);

private:
    void validate() const;

    ModelShape shape_;
    Temperature t1_;
    ParameterSet params_;
    std::uint64_t stamp_;
};

struct SgdSettings {
    double lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// v <- momentum v + grad + weight_decay param; param <- param - lr v.
/// An empty velocity is zero-initialized to the model's layout.
void sgd_step(MlpModel& model, const GradientSet& grads, const SgdSettings& settings, ParameterSet& velocity);

}  // namespace pel
