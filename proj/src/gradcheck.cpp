#include "pel/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pel/label_enhancer.hpp"

namespace pel {

double GradcheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto& g : groups) worst = std::max(worst, g.max_rel_error);
    return worst;
}

GradcheckReport check_gradients(const MlpModel& model, const std::vector<Vector>& inputs,
                                const std::vector<Vector>& targets, double step, double perturb) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw std::invalid_argument("check_gradients: need matching, nonempty inputs and targets");
    }
    const double inv_n = 1.0 / static_cast<double>(inputs.size());

    GradientSet analytic = ParameterSet::zeros_like(model.parameters());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        analytic.add_scaled(model.backward(model.forward(inputs[i]), targets[i]), inv_n);
    }

    MlpModel probe = model;
    auto mean_loss = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i) total += kl_loss(targets[i], probe.forward(inputs[i]).probabilities);
        return total * inv_n;
    };

    GradcheckReport report;
    const auto names = analytic.array_names();
    const auto grads = analytic.arrays();
    for (std::size_t a = 0; a < grads.size(); ++a) {
        GradcheckGroup group{names[a], grads[a].size(), 0.0};
        for (std::size_t k = 0; k < grads[a].size(); ++k) {
            double& param = probe.mutable_parameters().arrays()[a][k];
            const double saved = param;
            param = saved + step;
            const double up = mean_loss();
            probe.mutable_parameters().arrays()[a][k] = saved - step;
            const double down = mean_loss();
            probe.mutable_parameters().arrays()[a][k] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double exact = grads[a][k] + perturb;
            const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
            group.max_rel_error = std::max(group.max_rel_error, std::abs(exact - numeric) / denom);
        }
        report.groups.push_back(group);
    }
    return report;
}

GradcheckReport gradcheck_toy_model(std::uint64_t seed, double beta, double perturb) {
    constexpr std::size_t kInput = 8, kHidden = 16, kFeature = 8, kClasses = 5, kBatch = 4;
    const MlpModel model(ModelShape{kInput, {kHidden}, kFeature, kClasses}, Temperature(1.0), seed);
    std::mt19937_64 rng(mix_seed(seed, 7));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> label(0, kClasses - 1);

    std::vector<Vector> inputs, targets;
    for (std::size_t i = 0; i < kBatch; ++i) {
        Vector x(kInput);
        for (double& v : x) v = normal(rng);
        Vector logits(kClasses);
        for (double& v : logits) v = normal(rng);
        const Vector w = tempered_softmax(logits, Temperature(1.0));
        inputs.push_back(std::move(x));
        targets.push_back(fuse_labels(one_hot(kClasses, label(rng)), w, beta).values);
    }
    GradcheckReport report = check_gradients(model, inputs, targets, kGradcheckStep, perturb);
    report.seed = seed;
    return report;
}

}  // namespace pel
