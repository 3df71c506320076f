#include "pel/encoder_model.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

#include "io_util.hpp"

namespace pel {

namespace {

// Globally unique per parameter state; copies share a stamp until mutated.
std::uint64_t next_stamp() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

constexpr std::string_view kTextMagic = "pel-mlp-model v1";
constexpr char kBinaryMagic[8] = {'P', 'E', 'L', 'M', 'O', 'D', 'L', '1'};

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const ModelShape& shape) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;  // (in, out)
    std::size_t in = shape.input_dim;
    for (std::size_t h : shape.hidden_dims) {
        dims.emplace_back(in, h);
        in = h;
    }
    dims.emplace_back(in, shape.feature_dim);
    dims.emplace_back(shape.feature_dim, shape.n_classes);
    return dims;
}

void check_shape(const ModelShape& shape) {
    if (shape.input_dim == 0 || shape.feature_dim == 0 || shape.n_classes < 2) {
        throw NumericError("model shape needs input_dim > 0, feature_dim > 0 and at least two classes");
    }
    for (std::size_t h : shape.hidden_dims) {
        if (h == 0) throw NumericError("hidden layer width must be positive");
    }
}

ParameterSet glorot_init(const ModelShape& shape, std::uint64_t seed) {
    check_shape(shape);
    std::mt19937_64 rng(seed);
    ParameterSet params;
    for (auto [in, out] : layer_dims(shape)) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
        for (double& w : layer.weight.data) w = dist(rng);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

// out = W x + b
Vector affine(const DenseLayer& layer, std::span<const double> x) {
    Vector out(layer.bias);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
        const double* w = layer.weight.data.data() + r * layer.weight.cols;
        double s = 0.0;
        for (std::size_t c = 0; c < layer.weight.cols; ++c) s += w[c] * x[c];
        out[r] += s;
    }
    return out;
}

// grad_W += g x^T, grad_b += g; returns W^T g
Vector affine_backward(const DenseLayer& layer, std::span<const double> x, std::span<const double> g,
                       DenseLayer& grad) {
    Vector back(layer.weight.cols, 0.0);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
        const double gr = g[r];
        grad.bias[r] += gr;
        if (gr == 0.0) continue;
        const double* w = layer.weight.data.data() + r * layer.weight.cols;
        double* gw = grad.weight.data.data() + r * layer.weight.cols;
        for (std::size_t c = 0; c < layer.weight.cols; ++c) {
            gw[c] += gr * x[c];
            back[c] += w[c] * gr;
        }
    }
    return back;
}

void require_finite(std::span<const double> v, const std::string& where) {
    for (double x : v) {
        if (!std::isfinite(x)) throw NonFiniteActivation("non-finite activation in " + where);
    }
}

}  // namespace

ParameterSet ParameterSet::zeros_like(const ParameterSet& other) {
    ParameterSet out;
    for (const auto& layer : other.layers) {
        out.layers.push_back({Matrix(layer.weight.rows, layer.weight.cols), Vector(layer.bias.size(), 0.0)});
    }
    return out;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weight.data.size() + layer.bias.size();
    return n;
}

std::vector<std::span<double>> ParameterSet::arrays() {
    std::vector<std::span<double>> out;
    for (auto& layer : layers) {
        out.emplace_back(layer.weight.data);
        out.emplace_back(layer.bias);
    }
    return out;
}

std::vector<std::span<const double>> ParameterSet::arrays() const {
    std::vector<std::span<const double>> out;
    for (const auto& layer : layers) {
        out.emplace_back(layer.weight.data);
        out.emplace_back(layer.bias);
    }
    return out;
}

std::vector<std::string> ParameterSet::array_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string prefix = i + 1 == layers.size() ? "head" : "encoder." + std::to_string(i);
        names.push_back(prefix + ".weight");
        names.push_back(prefix + ".bias");
    }
    return names;
}

void ParameterSet::add_scaled(const ParameterSet& other, double scale) {
    auto dst = arrays();
    const auto src = other.arrays();
    if (dst.size() != src.size()) throw NumericError("parameter layouts differ");
    for (std::size_t a = 0; a < dst.size(); ++a) {
        if (dst[a].size() != src[a].size()) throw NumericError("parameter layouts differ");
        for (std::size_t i = 0; i < dst[a].size(); ++i) dst[a][i] += scale * src[a][i];
    }
}

MlpModel::MlpModel(ModelShape shape, Temperature t1, std::uint64_t seed)
    : shape_(std::move(shape)), t1_(t1), params_(glorot_init(shape_, seed)), stamp_(next_stamp()) {}

MlpModel::MlpModel(ModelShape shape, Temperature t1, ParameterSet params)
    : shape_(std::move(shape)), t1_(t1), params_(std::move(params)), stamp_(next_stamp()) {
    validate();
}

void MlpModel::validate() const {
    check_shape(shape_);
    const auto dims = layer_dims(shape_);
    if (params_.layers.size() != dims.size()) throw NumericError("parameter set does not match the model shape");
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto& layer = params_.layers[i];
        if (layer.weight.cols != dims[i].first || layer.weight.rows != dims[i].second ||
            layer.weight.data.size() != dims[i].first * dims[i].second || layer.bias.size() != dims[i].second) {
            throw NumericError("layer " + std::to_string(i) + " does not match the model shape");
        }
    }
    for (auto array : params_.arrays()) require_finite(array, "parameters");
}

ForwardCache MlpModel::forward(std::span<const double> x) const {
    if (x.size() != shape_.input_dim) {
        throw NumericError("forward: input has " + std::to_string(x.size()) + " entries, model expects " +
                           std::to_string(shape_.input_dim));
    }
    ForwardCache cache;
    cache.input.assign(x.begin(), x.end());
    cache.parameter_stamp = stamp_;
    const std::size_t n_encoder = params_.layers.size() - 1;
    std::span<const double> h = cache.input;
    for (std::size_t l = 0; l < n_encoder; ++l) {
        cache.pre_activations.push_back(affine(params_.layers[l], h));
        Vector out = cache.pre_activations.back();
        if (l + 1 < n_encoder) {
            for (double& a : out) a = a > 0.0 ? a : 0.0;
        }
        require_finite(out, "encoder layer " + std::to_string(l));
        cache.activations.push_back(std::move(out));
        h = cache.activations.back();
    }
    cache.raw_norm = l2_norm(h);
    cache.feature = l2_normalize(h);
    cache.logits = affine(params_.layers.back(), cache.feature);
    require_finite(cache.logits, "classifier head");
    cache.probabilities = tempered_softmax(cache.logits, t1_);
    return cache;
}

GradientSet MlpModel::backward(const ForwardCache& cache, std::span<const double> target) const {
    if (cache.parameter_stamp != stamp_) {
        throw std::logic_error("backward: stale forward cache (parameters changed since forward)");
    }
    if (target.size() != shape_.n_classes) throw NumericError("backward: target dimension mismatch");

    GradientSet grads = ParameterSet::zeros_like(params_);

    // d/dz sum_j t_j log(t_j / softmax(z/T)_j) = (S softmax - t) / T with S = sum_j t_j.
    double total = 0.0;
    for (double t : target) total += t;
    Vector grad_logits(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) {
        grad_logits[j] = (total * cache.probabilities[j] - target[j]) / t1_.value();
    }

    const Vector grad_feature = affine_backward(params_.layers.back(), cache.feature, grad_logits, grads.layers.back());

    // Jacobian of v / ||v|| is (I - f f^T) / ||v||.
    const double along = dot(cache.feature, grad_feature);
    Vector grad_out(grad_feature.size());
    for (std::size_t d = 0; d < grad_out.size(); ++d) {
        grad_out[d] = (grad_feature[d] - cache.feature[d] * along) / cache.raw_norm;
    }

    const std::size_t n_encoder = params_.layers.size() - 1;
    for (std::size_t l = n_encoder; l-- > 0;) {
        if (l + 1 < n_encoder) {
            const Vector& pre = cache.pre_activations[l];
            for (std::size_t k = 0; k < grad_out.size(); ++k) {
                if (!(pre[k] > 0.0)) grad_out[k] = 0.0;
            }
        }
        std::span<const double> layer_input = l == 0 ? std::span<const double>(cache.input)
                                                     : std::span<const double>(cache.activations[l - 1]);
        grad_out = affine_backward(params_.layers[l], layer_input, grad_out, grads.layers[l]);
    }
    return grads;
}

std::size_t MlpModel::predict(std::span<const double> x) const { return argmax(forward(x).probabilities); }

ParameterSet& MlpModel::mutable_parameters() {
    stamp_ = next_stamp();
    return params_;
}

void MlpModel::save_binary(const std::filesystem::path& path) const {
    auto os = io::open_out(path.string(), true);
    os.write(kBinaryMagic, sizeof(kBinaryMagic));
    io::write_pod<std::uint64_t>(os, shape_.input_dim);
    io::write_pod<std::uint64_t>(os, shape_.hidden_dims.size());
    for (std::size_t h : shape_.hidden_dims) io::write_pod<std::uint64_t>(os, h);
    io::write_pod<std::uint64_t>(os, shape_.feature_dim);
    io::write_pod<std::uint64_t>(os, shape_.n_classes);
    io::write_pod<double>(os, t1_.value());
    for (const auto& layer : params_.layers) {
        io::write_doubles(os, layer.weight.data);
        io::write_doubles(os, layer.bias);
    }
    if (!os) throw io::FormatError("failed writing '" + path.string() + "'");
}

MlpModel MlpModel::load_binary(const std::filesystem::path& path) {
    auto is = io::open_in(path.string(), true);
    char magic[sizeof(kBinaryMagic)] = {};
    if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kBinaryMagic)) {
        throw io::FormatError(path.string() + ": not a binary model checkpoint");
    }
    ModelShape shape;
    shape.input_dim = io::read_pod<std::uint64_t>(is);
    const auto n_hidden = io::read_pod<std::uint64_t>(is);
    if (n_hidden > 1024) throw io::FormatError(path.string() + ": implausible hidden layer count");
    for (std::uint64_t i = 0; i < n_hidden; ++i) shape.hidden_dims.push_back(io::read_pod<std::uint64_t>(is));
    shape.feature_dim = io::read_pod<std::uint64_t>(is);
    shape.n_classes = io::read_pod<std::uint64_t>(is);
    const Temperature t1(io::read_pod<double>(is));
    check_shape(shape);
    ParameterSet params;
    for (auto [in, out] : layer_dims(shape)) {
        DenseLayer layer{Matrix(out, in), Vector(out)};
        io::read_doubles(is, layer.weight.data);
        io::read_doubles(is, layer.bias);
        params.layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(shape), t1, std::move(params));
}

void MlpModel::save_text(const std::filesystem::path& path) const {
    auto os = io::open_out(path.string(), false);
    os << kTextMagic << '\n';
    os << "shape " << shape_.input_dim << ' ' << shape_.feature_dim << ' ' << shape_.n_classes << ' '
       << shape_.hidden_dims.size();
    for (std::size_t h : shape_.hidden_dims) os << ' ' << h;
    os << "\nt1 " << io::format_double(t1_.value()) << '\n';
    const auto names = params_.array_names();
    const auto arrays = params_.arrays();
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        os << names[a] << ' ' << arrays[a].size() << '\n';
        for (std::size_t i = 0; i < arrays[a].size(); ++i) os << (i ? " " : "") << io::format_double(arrays[a][i]);
        os << '\n';
    }
    if (!os) throw io::FormatError("failed writing '" + path.string() + "'");
}

MlpModel MlpModel::load_text(const std::filesystem::path& path) {
    auto is = io::open_in(path.string(), false);
    std::string line;
    if (!std::getline(is, line) || line != kTextMagic) throw io::FormatError(path.string() + ": missing model header");
    std::string token;
    auto next = [&](const char* what) {
        if (!(is >> token)) throw io::FormatError(path.string() + ": truncated while reading " + what);
        return std::string_view(token);
    };
    auto next_size = [&](const char* what) {
        std::size_t v = 0;
        if (!io::parse_int(next(what), v)) throw io::FormatError(path.string() + ": malformed " + std::string(what));
        return v;
    };
    if (next("shape") != "shape") throw io::FormatError(path.string() + ": expected 'shape'");
    ModelShape shape;
    shape.input_dim = next_size("input_dim");
    shape.feature_dim = next_size("feature_dim");
    shape.n_classes = next_size("n_classes");
    const std::size_t n_hidden = next_size("hidden count");
    for (std::size_t i = 0; i < n_hidden; ++i) shape.hidden_dims.push_back(next_size("hidden width"));
    if (next("t1") != "t1") throw io::FormatError(path.string() + ": expected 't1'");
    double t1 = 0.0;
    if (!io::parse_double(next("t1"), t1)) throw io::FormatError(path.string() + ": malformed t1");
    check_shape(shape);
    ParameterSet params;
    for (auto [in, out] : layer_dims(shape)) params.layers.push_back({Matrix(out, in), Vector(out)});
    const auto names = params.array_names();
    auto arrays = params.arrays();
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        if (next("array name") != names[a]) throw io::FormatError(path.string() + ": expected array " + names[a]);
        if (next_size("array size") != arrays[a].size()) {
            throw io::FormatError(path.string() + ": size mismatch for " + names[a]);
        }
        for (double& x : arrays[a]) {
            if (!io::parse_double(next("values"), x)) throw io::FormatError(path.string() + ": malformed value in " + names[a]);
        }
    }
    return MlpModel(std::move(shape), Temperature(t1), std::move(params));
}

void sgd_step(MlpModel& model, const GradientSet& grads, const SgdSettings& settings, ParameterSet& velocity) {
    if (velocity.layers.empty()) velocity = ParameterSet::zeros_like(model.parameters());
    auto params = model.mutable_parameters().arrays();
    const auto g = grads.arrays();
    auto v = velocity.arrays();
    if (g.size() != params.size() || v.size() != params.size()) throw NumericError("sgd_step: layout mismatch");
    for (std::size_t a = 0; a < params.size(); ++a) {
        if (g[a].size() != params[a].size() || v[a].size() != params[a].size()) {
            throw NumericError("sgd_step: shape mismatch in array " + std::to_string(a));
        }
        for (std::size_t i = 0; i < params[a].size(); ++i) {
            v[a][i] = settings.momentum * v[a][i] + g[a][i] + settings.weight_decay * params[a][i];
            params[a][i] -= settings.lr * v[a][i];
        }
    }
}

}  // namespace pel
