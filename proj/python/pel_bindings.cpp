#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "pel/commands.hpp"
#include "pel/config.hpp"
#include "pel/gradcheck.hpp"
#include "pel/label_enhancer.hpp"

namespace py = pybind11;
using namespace pel;

namespace {

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

Matrix from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

}  // namespace

PYBIND11_MODULE(_pel, m) {
    m.doc() = "Prototype-enhanced learning core";

    py::register_exception<NumericError>(m, "NumericError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::enum_<Strategy>(m, "Strategy")
        .value("pel", Strategy::pel)
        .value("onehot_ce", Strategy::onehot_ce)
        .value("label_smoothing", Strategy::label_smoothing);
    py::enum_<SimilarityMode>(m, "SimilarityMode")
        .value("normalized", SimilarityMode::normalized)
        .value("raw_dot", SimilarityMode::raw_dot);
    py::enum_<NoiseMode>(m, "NoiseMode").value("uniform", NoiseMode::uniform).value("sibling", NoiseMode::sibling);

    m.def(
        "tempered_softmax", [](const Vector& z, double t) { return tempered_softmax(z, Temperature(t)); },
        py::arg("logits"), py::arg("t") = 1.0);
    m.def("l2_normalize", [](const Vector& v) { return l2_normalize(v); }, py::arg("v"));
    m.def("kl_loss", [](const Vector& target, const Vector& p) { return kl_loss(target, p); }, py::arg("target"),
          py::arg("predicted"));
    m.def(
        "fuse_labels", [](const Vector& y, const Vector& w, double beta) { return fuse_labels(y, w, beta).values; },
        py::arg("onehot"), py::arg("w"), py::arg("beta"));

    py::class_<PrototypeBank>(m, "PrototypeBank")
        .def(py::init<std::size_t, std::size_t, double>(), py::arg("n_classes"), py::arg("dim"), py::arg("alpha"))
        .def_static(
            "from_features",
            [](const py::array_t<double>& features, const std::vector<std::size_t>& labels, std::size_t n_classes,
               double alpha) { return PrototypeBank::from_features(from_numpy(features), labels, n_classes, alpha); },
            py::arg("features"), py::arg("labels"), py::arg("n_classes"), py::arg("alpha"))
        .def(
            "ema_update",
            [](PrototypeBank& bank, const py::array_t<double>& features, const std::vector<std::size_t>& labels) {
                bank.ema_update(batch_class_means(from_numpy(features), labels));
            },
            py::arg("features"), py::arg("labels"))
        .def(
            "similarity_scores",
            [](const PrototypeBank& bank, const Vector& f, double t2, SimilarityMode mode) {
                return bank.similarity_scores(f, Temperature(t2), mode);
            },
            py::arg("feature"), py::arg("t2") = 1.0, py::arg("mode") = SimilarityMode::normalized)
        .def_property_readonly("n_classes", &PrototypeBank::n_classes)
        .def_property_readonly("dim", &PrototypeBank::dim)
        .def_property_readonly("alpha", &PrototypeBank::alpha)
        .def_property_readonly("prototypes", [](const PrototypeBank& b) { return to_numpy(b.prototypes()); })
        .def("is_initialized", &PrototypeBank::is_initialized)
        .def("save_text", &PrototypeBank::save_text)
        .def("save_binary", &PrototypeBank::save_binary)
        .def_static("load_text", &PrototypeBank::load_text)
        .def_static("load_binary", &PrototypeBank::load_binary)
        .def(py::self == py::self);

    py::class_<MlpModel>(m, "MlpModel")
        .def(
            "predict_proba", [](const MlpModel& model, const Vector& x) { return model.forward(x).probabilities; },
            py::arg("x"))
        .def("feature", [](const MlpModel& model, const Vector& x) { return model.forward(x).feature; }, py::arg("x"))
        .def("predict", &MlpModel::predict, py::arg("x"))
        .def_property_readonly("parameter_count", &MlpModel::parameter_count)
        .def("save_text", &MlpModel::save_text)
        .def("save_binary", &MlpModel::save_binary)
        .def_static("load_text", &MlpModel::load_text)
        .def_static("load_binary", &MlpModel::load_binary);

    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("n_classes", &SyntheticSpec::n_classes)
        .def_readwrite("n_super_groups", &SyntheticSpec::n_super_groups)
        .def_readwrite("input_dim", &SyntheticSpec::input_dim)
        .def_readwrite("group_spread", &SyntheticSpec::group_spread)
        .def_readwrite("intra_noise_sigma", &SyntheticSpec::intra_noise_sigma)
        .def_readwrite("samples_per_class_train", &SyntheticSpec::samples_per_class_train)
        .def_readwrite("samples_per_class_test", &SyntheticSpec::samples_per_class_test)
        .def_readwrite("mislabel_rate", &SyntheticSpec::mislabel_rate)
        .def_readwrite("mislabel_mode", &SyntheticSpec::mislabel_mode)
        .def_readwrite("seed", &SyntheticSpec::seed)
        .def("group_of", &SyntheticSpec::group_of);

    py::class_<Sample>(m, "Sample")
        .def_readonly("x", &Sample::x)
        .def_readonly("true_class", &Sample::true_class)
        .def_readonly("observed_class", &Sample::observed_class);

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("n_classes", &Dataset::n_classes)
        .def_readonly("input_dim", &Dataset::input_dim)
        .def_readonly("samples", &Dataset::samples)
        .def("__len__", &Dataset::size)
        .def("corrupted_count", &Dataset::corrupted_count)
        .def_property_readonly("x",
                               [](const Dataset& d) {
                                   Matrix x(d.size(), d.input_dim);
                                   for (std::size_t i = 0; i < d.size(); ++i) {
                                       std::copy(d.samples[i].x.begin(), d.samples[i].x.end(), x.row(i).begin());
                                   }
                                   return to_numpy(x);
                               })
        .def(py::self == py::self);

    m.def(
        "generate",
        [](const SyntheticSpec& spec) {
            GeneratedData g = generate(spec);
            return py::make_tuple(g.train, g.test);
        },
        py::arg("spec") = SyntheticSpec{}, "Returns (train, test) datasets.");
    m.def("save_csv", &save_csv, py::arg("data"), py::arg("path"));
    m.def("load_csv", &load_csv, py::arg("path"), py::arg("n_classes") = 0);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("strategy", &TrainConfig::strategy)
        .def_readwrite("beta", &TrainConfig::beta)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("t1", &TrainConfig::t1)
        .def_readwrite("t2", &TrainConfig::t2)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("momentum", &TrainConfig::momentum)
        .def_readwrite("weight_decay", &TrainConfig::weight_decay)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("smoothing_epsilon", &TrainConfig::smoothing_epsilon)
        .def_readwrite("normalize_enhanced_target", &TrainConfig::normalize_enhanced_target)
        .def_readwrite("score_before_update", &TrainConfig::score_before_update)
        .def_readwrite("cosine_mode", &TrainConfig::cosine_mode)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("hidden_dims", &TrainConfig::hidden_dims)
        .def_readwrite("feature_dim", &TrainConfig::feature_dim)
        .def_readwrite("record_wall_clock", &TrainConfig::record_wall_clock)
        .def("validate", &TrainConfig::validate);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("model", &TrainResult::model)
        .def_readonly("bank", &TrainResult::bank)
        .def_property_readonly("metrics", [](const TrainResult& r) {
            py::list rows;
            for (const auto& e : r.log.rows) {
                py::dict d;
                d["epoch"] = e.epoch;
                d["train_loss"] = e.train_loss;
                d["train_accuracy"] = e.train_accuracy;
                d["test_accuracy"] = e.test_accuracy;
                d["prototype_drift"] = e.prototype_drift;
                d["wall_seconds"] = e.wall_seconds;
                rows.append(d);
            }
            return rows;
        });

    m.def("train", &train, py::arg("config"), py::arg("train_set"), py::arg("test_set"),
          py::call_guard<py::gil_scoped_release>());
    m.def("evaluate", &evaluate, py::arg("model"), py::arg("data"));
    m.def(
        "similarity_profile",
        [](const MlpModel& model, const PrototypeBank& bank, const Dataset& data, double t2, SimilarityMode mode) {
            return to_numpy(similarity_profile(model, bank, data, Temperature(t2), mode));
        },
        py::arg("model"), py::arg("bank"), py::arg("data"), py::arg("t2") = 1.0,
        py::arg("mode") = SimilarityMode::normalized);
    m.def(
        "run_beta_sweep",
        [](const TrainConfig& config, const std::vector<double>& betas, const Dataset& tr, const Dataset& te) {
            std::vector<py::tuple> rows;
            for (const auto& r : run_beta_sweep(config, betas, tr, te)) {
                rows.push_back(py::make_tuple(r.beta, r.test_accuracy, r.error));
            }
            return rows;
        },
        py::arg("config"), py::arg("betas"), py::arg("train_set"), py::arg("test_set"),
        "Returns a list of (beta, test_accuracy, error) tuples sorted by beta.");
    m.def(
        "gradcheck",
        [](std::uint64_t seed, double beta) {
            py::dict out;
            for (const auto& g : gradcheck_toy_model(seed, beta).groups) out[py::str(g.name)] = g.max_rel_error;
            return out;
        },
        py::arg("seed") = 1, py::arg("beta") = 6.0, "Max relative error per parameter group.");
    m.def(
        "parse_config",
        [](const std::string& text, const std::vector<std::string>& overrides) {
            const ExperimentConfig c = parse_config_text(text, overrides);
            return py::make_tuple(c.train, c.data);
        },
        py::arg("text") = "", py::arg("overrides") = std::vector<std::string>{},
        "Parses key=value text into (TrainConfig, SyntheticSpec).");
}
