#include "pel/prototype_bank.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "io_util.hpp"

namespace pel {

namespace {

constexpr std::string_view kTextMagic = "pel-prototype-bank v1";
constexpr char kBinaryMagic[8] = {'P', 'E', 'L', 'B', 'A', 'N', 'K', '1'};

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw NumericError("prototype bank momentum alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

}  // namespace

ClassMeanSet batch_class_means(const Matrix& features, std::span<const std::size_t> labels) {
    if (features.rows == 0) throw NumericError("batch_class_means: empty batch");
    if (labels.size() != features.rows) throw NumericError("batch_class_means: label count does not match batch size");
    ClassMeanSet means;
    for (std::size_t i = 0; i < features.rows; ++i) {
        auto& entry = means[labels[i]];
        if (entry.mean.empty()) entry.mean.assign(features.cols, 0.0);
        const auto f = features.row(i);
        for (std::size_t d = 0; d < features.cols; ++d) entry.mean[d] += f[d];
        ++entry.count;
    }
    for (auto& [cls, entry] : means) {
        const double inv = 1.0 / static_cast<double>(entry.count);
        for (double& x : entry.mean) x *= inv;
    }
    return means;
}

PrototypeBank::PrototypeBank(std::size_t n_classes, std::size_t dim, double alpha)
    : prototypes_(n_classes, dim), alpha_(alpha), initialized_(n_classes, 0) {
    check_alpha(alpha);
    if (n_classes == 0 || dim == 0) throw NumericError("prototype bank needs at least one class and one dimension");
}

PrototypeBank PrototypeBank::from_features(const Matrix& features, std::span<const std::size_t> labels,
                                           std::size_t n_classes, double alpha) {
    if (features.rows == 0) throw NumericError("cannot initialize a prototype bank from an empty feature list");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) {
            throw NumericError("class index " + std::to_string(labels[i]) + " out of range at row " + std::to_string(i));
        }
    }
    PrototypeBank bank(n_classes, features.cols, alpha);
    for (const auto& [cls, entry] : batch_class_means(features, labels)) bank.set_prototype(cls, entry.mean);
    return bank;
}

void PrototypeBank::ema_update(const ClassMeanSet& means) {
    for (const auto& [cls, entry] : means) {
        if (cls >= n_classes()) throw NumericError("ema_update: class index " + std::to_string(cls) + " out of range");
        if (entry.mean.size() != dim()) throw NumericError("ema_update: feature dimension mismatch");
    }
    for (const auto& [cls, entry] : means) {
        auto row = prototypes_.row(cls);
        if (!initialized_[cls]) {
            std::copy(entry.mean.begin(), entry.mean.end(), row.begin());
            initialized_[cls] = 1;
            continue;
        }
        for (std::size_t d = 0; d < row.size(); ++d) row[d] += alpha_ * (entry.mean[d] - row[d]);
    }
}

Vector PrototypeBank::similarity_scores(std::span<const double> feature, Temperature t2, SimilarityMode mode) const {
    if (feature.size() != dim()) throw NumericError("similarity_scores: feature dimension mismatch");
    if (initialized_count() == 0) throw NumericError("similarity_scores: prototype bank has no initialized class");
    Vector scores(n_classes(), 0.0);
    for (std::size_t n = 0; n < n_classes(); ++n) {
        if (!initialized_[n]) continue;
        const auto row = prototypes_.row(n);
        const double s = dot(row, feature);
        if (mode == SimilarityMode::raw_dot) {
            scores[n] = s;
        } else {
            const double norm = l2_norm(row);
            scores[n] = norm > 0.0 ? s / norm : 0.0;
        }
    }
    return tempered_softmax(scores, t2);
}

std::size_t PrototypeBank::initialized_count() const {
    std::size_t count = 0;
    for (auto flag : initialized_) count += flag ? 1 : 0;
    return count;
}

void PrototypeBank::set_prototype(std::size_t n, std::span<const double> row) {
    if (n >= n_classes()) throw NumericError("set_prototype: class index out of range");
    if (row.size() != dim()) throw NumericError("set_prototype: dimension mismatch");
    for (double x : row) {
        if (!std::isfinite(x)) throw NumericError("set_prototype: non-finite entry");
    }
    std::copy(row.begin(), row.end(), prototypes_.row(n).begin());
    initialized_[n] = 1;
}

void PrototypeBank::save_text(const std::filesystem::path& path) const {
    auto os = io::open_out(path.string(), false);
    os << kTextMagic << '\n' << n_classes() << ' ' << dim() << ' ' << io::format_double(alpha_) << '\n';
    for (std::size_t n = 0; n < n_classes(); ++n) os << (n ? " " : "") << int(initialized_[n]);
    os << '\n';
    for (std::size_t n = 0; n < n_classes(); ++n) {
        const auto row = prototypes_.row(n);
        for (std::size_t d = 0; d < dim(); ++d) os << (d ? " " : "") << io::format_double(row[d]);
        os << '\n';
    }
    if (!os) throw io::FormatError("failed writing '" + path.string() + "'");
}

PrototypeBank PrototypeBank::load_text(const std::filesystem::path& path) {
    auto is = io::open_in(path.string(), false);
    std::string line;
    if (!std::getline(is, line) || line != kTextMagic) {
        throw io::FormatError(path.string() + ": missing prototype bank header");
    }
    std::string token;
    auto next = [&](const char* what) {
        if (!(is >> token)) throw io::FormatError(path.string() + ": truncated while reading " + what);
        return std::string_view(token);
    };
    std::size_t n = 0, d = 0;
    double alpha = 0.0;
    if (!io::parse_int(next("N"), n) || !io::parse_int(next("D"), d) || !io::parse_double(next("alpha"), alpha)) {
        throw io::FormatError(path.string() + ": malformed shape line");
    }
    PrototypeBank bank(n, d, alpha);
    for (std::size_t k = 0; k < n; ++k) {
        int flag = 0;
        if (!io::parse_int(next("mask"), flag) || (flag != 0 && flag != 1)) {
            throw io::FormatError(path.string() + ": malformed mask entry");
        }
        bank.initialized_[k] = static_cast<std::uint8_t>(flag);
    }
    for (double& x : bank.prototypes_.data) {
        if (!io::parse_double(next("values"), x)) throw io::FormatError(path.string() + ": malformed value");
    }
    return bank;
}

void PrototypeBank::save_binary(const std::filesystem::path& path) const {
    auto os = io::open_out(path.string(), true);
    os.write(kBinaryMagic, sizeof(kBinaryMagic));
    io::write_pod<std::uint64_t>(os, n_classes());
    io::write_pod<std::uint64_t>(os, dim());
    io::write_pod<double>(os, alpha_);
    os.write(reinterpret_cast<const char*>(initialized_.data()), static_cast<std::streamsize>(initialized_.size()));
    io::write_doubles(os, prototypes_.data);
    if (!os) throw io::FormatError("failed writing '" + path.string() + "'");
}

PrototypeBank PrototypeBank::load_binary(const std::filesystem::path& path) {
    auto is = io::open_in(path.string(), true);
    char magic[sizeof(kBinaryMagic)] = {};
    if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kBinaryMagic)) {
        throw io::FormatError(path.string() + ": not a binary prototype bank");
    }
    const auto n = io::read_pod<std::uint64_t>(is);
    const auto d = io::read_pod<std::uint64_t>(is);
    const auto alpha = io::read_pod<double>(is);
    PrototypeBank bank(n, d, alpha);
    if (!is.read(reinterpret_cast<char*>(bank.initialized_.data()), static_cast<std::streamsize>(n))) {
        throw io::FormatError(path.string() + ": truncated mask");
    }
    io::read_doubles(is, bank.prototypes_.data);
    return bank;
}

double prototype_drift(const PrototypeBank& before, const PrototypeBank& after) {
    const auto& a = before.prototypes();
    const auto& b = after.prototypes();
    if (a.rows != b.rows || a.cols != b.cols) throw NumericError("prototype_drift: bank shapes differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double diff = b.data[i] - a.data[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

}  // namespace pel
