#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "pel/mathcore.hpp"

namespace pel {

/// Arithmetic mean of the features of one class within a batch.
struct ClassMean {
    Vector mean;
    std::size_t count = 0;
};

/// Per-class means of a batch. Classes absent from the batch have no entry.
using ClassMeanSet = std::map<std::size_t, ClassMean>;

/// How instance/prototype similarity is scored.
enum class SimilarityMode {
    normalized,  // cosine: prototype rows are L2-normalized at scoring time
    raw_dot,     // plain matrix-vector product with the stored rows
};

/// Groups (L2-normalized) features by label and averages each group.
/// `features` holds one feature per row; `labels[i]` is the class of row i.
ClassMeanSet batch_class_means(const Matrix& features, std::span<const std::size_t> labels);

/// The per-class prototype matrix, one row per class, updated by an
/// exponential moving average of batch class means. Prototypes never take
/// part in gradient-based optimization.
class PrototypeBank {
public:
    PrototypeBank(std::size_t n_classes, std::size_t dim, double alpha);

    /// Row n = mean of every feature labelled n. Classes without samples keep
    /// a zero row and stay uninitialized.
    static PrototypeBank from_features(const Matrix& features, std::span<const std::size_t> labels,
                                       std::size_t n_classes, double alpha);

    /// P_n <- P_n + alpha (F_n - P_n) for every class present in `means`.
    /// An uninitialized row is overwritten by F_n directly.
    void ema_update(const ClassMeanSet& means);

    /// softmax(s / t2) with s_n the similarity between row n and `feature`.
    /// Uninitialized (or zero) rows score 0. Requires at least one
    /// initialized row.
    Vector similarity_scores(std::span<const double> feature, Temperature t2,
                             SimilarityMode mode = SimilarityMode::normalized) const;

    std::size_t n_classes() const { return prototypes_.rows; }
    std::size_t dim() const { return prototypes_.cols; }
    double alpha() const { return alpha_; }
    bool is_initialized(std::size_t n) const { return initialized_.at(n); }
    std::size_t initialized_count() const;

    const Matrix& prototypes() const { return prototypes_; }
    std::span<const double> prototype(std::size_t n) const { return prototypes_.row(n); }

    /// Overwrites one row and marks it initialized.
    void set_prototype(std::size_t n, std::span<const double> row);

    // Text dump: header line, "N D alpha", mask line, N rows of D values at
    // 17 significant digits. Round-trips bit-exactly.
    void save_text(const std::filesystem::path& path) const;
    static PrototypeBank load_text(const std::filesystem::path& path);

    // Binary dump: magic, N, D (uint64), alpha, mask bytes, row-major doubles.
    void save_binary(const std::filesystem::path& path) const;
    static PrototypeBank load_binary(const std::filesystem::path& path);

    bool operator==(const PrototypeBank&) const = default;

private:
    Matrix prototypes_;
    double alpha_;
    std::vector<std::uint8_t> initialized_;
};

/// Frobenius norm of the difference of two equally shaped banks.
double prototype_drift(const PrototypeBank& before, const PrototypeBank& after);

}  // namespace pel
