#pragma once

// Synthetic ultra-fine-grained datasets: classes are arranged in groups of
// near-identical siblings around shared group centers.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pel/mathcore.hpp"

namespace pel {

/// How corrupted labels are drawn.
enum class NoiseMode {
    uniform,  // any wrong class
    sibling,  // a wrong class from the same group
};

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& text);

struct SyntheticSpec {
    std::size_t n_classes = 8;
    std::size_t input_dim = 64;
    std::size_t n_super_groups = 4;
    double group_spread = 0.3;
    double intra_noise_sigma = 0.08;
    std::size_t samples_per_class_train = 50;
    std::size_t samples_per_class_test = 50;
    double mislabel_rate = 0.0;
    NoiseMode mislabel_mode = NoiseMode::uniform;
    std::uint64_t seed = 7;

    std::size_t classes_per_group() const { return n_classes / n_super_groups; }
    std::size_t group_of(std::size_t cls) const { return cls / classes_per_group(); }

    /// Throws SpecError naming the first violated field.
    void validate() const;
};

class SpecError : public std::invalid_argument {
public:
    SpecError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class Split { train, test };

struct Sample {
    Vector x;
    std::size_t true_class = 0;
    std::size_t observed_class = 0;

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    Split split = Split::train;
    std::size_t n_classes = 0;
    std::size_t input_dim = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    std::size_t corrupted_count() const;

    bool operator==(const Dataset&) const = default;
};

struct GeneratedData {
    Dataset train;
    Dataset test;
    Matrix class_centers;  // n_classes x input_dim
};

/// Deterministic in `spec` (including its seed). Training labels are
/// corrupted according to spec.mislabel_rate / mislabel_mode.
GeneratedData generate(const SyntheticSpec& spec);

/// Corrupts exactly round(rate * n) rows; a corrupted row's observed class is
/// drawn uniformly from the classes other than its true class (restricted to
/// the same group of `group_size` consecutive classes in sibling mode).
Dataset inject_label_noise(const Dataset& data, double rate, std::uint64_t seed,
                           NoiseMode mode = NoiseMode::uniform, std::size_t group_size = 0);

class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& message, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Columns: split,true_class,observed_class,x0..x{d-1}; floats at 17 digits.
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Inverse of save_csv. The class count is taken as 1 + the largest class
/// index unless `n_classes` is given.
Dataset load_csv(const std::filesystem::path& path, std::size_t n_classes = 0);

}  // namespace pel
