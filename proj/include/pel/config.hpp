#pragma once

// Flat key=value experiment configuration with '#' comments. Every key has a
// default; unknown keys are rejected.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pel/synth_data.hpp"
#include "pel/trainer.hpp"

namespace pel {

struct ExperimentConfig {
    TrainConfig train;
    SyntheticSpec data;
    std::vector<double> betas{4.0, 6.0, 8.0};
    std::vector<double> noise_rates{0.0, 0.1, 0.2, 0.3};
    std::size_t replicates = 5;
};

class ConfigError : public std::runtime_error {
public:
    /// `line` is 0 for command-line overrides.
    ConfigError(std::string key, std::size_t line, const std::string& message);
    const std::string& key() const { return key_; }
    std::size_t line() const { return line_; }

private:
    std::string key_;
    std::size_t line_;
};

/// Parses config text then applies `overrides` ("key=value") in order.
ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});

/// Reads `path` (must exist) and delegates to parse_config_text.
ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Every recognized key, in documentation order.
std::vector<std::string> config_keys();

/// Renders a config as parseable key=value text.
std::string render_config(const ExperimentConfig& config);

}  // namespace pel
