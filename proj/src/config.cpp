#include "pel/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>

#include "io_util.hpp"

namespace pel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// A setter returns an empty string on success, or the expected type name.
using Setter = std::function<std::string(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeySpec {
    std::string name;
    Setter set;
    Getter get;
};

template <typename T>
KeySpec real_key(std::string name, T ExperimentConfig::*group, double T::*field) {
    return {std::move(name),
            [group, field](ExperimentConfig& c, std::string_view v) {
                return io::parse_double(v, c.*group.*field) ? "" : "real number";
            },
            [group, field](const ExperimentConfig& c) { return io::format_double(c.*group.*field); }};
}

template <typename T, typename Int>
KeySpec int_key(std::string name, T ExperimentConfig::*group, Int T::*field) {
    return {std::move(name),
            [group, field](ExperimentConfig& c, std::string_view v) {
                return io::parse_int(v, c.*group.*field) ? "" : "nonnegative integer";
            },
            [group, field](const ExperimentConfig& c) { return std::to_string(c.*group.*field); }};
}

KeySpec bool_key(std::string name, bool TrainConfig::*field) {
    return {std::move(name),
            [field](ExperimentConfig& c, std::string_view v) -> std::string {
                if (v == "true" || v == "1") {
                    c.train.*field = true;
                } else if (v == "false" || v == "0") {
                    c.train.*field = false;
                } else {
                    return "boolean (true/false)";
                }
                return "";
            },
            [field](const ExperimentConfig& c) { return std::string(c.train.*field ? "true" : "false"); }};
}

template <typename Enum>
KeySpec enum_key(std::string name, std::function<Enum&(ExperimentConfig&)> ref, Enum (*parse)(const std::string&),
                 std::string (*show)(Enum), std::string expected) {
    return {std::move(name),
            [ref, parse, expected](ExperimentConfig& c, std::string_view v) -> std::string {
                try {
                    ref(c) = parse(std::string(v));
                } catch (const std::invalid_argument&) {
                    return expected;
                }
                return "";
            },
            [ref, show](const ExperimentConfig& c) { return show(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <typename T>
std::string parse_list(std::string_view v, std::vector<T>& out) {
    std::vector<T> values;
    if (!trim(v).empty()) {
        for (auto part : io::split(v, ',')) {
            T x{};
            bool ok;
            if constexpr (std::is_floating_point_v<T>) {
                ok = io::parse_double(part, x);
            } else {
                ok = io::parse_int(part, x);
            }
            if (!ok) return std::is_floating_point_v<T> ? "comma-separated real list" : "comma-separated integer list";
            values.push_back(x);
        }
    }
    out = std::move(values);
    return "";
}

template <typename T>
std::string render_list(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += io::format_double(values[i]);
        } else {
            out += std::to_string(values[i]);
        }
    }
    return out;
}

const std::vector<KeySpec>& key_table() {
    using C = ExperimentConfig;
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t;
        t.push_back(enum_key<Strategy>(
            "strategy", [](C& c) -> Strategy& { return c.train.strategy; }, strategy_from_string,
            static_cast<std::string (*)(Strategy)>(to_string), "one of pel, onehot_ce, label_smoothing"));
        t.push_back(real_key("beta", &C::train, &TrainConfig::beta));
        t.push_back(real_key("alpha", &C::train, &TrainConfig::alpha));
        t.push_back(real_key("t1", &C::train, &TrainConfig::t1));
        t.push_back(real_key("t2", &C::train, &TrainConfig::t2));
        t.push_back(real_key("lr", &C::train, &TrainConfig::lr));
        t.push_back(real_key("momentum", &C::train, &TrainConfig::momentum));
        t.push_back(real_key("weight_decay", &C::train, &TrainConfig::weight_decay));
        t.push_back(int_key("batch_size", &C::train, &TrainConfig::batch_size));
        t.push_back(int_key("epochs", &C::train, &TrainConfig::epochs));
        t.push_back(real_key("smoothing_epsilon", &C::train, &TrainConfig::smoothing_epsilon));
        t.push_back(bool_key("normalize_enhanced_target", &TrainConfig::normalize_enhanced_target));
        t.push_back(bool_key("score_before_update", &TrainConfig::score_before_update));
        t.push_back(enum_key<SimilarityMode>(
            "cosine_mode", [](C& c) -> SimilarityMode& { return c.train.cosine_mode; }, similarity_mode_from_string,
            static_cast<std::string (*)(SimilarityMode)>(to_string), "one of normalized, raw_dot"));
        t.push_back(int_key("seed", &C::train, &TrainConfig::seed));
        t.push_back({"hidden_dims",
                     [](C& c, std::string_view v) { return parse_list(v, c.train.hidden_dims); },
                     [](const C& c) { return render_list(c.train.hidden_dims); }});
        t.push_back(int_key("feature_dim", &C::train, &TrainConfig::feature_dim));
        t.push_back(bool_key("record_wall_clock", &TrainConfig::record_wall_clock));

        t.push_back(int_key("n_classes", &C::data, &SyntheticSpec::n_classes));
        t.push_back(int_key("input_dim", &C::data, &SyntheticSpec::input_dim));
        t.push_back(int_key("n_super_groups", &C::data, &SyntheticSpec::n_super_groups));
        t.push_back(real_key("group_spread", &C::data, &SyntheticSpec::group_spread));
        t.push_back(real_key("intra_noise_sigma", &C::data, &SyntheticSpec::intra_noise_sigma));
        t.push_back(int_key("samples_per_class_train", &C::data, &SyntheticSpec::samples_per_class_train));
        t.push_back(int_key("samples_per_class_test", &C::data, &SyntheticSpec::samples_per_class_test));
        t.push_back(real_key("mislabel_rate", &C::data, &SyntheticSpec::mislabel_rate));
        t.push_back(enum_key<NoiseMode>(
            "mislabel_mode", [](C& c) -> NoiseMode& { return c.data.mislabel_mode; }, noise_mode_from_string,
            static_cast<std::string (*)(NoiseMode)>(to_string), "one of uniform, sibling"));
        t.push_back(int_key("data_seed", &C::data, &SyntheticSpec::seed));

        t.push_back({"betas", [](C& c, std::string_view v) { return parse_list(v, c.betas); },
                     [](const C& c) { return render_list(c.betas); }});
        t.push_back({"noise_rates", [](C& c, std::string_view v) { return parse_list(v, c.noise_rates); },
                     [](const C& c) { return render_list(c.noise_rates); }});
        t.push_back({"replicates",
                     [](C& c, std::string_view v) { return io::parse_int(v, c.replicates) ? "" : "nonnegative integer"; },
                     [](const C& c) { return std::to_string(c.replicates); }});
        return t;
    }();
    return table;
}

void apply(ExperimentConfig& config, std::string_view entry, std::size_t line) {
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError(std::string(trim(entry)), line, "expected key=value");
    }
    const std::string key(trim(entry.substr(0, eq)));
    const std::string_view value = trim(entry.substr(eq + 1));
    if (key.empty()) throw ConfigError(key, line, "empty key");
    for (const auto& spec : key_table()) {
        if (spec.name != key) continue;
        const std::string expected = spec.set(config, value);
        if (!expected.empty()) {
            throw ConfigError(key, line, "type mismatch: '" + std::string(value) + "' is not a " + expected);
        }
        return;
    }
    throw ConfigError(key, line, "unknown key");
}

}  // namespace

ConfigError::ConfigError(std::string key, std::size_t line, const std::string& message)
    : std::runtime_error(key.empty() ? message
                                     : (line ? "line " + std::to_string(line) + ": " : std::string("override: ")) +
                                           "key '" + key + "': " + message),
      key_(std::move(key)),
      line_(line) {}

ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        apply(config, line, line_no);
    }
    for (const auto& entry : overrides) apply(config, entry, 0);
    return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), overrides);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& spec : key_table()) keys.push_back(spec.name);
    return keys;
}

std::string render_config(const ExperimentConfig& config) {
    std::string out;
    for (const auto& spec : key_table()) out += spec.name + "=" + spec.get(config) + "\n";
    return out;
}

}  // namespace pel
