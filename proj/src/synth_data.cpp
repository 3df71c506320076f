#include "pel/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "io_util.hpp"

namespace pel {

namespace {

Vector random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    while (true) {
        Vector v(dim);
        for (double& x : v) x = normal(rng);
        if (l2_norm(v) > 1e-12) return l2_normalize(v);
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Nearest other class center of every class must be a group sibling.
void check_group_structure(const SyntheticSpec& spec, const Matrix& centers) {
    if (spec.classes_per_group() < 2) return;
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        std::size_t nearest = c;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < spec.n_classes; ++o) {
            if (o == c) continue;
            const double d = squared_distance(centers.row(c), centers.row(o));
            if (d < best) {
                best = d;
                nearest = o;
            }
        }
        if (spec.group_of(nearest) != spec.group_of(c)) {
            throw SpecError("group_spread", "class " + std::to_string(c) + " is nearer to class " +
                                                std::to_string(nearest) + " of another group; reduce group_spread");
        }
    }
}

}  // namespace

std::string to_string(NoiseMode mode) { return mode == NoiseMode::uniform ? "uniform" : "sibling"; }

NoiseMode noise_mode_from_string(const std::string& text) {
    if (text == "uniform") return NoiseMode::uniform;
    if (text == "sibling") return NoiseMode::sibling;
    throw std::invalid_argument("unknown noise mode '" + text + "' (expected uniform or sibling)");
}

void SyntheticSpec::validate() const {
    if (n_classes < 2) throw SpecError("n_classes", "need at least two classes");
    if (input_dim == 0) throw SpecError("input_dim", "must be positive");
    if (n_super_groups == 0) throw SpecError("n_super_groups", "must be positive");
    if (n_classes % n_super_groups != 0) {
        throw SpecError("n_super_groups", "n_classes (" + std::to_string(n_classes) + ") is not divisible by " +
                                              std::to_string(n_super_groups));
    }
    if (!(group_spread > 0.0) || !std::isfinite(group_spread)) throw SpecError("group_spread", "must be positive");
    if (!(intra_noise_sigma >= 0.0) || !std::isfinite(intra_noise_sigma)) {
        throw SpecError("intra_noise_sigma", "must be nonnegative");
    }
    if (samples_per_class_train == 0) throw SpecError("samples_per_class_train", "must be positive");
    if (samples_per_class_test == 0) throw SpecError("samples_per_class_test", "must be positive");
    if (!(mislabel_rate >= 0.0 && mislabel_rate < 1.0)) throw SpecError("mislabel_rate", "must lie in [0, 1)");
    if (mislabel_mode == NoiseMode::sibling && mislabel_rate > 0.0 && classes_per_group() < 2) {
        throw SpecError("mislabel_mode", "sibling corruption needs at least two classes per group");
    }
}

std::size_t Dataset::corrupted_count() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const Sample& s) {
        return s.observed_class != s.true_class;
    }));
}

GeneratedData generate(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    std::vector<Vector> group_centers;
    for (std::size_t g = 0; g < spec.n_super_groups; ++g) group_centers.push_back(random_unit(rng, spec.input_dim));

    GeneratedData out;
    out.class_centers = Matrix(spec.n_classes, spec.input_dim);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        const Vector offset = random_unit(rng, spec.input_dim);
        const Vector& group = group_centers[spec.group_of(c)];
        auto row = out.class_centers.row(c);
        for (std::size_t d = 0; d < spec.input_dim; ++d) row[d] = group[d] + spec.group_spread * offset[d];
    }
    check_group_structure(spec, out.class_centers);

    std::normal_distribution<double> noise(0.0, 1.0);
    auto draw = [&](Split split, std::size_t per_class) {
        Dataset ds{split, spec.n_classes, spec.input_dim, {}};
        ds.samples.reserve(per_class * spec.n_classes);
        for (std::size_t c = 0; c < spec.n_classes; ++c) {
            const auto center = out.class_centers.row(c);
            for (std::size_t k = 0; k < per_class; ++k) {
                Sample s{Vector(center.begin(), center.end()), c, c};
                if (spec.intra_noise_sigma > 0.0) {
                    for (double& x : s.x) x += spec.intra_noise_sigma * noise(rng);
                }
                ds.samples.push_back(std::move(s));
            }
        }
        return ds;
    };
    out.train = draw(Split::train, spec.samples_per_class_train);
    out.test = draw(Split::test, spec.samples_per_class_test);
    if (spec.mislabel_rate > 0.0) {
        out.train = inject_label_noise(out.train, spec.mislabel_rate, mix_seed(spec.seed, 1), spec.mislabel_mode,
                                       spec.classes_per_group());
    }
    return out;
}

Dataset inject_label_noise(const Dataset& data, double rate, std::uint64_t seed, NoiseMode mode,
                           std::size_t group_size) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("label noise rate must lie in [0, 1)");
    Dataset out = data;
    const auto n_corrupt = static_cast<std::size_t>(std::llround(rate * static_cast<double>(data.size())));
    if (n_corrupt == 0) return out;
    if (data.n_classes < 2) throw std::invalid_argument("label noise needs at least two classes");
    if (mode == NoiseMode::sibling && (group_size < 2 || data.n_classes % group_size != 0)) {
        throw std::invalid_argument("sibling label noise needs a group size >= 2 dividing the class count");
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < n_corrupt; ++k) {
        Sample& s = out.samples[order[k]];
        std::size_t first = 0, count = data.n_classes;
        if (mode == NoiseMode::sibling) {
            first = (s.true_class / group_size) * group_size;
            count = group_size;
        }
        // Uniform over the block of candidates minus the true class.
        std::uniform_int_distribution<std::size_t> pick(0, count - 2);
        std::size_t candidate = first + pick(rng);
        if (candidate >= s.true_class) ++candidate;
        s.observed_class = candidate;
    }
    return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    auto os = io::open_out(path.string(), false);
    os << "split,true_class,observed_class";
    for (std::size_t d = 0; d < data.input_dim; ++d) os << ",x" << d;
    os << '\n';
    const char* split = data.split == Split::train ? "train" : "test";
    for (const auto& s : data.samples) {
        os << split << ',' << s.true_class << ',' << s.observed_class;
        for (double x : s.x) os << ',' << io::format_double(x);
        os << '\n';
    }
    if (!os) throw CsvError("failed writing '" + path.string() + "'", 0);
}

Dataset load_csv(const std::filesystem::path& path, std::size_t n_classes) {
    std::ifstream is(path);
    if (!is) throw CsvError("cannot open '" + path.string() + "'", 0);
    std::string line;
    if (!std::getline(is, line) || line.empty()) throw CsvError("no header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = io::split(line, ',');
    if (header.size() < 3 || header[0] != "split" || header[1] != "true_class" || header[2] != "observed_class") {
        throw CsvError("no header (expected split,true_class,observed_class,x0,...)", 1);
    }
    Dataset ds;
    ds.input_dim = header.size() - 3;
    for (std::size_t d = 0; d < ds.input_dim; ++d) {
        if (header[3 + d] != "x" + std::to_string(d)) throw CsvError("unexpected column '" + std::string(header[3 + d]) + "'", 1);
    }
    std::size_t max_class = 0;
    std::size_t line_no = 1;
    bool split_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = io::split(line, ',');
        if (fields.size() != header.size()) {
            throw CsvError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                           line_no);
        }
        Split split;
        if (fields[0] == "train") {
            split = Split::train;
        } else if (fields[0] == "test") {
            split = Split::test;
        } else {
            throw CsvError("unknown split '" + std::string(fields[0]) + "'", line_no);
        }
        if (split_seen && split != ds.split) throw CsvError("mixed splits in one file", line_no);
        ds.split = split;
        split_seen = true;
        Sample s;
        if (!io::parse_int(fields[1], s.true_class) || !io::parse_int(fields[2], s.observed_class)) {
            throw CsvError("malformed class index", line_no);
        }
        s.x.resize(ds.input_dim);
        for (std::size_t d = 0; d < ds.input_dim; ++d) {
            if (!io::parse_double(fields[3 + d], s.x[d])) {
                throw CsvError("malformed value in column x" + std::to_string(d), line_no);
            }
        }
        max_class = std::max({max_class, s.true_class, s.observed_class});
        ds.samples.push_back(std::move(s));
    }
    ds.n_classes = n_classes ? n_classes : (ds.samples.empty() ? 0 : max_class + 1);
    if (n_classes && !ds.samples.empty() && max_class >= n_classes) {
        throw CsvError("class index " + std::to_string(max_class) + " exceeds class count", 0);
    }
    return ds;
}

}  // namespace pel
