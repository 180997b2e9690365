#include "cfn/data.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "cfn/error.hpp"
#include "cfn/io.hpp"
#include "cfn/rng.hpp"

namespace cfn {

std::vector<int> Dataset::labels() const {
    if (task == Task::Regression) throw ArgumentError("dataset: regression has no class labels");
    std::vector<int> out(y.rows());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        out[r] = task == Task::Binary ? static_cast<int>(y(r, 0))
                                      : static_cast<int>(argmax_row(y, r));
    }
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    try {
        return parse_double(cell);
    } catch (const ArgumentError&) {
        throw IoError("csv: row " + std::to_string(row) + ", column '" + column +
                      "': not a number: '" + cell + "'");
    }
}

} // namespace

Dataset load_csv(const std::string& path, const std::string& target_column, Task task) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("csv: " + path + " is empty");
    const std::vector<std::string> header = split_line(line);

    std::size_t target_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == target_column) target_idx = i;
    }
    if (target_idx == header.size()) {
        throw IoError("csv: " + path + " has no column '" + target_column + "'");
    }

    Dataset ds;
    ds.task = task;
    ds.target_name = target_column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != target_idx) ds.feature_names.push_back(header[i]);
    }

    std::vector<double> features;
    std::vector<double> targets;
    std::size_t rows = 0;
    std::size_t row_number = 1; // header is row 1
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw IoError("csv: row " + std::to_string(row_number) + " has " +
                          std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double v = parse_cell(cells[i], row_number, header[i]);
            if (i == target_idx) {
                targets.push_back(v);
            } else {
                features.push_back(v);
            }
        }
        ++rows;
    }
    if (rows == 0) throw IoError("csv: " + path + " has no data rows");

    ds.x = Matrix(rows, header.size() - 1, std::move(features));

    switch (task) {
    case Task::Regression:
        ds.y = Matrix(rows, 1, std::move(targets));
        break;
    case Task::Binary:
        for (std::size_t r = 0; r < rows; ++r) {
            if (targets[r] != 0.0 && targets[r] != 1.0) {
                throw IoError("csv: row " + std::to_string(r + 2) + ": binary target is " +
                              format_double(targets[r]) + ", expected 0 or 1");
            }
        }
        ds.y = Matrix(rows, 1, std::move(targets));
        break;
    case Task::Multiclass: {
        std::vector<int> labels(rows);
        int max_label = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double v = targets[r];
            if (v < 0.0 || v != std::floor(v)) {
                throw IoError("csv: row " + std::to_string(r + 2) + ": class label is " +
                              format_double(v) + ", expected a non-negative integer");
            }
            labels[r] = static_cast<int>(v);
            max_label = std::max(max_label, labels[r]);
        }
        ds.y = one_hot(labels, static_cast<std::size_t>(max_label) + 1);
        break;
    }
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    if (ds.feature_names.size() != ds.x.cols()) {
        throw ShapeError("save_csv: " + std::to_string(ds.feature_names.size()) +
                         " feature names for " + std::to_string(ds.x.cols()) + " columns");
    }
    std::string out;
    for (const auto& name : ds.feature_names) out += name + ",";
    out += ds.target_name + "\n";
    const std::vector<int> labels =
        ds.task == Task::Regression ? std::vector<int>{} : ds.labels();
    for (std::size_t r = 0; r < ds.x.rows(); ++r) {
        for (std::size_t c = 0; c < ds.x.cols(); ++c) {
            out += format_double(ds.x(r, c)) + ",";
        }
        if (ds.task == Task::Regression) {
            out += format_double(ds.y(r, 0));
        } else {
            out += std::to_string(labels[r]);
        }
        out += "\n";
    }
    write_file_atomic(path, out);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw ArgumentError("split: test_fraction must be in (0, 1)");
    }
    const std::size_t n = ds.size();
    if (n < 2) throw ArgumentError("split: need at least 2 rows, have " + std::to_string(n));
    const auto train_n = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * (1.0 - test_fraction)));
    if (train_n == 0 || train_n == n) {
        throw ArgumentError("split: fraction " + format_double(test_fraction) + " of " +
                            std::to_string(n) + " rows leaves an empty side");
    }

    Rng rng(seed);
    const std::vector<std::size_t> order = rng.permutation(n);

    const auto take = [&](std::size_t begin, std::size_t end) {
        Dataset part;
        part.feature_names = ds.feature_names;
        part.target_name = ds.target_name;
        part.task = ds.task;
        part.x = Matrix(end - begin, ds.x.cols());
        part.y = Matrix(end - begin, ds.y.cols());
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t c = 0; c < ds.x.cols(); ++c) part.x(i - begin, c) = ds.x(order[i], c);
            for (std::size_t c = 0; c < ds.y.cols(); ++c) part.y(i - begin, c) = ds.y(order[i], c);
        }
        return part;
    };
    return {take(0, train_n), take(train_n, n)};
}

Scaler fit_scaler(const Matrix& train_x) {
    if (train_x.rows() == 0) throw ArgumentError("fit_scaler: empty training data");
    const auto n = static_cast<double>(train_x.rows());
    Scaler s;
    s.means.assign(train_x.cols(), 0.0);
    s.stds.assign(train_x.cols(), 0.0);
    for (std::size_t c = 0; c < train_x.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < train_x.rows(); ++r) sum += train_x(r, c);
        s.means[c] = sum / n;
        double sq = 0.0;
        for (std::size_t r = 0; r < train_x.rows(); ++r) {
            const double d = train_x(r, c) - s.means[c];
            sq += d * d;
        }
        s.stds[c] = std::sqrt(sq / n);
        if (s.stds[c] == 0.0) {
            std::cerr << "warning: feature column " << c << " is constant; std set to 1\n";
            s.stds[c] = 1.0;
        }
    }
    return s;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& x) {
    if (x.cols() != scaler.means.size()) {
        throw ShapeError("apply_scaler: " + std::to_string(x.cols()) + " columns vs scaler for " +
                         std::to_string(scaler.means.size()));
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            out(r, c) = (x(r, c) - scaler.means[c]) / scaler.stds[c];
        }
    }
    return out;
}

Dataset gen_shm(std::size_t n, double amplitude, double omega, double phi, double noise_sd,
                double t_lo, double t_hi, std::uint64_t seed) {
    if (n < 2) throw ArgumentError("gen_shm: need n >= 2");
    if (noise_sd < 0.0) throw ArgumentError("gen_shm: noise_sd must be >= 0");
    Dataset ds;
    ds.feature_names = {"t"};
    ds.target_name = "x";
    ds.task = Task::Regression;
    ds.x = Matrix(n, 1);
    ds.y = Matrix(n, 1);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform(t_lo, t_hi);
        ds.x(i, 0) = t;
        ds.y(i, 0) = amplitude * std::sin(omega * t + phi) + rng.normal(0.0, noise_sd);
    }
    return ds;
}

Dataset gen_spiral(std::size_t n_per_class, std::size_t classes, double noise_sd,
                   std::uint64_t seed) {
    if (n_per_class < 1) throw ArgumentError("gen_spiral: need n_per_class >= 1");
    if (classes < 2) throw ArgumentError("gen_spiral: need at least 2 classes");
    if (noise_sd < 0.0) throw ArgumentError("gen_spiral: noise_sd must be >= 0");
    const std::size_t n = n_per_class * classes;
    Dataset ds;
    ds.feature_names = {"x1", "x2"};
    ds.target_name = "label";
    ds.task = Task::Multiclass;
    ds.x = Matrix(n, 2);
    std::vector<int> labels(n);
    Rng rng(seed);
    std::size_t row = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        const double base = 2.0 * std::numbers::pi * static_cast<double>(k) /
                            static_cast<double>(classes);
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            const double r = static_cast<double>(i + 1) / static_cast<double>(n_per_class);
            const double theta = base + r * 1.5 * std::numbers::pi + rng.normal(0.0, noise_sd);
            ds.x(row, 0) = r * std::cos(theta);
            ds.x(row, 1) = r * std::sin(theta);
            labels[row] = static_cast<int>(k);
        }
    }
    ds.y = one_hot(labels, classes);
    return ds;
}

namespace {

double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

// Blend the two neighboring regional functions across [boundary-0.05, boundary+0.05].
double blend(double below, double above, double r, double boundary) {
    const double s = smoothstep((r - (boundary - 0.05)) / 0.1);
    return (1.0 - s) * below + s * above;
}

} // namespace

double concentric_target(double x, double y) {
    const double r = std::hypot(x, y);
    const double dome = 1.4 * std::exp(-2.0 * r * r);
    const double bowl = 0.5 * (r - 1.2) * (r - 1.2);
    const double bx = x - std::numbers::sqrt2;
    const double by = y - std::numbers::sqrt2;
    const double bump = std::exp(-(bx * bx + by * by) / (2.0 * 0.35 * 0.35));
    const double wave = 0.15 * std::sin(1.3 * (x + y));
    if (r < 0.75) return dome;
    if (r < 0.85) return blend(dome, bowl, r, 0.8);
    if (r < 1.55) return bowl;
    if (r < 1.65) return blend(bowl, bump, r, 1.6);
    if (r < 2.35) return bump;
    if (r < 2.45) return blend(bump, wave, r, 2.4);
    return wave;
}

Dataset gen_concentric(std::size_t n, std::uint64_t seed) {
    if (n < 4) throw ArgumentError("gen_concentric: need n >= 4");
    Dataset ds;
    ds.feature_names = {"x1", "x2"};
    ds.target_name = "target";
    ds.task = Task::Regression;
    ds.x = Matrix(n, 2);
    ds.y = Matrix(n, 1);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform(-3.0, 3.0);
        const double b = rng.uniform(-3.0, 3.0);
        ds.x(i, 0) = a;
        ds.x(i, 1) = b;
        ds.y(i, 0) = concentric_target(a, b);
    }
    return ds;
}

} // namespace cfn
