#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cfn/matrix.hpp"
#include "cfn/metrics.hpp"

namespace cfn {

// Targets are a column for regression and binary tasks and a one-hot matrix
// for multiclass.
struct Dataset {
    Matrix x;
    Matrix y;
    std::vector<std::string> feature_names;
    std::string target_name = "target";
    Task task = Task::Regression;

    std::size_t size() const { return x.rows(); }
    std::vector<int> labels() const; // class indices; ArgumentError for regression
};

// Columnwise standardization statistics, fitted on training data only.
// Constant columns keep std 1 so they pass through centered but unscaled.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;
};

Dataset load_csv(const std::string& path, const std::string& target_column, Task task);
void save_csv(const Dataset& ds, const std::string& path);

// Seeded shuffle then partition into ceil(n*(1-test_fraction)) training rows
// and the remainder.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction = 0.2,
                                  std::uint64_t seed = 42);

Scaler fit_scaler(const Matrix& train_x);
Matrix apply_scaler(const Scaler& scaler, const Matrix& x);

// x(t) = A sin(omega t + phi) + noise, t uniform over [t_lo, t_hi).
Dataset gen_shm(std::size_t n, double amplitude = 2.0, double omega = 1.5,
                double phi = std::numbers::pi / 4.0, double noise_sd = 0.1, double t_lo = 0.0,
                double t_hi = 10.0, std::uint64_t seed = 0);

// Interleaved spiral arms: class k follows angle 2 pi k / K + r * 3 pi / 2
// with radius r in (0, 1] and Gaussian angular noise.
Dataset gen_spiral(std::size_t n_per_class, std::size_t classes = 3, double noise_sd = 0.2,
                   std::uint64_t seed = 0);

// 2-D regression surface with four concentric behavioral regions, points
// uniform on [-3, 3]^2.
Dataset gen_concentric(std::size_t n, std::uint64_t seed = 0);

// The gen_concentric ground-truth surface: a Gaussian dome 1.4 exp(-2 r^2)
// inside r < 0.8, then a quadratic bowl 0.5 (r - 1.2)^2, then a single
// Gaussian bump (width 0.35) centered at (sqrt 2, sqrt 2) on the ring of
// radius 2, and a plane wave 0.15 sin(1.3 (x + y)) outside r >= 2.4, with
// smoothstep blends of width 0.1 at the region boundaries.
double concentric_target(double x, double y);

} // namespace cfn
