#include "cfn/rng.hpp"

#include <cmath>
#include <numbers>

namespace cfn {

double Rng::normal(double mean, double sd) {
    if (sd < 0.0) throw ArgumentError("normal: sd must be >= 0");
    if (sd == 0.0) return mean;
    // Box-Muller, cosine branch only so the draw count per call is fixed.
    const double u1 = 1.0 - next_unit(); // (0, 1], keeps the log finite
    const double u2 = next_unit();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sd * z;
}

double Rng::he(std::size_t fan_in) {
    if (fan_in < 1) throw ArgumentError("he: fan_in must be >= 1");
    return normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = next_u64() % i;
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace cfn
