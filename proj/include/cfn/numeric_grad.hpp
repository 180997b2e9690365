#pragma once

#include <functional>
#include <vector>

namespace cfn {

// Central-difference gradient of a scalar function of a parameter vector:
// (f(theta + h e_i) - f(theta - h e_i)) / (2h) per coordinate. This is the
// correctness reference every analytic backward pass is checked against.
// Throws NumericError if f evaluates to a non-finite value.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& theta, double h = 1e-6);

} // namespace cfn
