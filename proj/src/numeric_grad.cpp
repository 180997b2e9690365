#include "cfn/numeric_grad.hpp"

#include <cmath>
#include <string>

#include "cfn/error.hpp"

namespace cfn {

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& theta, double h) {
    if (!(h > 0.0)) throw ArgumentError("fd_gradient: step size must be > 0");
    std::vector<double> grad(theta.size());
    std::vector<double> probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double fp = f(probe);
        probe[i] = theta[i] - h;
        const double fm = f(probe);
        probe[i] = theta[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("fd_gradient: non-finite function value at coordinate " +
                               std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace cfn
