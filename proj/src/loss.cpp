#include "cfn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "cfn/error.hpp"

namespace cfn {

namespace {

constexpr double kProbClamp = 1e-12;

void check_shapes(const char* kind, const Matrix& pred, const Matrix& target) {
    if (pred.rows() == 0 || pred.cols() == 0) {
        throw ArgumentError(std::string(kind) + ": empty prediction matrix");
    }
    if (!pred.same_shape(target)) {
        throw ShapeError(std::string(kind) + ": prediction " + pred.shape_str() +
                         " vs target " + target.shape_str());
    }
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
    check_shapes("mse", pred, target);
    const double n = static_cast<double>(pred.rows() * pred.cols());
    LossResult out;
    out.grad = Matrix(pred.rows(), pred.cols());
    double sum = 0.0;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            const double diff = pred(r, c) - target(r, c);
            sum += diff * diff;
            out.grad(r, c) = 2.0 * diff / n;
        }
    }
    out.value = sum / n;
    return out;
}

LossResult bce_loss(const Matrix& pred, const Matrix& target) {
    check_shapes("bce", pred, target);
    const double n = static_cast<double>(pred.rows() * pred.cols());
    LossResult out;
    out.grad = Matrix(pred.rows(), pred.cols());
    double sum = 0.0;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            const double y = target(r, c);
            if (y != 0.0 && y != 1.0) {
                throw ArgumentError("bce: target at (" + std::to_string(r) + ", " +
                                    std::to_string(c) + ") is " + std::to_string(y) +
                                    ", expected 0 or 1");
            }
            const double p = std::clamp(pred(r, c), kProbClamp, 1.0 - kProbClamp);
            sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
            out.grad(r, c) = (p - y) / (p * (1.0 - p)) / n;
        }
    }
    out.value = sum / n;
    return out;
}

LossResult softmax_ce_loss(const Matrix& logits, const Matrix& target) {
    check_shapes("softmax_ce", logits, target);
    const double batch = static_cast<double>(logits.rows());
    LossResult out;
    out.grad = Matrix(logits.rows(), logits.cols());
    double sum = 0.0;
    std::vector<double> probs(logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double hi = logits(r, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) hi = std::max(hi, logits(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            probs[c] = std::exp(logits(r, c) - hi);
            z += probs[c];
        }
        double row_ones = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            const double y = target(r, c);
            if (y != 0.0 && y != 1.0) {
                throw ArgumentError("softmax_ce: target at (" + std::to_string(r) + ", " +
                                    std::to_string(c) + ") is " + std::to_string(y) +
                                    ", expected a one-hot row");
            }
            row_ones += y;
            const double p = probs[c] / z;
            if (y == 1.0) sum -= std::log(std::max(p, kProbClamp));
            out.grad(r, c) = (p - y) / batch;
        }
        if (row_ones != 1.0) {
            throw ArgumentError("softmax_ce: target row " + std::to_string(r) +
                                " is not one-hot");
        }
    }
    out.value = sum / batch;
    return out;
}

} // namespace

std::string loss_kind_name(LossKind kind) {
    switch (kind) {
    case LossKind::MSE: return "mse";
    case LossKind::BCE: return "bce";
    case LossKind::SoftmaxCE: return "softmax_ce";
    }
    throw ArgumentError("unknown loss kind");
}

LossKind parse_loss_kind(const std::string& name) {
    if (name == "mse") return LossKind::MSE;
    if (name == "bce") return LossKind::BCE;
    if (name == "softmax_ce") return LossKind::SoftmaxCE;
    throw ArgumentError("unknown loss kind '" + name + "'");
}

LossResult loss(LossKind kind, const Matrix& pred, const Matrix& target) {
    switch (kind) {
    case LossKind::MSE: return mse_loss(pred, target);
    case LossKind::BCE: return bce_loss(pred, target);
    case LossKind::SoftmaxCE: return softmax_ce_loss(pred, target);
    }
    throw ArgumentError("unknown loss kind");
}

} // namespace cfn
