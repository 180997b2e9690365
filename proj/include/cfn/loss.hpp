#pragma once

#include <string>
#include <utility>

#include "cfn/matrix.hpp"

namespace cfn {

enum class LossKind {
    MSE,       // mean squared error over all entries
    BCE,       // binary cross-entropy on probabilities in (0,1)
    SoftmaxCE, // softmax cross-entropy on raw logits with one-hot targets
};

std::string loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct LossResult {
    double value = 0.0;
    Matrix grad; // d(value)/d(pred), same shape as pred
};

// Mean-over-batch loss and its gradient with respect to the predictions.
// BCE clamps probabilities to [1e-12, 1 - 1e-12] before taking logs.
LossResult loss(LossKind kind, const Matrix& pred, const Matrix& target);

} // namespace cfn
