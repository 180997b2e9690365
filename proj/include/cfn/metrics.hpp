#pragma once

#include <span>
#include <string>
#include <vector>

#include "cfn/matrix.hpp"

namespace cfn {

enum class Task { Regression, Binary, Multiclass };

std::string task_name(Task task);
Task parse_task(const std::string& name);

// Binary: pred is a probability column, threshold 0.5 with ties counted as
// positive. Multiclass: row argmax of pred vs row argmax of the one-hot
// target, ties broken by the lowest class index.
double accuracy(const Matrix& pred, const Matrix& target, Task task);

// Mann-Whitney rank AUC with midranks for tied scores. Labels must contain
// both classes.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Macro average of per-class one-vs-rest AUCs; scores column k scores class k.
double roc_auc_ovr(const Matrix& scores, std::span<const int> labels);

double rmse(const Matrix& pred, const Matrix& target);

Matrix one_hot(std::span<const int> labels, std::size_t num_classes);

std::size_t argmax_row(const Matrix& m, std::size_t row);

} // namespace cfn
