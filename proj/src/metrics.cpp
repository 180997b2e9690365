#include "cfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfn/error.hpp"

namespace cfn {

std::string task_name(Task task) {
    switch (task) {
    case Task::Regression: return "regression";
    case Task::Binary: return "binary";
    case Task::Multiclass: return "multiclass";
    }
    throw ArgumentError("unknown task");
}

Task parse_task(const std::string& name) {
    if (name == "regression") return Task::Regression;
    if (name == "binary") return Task::Binary;
    if (name == "multiclass") return Task::Multiclass;
    throw ArgumentError("unknown task '" + name + "', expected regression, binary or multiclass");
}

std::size_t argmax_row(const Matrix& m, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c) {
        if (m(row, c) > m(row, best)) best = c;
    }
    return best;
}

double accuracy(const Matrix& pred, const Matrix& target, Task task) {
    if (pred.rows() == 0) throw ArgumentError("accuracy: empty input");
    if (!pred.same_shape(target)) {
        throw ShapeError("accuracy: prediction " + pred.shape_str() + " vs target " +
                         target.shape_str());
    }
    std::size_t correct = 0;
    switch (task) {
    case Task::Binary:
        if (pred.cols() != 1) {
            throw ShapeError("accuracy: binary task expects a single probability column, got " +
                             pred.shape_str());
        }
        for (std::size_t r = 0; r < pred.rows(); ++r) {
            const int decided = pred(r, 0) >= 0.5 ? 1 : 0;
            if (decided == static_cast<int>(target(r, 0))) ++correct;
        }
        break;
    case Task::Multiclass:
        for (std::size_t r = 0; r < pred.rows(); ++r) {
            if (argmax_row(pred, r) == argmax_row(target, r)) ++correct;
        }
        break;
    case Task::Regression:
        throw ArgumentError("accuracy: undefined for regression");
    }
    return static_cast<double>(correct) / static_cast<double>(pred.rows());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw ShapeError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) throw ArgumentError("roc_auc: empty input");
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ArgumentError("roc_auc: label " + std::to_string(labels[i]) +
                                " at index " + std::to_string(i) + ", expected 0 or 1");
        }
        n_pos += static_cast<std::size_t>(labels[i]);
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ArgumentError("roc_auc: undefined with a single class present");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks: a run of equal scores all receive the average of their
    // 1-based positions, which scores tied pairs as half-wins.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // avg of i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double roc_auc_ovr(const Matrix& scores, std::span<const int> labels) {
    if (scores.rows() != labels.size()) {
        throw ShapeError("roc_auc_ovr: " + std::to_string(scores.rows()) + " score rows vs " +
                         std::to_string(labels.size()) + " labels");
    }
    if (scores.cols() == 0) throw ArgumentError("roc_auc_ovr: no score columns");
    double total = 0.0;
    std::vector<double> col(scores.rows());
    std::vector<int> binary(scores.rows());
    for (std::size_t k = 0; k < scores.cols(); ++k) {
        for (std::size_t r = 0; r < scores.rows(); ++r) {
            col[r] = scores(r, k);
            binary[r] = labels[r] == static_cast<int>(k) ? 1 : 0;
        }
        try {
            total += roc_auc(col, binary);
        } catch (const ArgumentError& e) {
            throw ArgumentError("roc_auc_ovr: class " + std::to_string(k) + ": " + e.what());
        }
    }
    return total / static_cast<double>(scores.cols());
}

double rmse(const Matrix& pred, const Matrix& target) {
    if (pred.rows() == 0 || pred.cols() == 0) throw ArgumentError("rmse: empty input");
    if (!pred.same_shape(target)) {
        throw ShapeError("rmse: prediction " + pred.shape_str() + " vs target " +
                         target.shape_str());
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            const double diff = pred(r, c) - target(r, c);
            sum += diff * diff;
        }
    }
    return std::sqrt(sum / static_cast<double>(pred.rows() * pred.cols()));
}

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
    Matrix out(labels.size(), num_classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= num_classes) {
            throw ArgumentError("one_hot: label " + std::to_string(labels[r]) + " at row " +
                                std::to_string(r) + " outside [0, " +
                                std::to_string(num_classes) + ")");
        }
        out(r, static_cast<std::size_t>(labels[r])) = 1.0;
    }
    return out;
}

} // namespace cfn
