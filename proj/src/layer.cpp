#include "cfn/layer.hpp"

#include <algorithm>
#include <utility>

namespace cfn {

namespace {

// Per-node parameter vectors concatenated in order.
std::size_t total_param_count(const std::vector<std::unique_ptr<FunctionNode>>& nodes) {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node->param_count();
    return n;
}

void append_params(const std::vector<std::unique_ptr<FunctionNode>>& nodes,
                   std::vector<double>& out) {
    for (const auto& node : nodes) {
        const auto p = node->params();
        out.insert(out.end(), p.begin(), p.end());
    }
}

std::size_t scatter_params(const std::vector<std::unique_ptr<FunctionNode>>& nodes,
                           std::span<const double> v, std::size_t offset) {
    for (const auto& node : nodes) {
        const std::size_t n = node->param_count();
        node->set_params(v.subspan(offset, n));
        offset += n;
    }
    return offset;
}

std::vector<std::unique_ptr<FunctionNode>> clone_nodes(
    const std::vector<std::unique_ptr<FunctionNode>>& nodes) {
    std::vector<std::unique_ptr<FunctionNode>> out;
    out.reserve(nodes.size());
    for (const auto& node : nodes) out.push_back(node->clone());
    return out;
}

nlohmann::ordered_json nodes_to_json(const std::vector<std::unique_ptr<FunctionNode>>& nodes) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& node : nodes) {
        nlohmann::ordered_json j;
        j["kind"] = std::string(node->kind_name());
        j["input_dim"] = node->input_dim();
        j["output_dim"] = node->output_dim();
        j["trainable"] = node->trainable();
        j["params"] = node->param_json();
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace

// ---------------------------------------------------------------- Sequential

namespace {
struct SequentialCache final : LayerCache {
    std::vector<Matrix> node_inputs; // node_inputs[k] feeds nodes_[k]
};
} // namespace

SequentialLayer::SequentialLayer(std::vector<std::unique_ptr<FunctionNode>> nodes)
    : CompositionLayer(0, 0), nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw ArgumentError("sequential layer: needs at least one node");
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        if (nodes_[k]->output_dim() != nodes_[k + 1]->input_dim()) {
            throw ShapeError("sequential layer: node " + std::to_string(k) + " (" +
                             std::string(nodes_[k]->kind_name()) + ") outputs " +
                             std::to_string(nodes_[k]->output_dim()) + " but node " +
                             std::to_string(k + 1) + " (" +
                             std::string(nodes_[k + 1]->kind_name()) + ") expects " +
                             std::to_string(nodes_[k + 1]->input_dim()));
        }
    }
    input_dim_ = nodes_.front()->input_dim();
    output_dim_ = nodes_.back()->output_dim();
}

Matrix SequentialLayer::forward(const Matrix& x, std::unique_ptr<LayerCache>* cache) const {
    if (x.cols() != input_dim_) {
        throw ShapeError("sequential layer: input " + x.shape_str() + ", expected cols " +
                         std::to_string(input_dim_));
    }
    auto local = cache ? std::make_unique<SequentialCache>() : nullptr;
    Matrix cur = x;
    for (const auto& node : nodes_) {
        if (local) local->node_inputs.push_back(cur);
        cur = node->forward(cur);
    }
    if (cache) *cache = std::move(local);
    return cur;
}

LayerBackward SequentialLayer::backward(const LayerCache& cache, const Matrix& upstream) const {
    const auto* c = dynamic_cast<const SequentialCache*>(&cache);
    if (!c || c->node_inputs.size() != nodes_.size()) {
        throw UsageError("sequential layer: cache does not match this layer");
    }
    LayerBackward out;
    out.params.assign(param_count(), 0.0);
    // Parameter segment offsets in chain order.
    std::vector<std::size_t> offsets(nodes_.size());
    std::size_t off = 0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        offsets[k] = off;
        off += nodes_[k]->param_count();
    }
    Matrix u = upstream;
    for (std::size_t k = nodes_.size(); k-- > 0;) {
        NodeGrads g = nodes_[k]->backward(c->node_inputs[k], u);
        std::copy(g.params.begin(), g.params.end(), out.params.begin() + offsets[k]);
        u = std::move(g.input);
    }
    out.input = std::move(u);
    return out;
}

std::size_t SequentialLayer::param_count() const { return total_param_count(nodes_); }

std::vector<double> SequentialLayer::params() const {
    std::vector<double> out;
    out.reserve(param_count());
    append_params(nodes_, out);
    return out;
}

void SequentialLayer::set_params(std::span<const double> v) {
    if (v.size() != param_count()) {
        throw ShapeError("sequential layer: parameter vector length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(param_count()));
    }
    scatter_params(nodes_, v, 0);
}

void SequentialLayer::init(Rng& rng) {
    for (auto& node : nodes_) node->init(rng);
}

nlohmann::ordered_json SequentialLayer::to_json() const {
    nlohmann::ordered_json j;
    j["layer_kind"] = "sequential";
    j["nodes"] = nodes_to_json(nodes_);
    return j;
}

std::unique_ptr<CompositionLayer> SequentialLayer::clone() const {
    return std::make_unique<SequentialLayer>(clone_nodes(nodes_));
}

// ---------------------------------------------------------------- Parallel

std::string_view combine_mode_name(CombineMode mode) {
    switch (mode) {
        case CombineMode::Sum: return "sum";
        case CombineMode::Product: return "product";
        case CombineMode::Concat: return "concat";
        case CombineMode::WeightedSum: return "weighted_sum";
    }
    return "unknown";
}

CombineMode combine_mode_from_name(std::string_view name) {
    if (name == "sum") return CombineMode::Sum;
    if (name == "product") return CombineMode::Product;
    if (name == "concat") return CombineMode::Concat;
    if (name == "weighted_sum") return CombineMode::WeightedSum;
    throw ArgumentError("unknown combine mode: " + std::string(name));
}

namespace {
struct ParallelCache final : LayerCache {
    Matrix x;
    std::vector<Matrix> outputs;
};
} // namespace

ParallelLayer::ParallelLayer(std::vector<std::unique_ptr<FunctionNode>> nodes, CombineMode mode)
    : CompositionLayer(0, 0), nodes_(std::move(nodes)), mode_(mode) {
    if (nodes_.empty()) throw ArgumentError("parallel layer: needs at least one node");
    input_dim_ = nodes_.front()->input_dim();
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (nodes_[k]->input_dim() != input_dim_) {
            throw ShapeError("parallel layer: node " + std::to_string(k) +
                             " input_dim " + std::to_string(nodes_[k]->input_dim()) +
                             " differs from " + std::to_string(input_dim_));
        }
    }
    if (mode_ == CombineMode::Concat) {
        output_dim_ = 0;
        for (const auto& node : nodes_) output_dim_ += node->output_dim();
    } else {
        output_dim_ = nodes_.front()->output_dim();
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            if (nodes_[k]->output_dim() != output_dim_) {
                throw ShapeError("parallel layer: " + std::string(combine_mode_name(mode_)) +
                                 " needs equal output dims, node " + std::to_string(k) +
                                 " has " + std::to_string(nodes_[k]->output_dim()) + " vs " +
                                 std::to_string(output_dim_));
            }
        }
        if (mode_ == CombineMode::WeightedSum) {
            weights_.assign(nodes_.size(), 1.0 / static_cast<double>(nodes_.size()));
        }
    }
}

Matrix ParallelLayer::forward(const Matrix& x, std::unique_ptr<LayerCache>* cache) const {
    if (x.cols() != input_dim_) {
        throw ShapeError("parallel layer: input " + x.shape_str() + ", expected cols " +
                         std::to_string(input_dim_));
    }
    std::vector<Matrix> outputs;
    outputs.reserve(nodes_.size());
    for (const auto& node : nodes_) outputs.push_back(node->forward(x));

    Matrix y(x.rows(), output_dim_);
    switch (mode_) {
        case CombineMode::Sum:
            for (const auto& o : outputs)
                for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += o.data()[i];
            break;
        case CombineMode::Product:
            std::fill(y.data().begin(), y.data().end(), 1.0);
            for (const auto& o : outputs)
                for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= o.data()[i];
            break;
        case CombineMode::WeightedSum:
            for (std::size_t k = 0; k < outputs.size(); ++k)
                for (std::size_t i = 0; i < y.size(); ++i)
                    y.data()[i] += weights_[k] * outputs[k].data()[i];
            break;
        case CombineMode::Concat: {
            std::size_t col = 0;
            for (const auto& o : outputs) {
                for (std::size_t b = 0; b < x.rows(); ++b)
                    for (std::size_t j = 0; j < o.cols(); ++j) y(b, col + j) = o(b, j);
                col += o.cols();
            }
            break;
        }
    }
    if (cache) {
        auto local = std::make_unique<ParallelCache>();
        local->x = x;
        local->outputs = std::move(outputs);
        *cache = std::move(local);
    }
    return y;
}

LayerBackward ParallelLayer::backward(const LayerCache& cache, const Matrix& upstream) const {
    const auto* c = dynamic_cast<const ParallelCache*>(&cache);
    if (!c || c->outputs.size() != nodes_.size()) {
        throw UsageError("parallel layer: cache does not match this layer");
    }
    const Matrix& x = c->x;
    LayerBackward out;
    out.input = Matrix(x.rows(), input_dim_);
    out.params.assign(param_count(), 0.0);

    std::size_t offset = 0;
    std::size_t col = 0;
    const std::size_t n = x.rows();
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const auto& node = nodes_[k];
        const std::size_t m = node->output_dim();
        // Upstream reaching this node under the combine rule.
        Matrix u(n, m);
        switch (mode_) {
            case CombineMode::Sum:
                u = upstream;
                break;
            case CombineMode::WeightedSum:
                for (std::size_t i = 0; i < u.size(); ++i)
                    u.data()[i] = weights_[k] * upstream.data()[i];
                break;
            case CombineMode::Product:
                // Product of the other nodes' outputs, elementwise.
                std::fill(u.data().begin(), u.data().end(), 1.0);
                for (std::size_t j = 0; j < nodes_.size(); ++j) {
                    if (j == k) continue;
                    for (std::size_t i = 0; i < u.size(); ++i)
                        u.data()[i] *= c->outputs[j].data()[i];
                }
                for (std::size_t i = 0; i < u.size(); ++i) u.data()[i] *= upstream.data()[i];
                break;
            case CombineMode::Concat:
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t j = 0; j < m; ++j) u(b, j) = upstream(b, col + j);
                break;
        }
        NodeGrads g = node->backward(x, u);
        std::copy(g.params.begin(), g.params.end(), out.params.begin() + offset);
        offset += node->param_count();
        for (std::size_t i = 0; i < out.input.size(); ++i)
            out.input.data()[i] += g.input.data()[i];
        col += m;
    }
    if (mode_ == CombineMode::WeightedSum) {
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            double gw = 0.0;
            for (std::size_t i = 0; i < upstream.size(); ++i)
                gw += upstream.data()[i] * c->outputs[k].data()[i];
            out.params[offset + k] = gw;
        }
    }
    return out;
}

std::size_t ParallelLayer::param_count() const {
    return total_param_count(nodes_) + weights_.size();
}

std::vector<double> ParallelLayer::params() const {
    std::vector<double> out;
    out.reserve(param_count());
    append_params(nodes_, out);
    out.insert(out.end(), weights_.begin(), weights_.end());
    return out;
}

void ParallelLayer::set_params(std::span<const double> v) {
    if (v.size() != param_count()) {
        throw ShapeError("parallel layer: parameter vector length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(param_count()));
    }
    const std::size_t off = scatter_params(nodes_, v, 0);
    std::copy(v.begin() + off, v.end(), weights_.begin());
}

void ParallelLayer::init(Rng& rng) {
    for (auto& node : nodes_) node->init(rng);
    if (mode_ == CombineMode::WeightedSum) {
        weights_.assign(nodes_.size(), 1.0 / static_cast<double>(nodes_.size()));
    }
}

void ParallelLayer::set_combine_weights(std::vector<double> weights) {
    if (mode_ != CombineMode::WeightedSum) {
        throw UsageError("parallel layer: combine weights only exist in weighted_sum mode");
    }
    if (weights.size() != nodes_.size()) {
        throw ShapeError("parallel layer: " + std::to_string(weights.size()) +
                         " combine weights for " + std::to_string(nodes_.size()) + " nodes");
    }
    weights_ = std::move(weights);
}

nlohmann::ordered_json ParallelLayer::to_json() const {
    nlohmann::ordered_json j;
    j["layer_kind"] = "parallel";
    j["combine"] = std::string(combine_mode_name(mode_));
    if (mode_ == CombineMode::WeightedSum) j["weights"] = weights_;
    j["nodes"] = nodes_to_json(nodes_);
    return j;
}

std::unique_ptr<CompositionLayer> ParallelLayer::clone() const {
    auto copy = std::make_unique<ParallelLayer>(clone_nodes(nodes_), mode_);
    copy->weights_ = weights_;
    return copy;
}

// ---------------------------------------------------------------- Conditional

namespace {
struct ConditionalCache final : LayerCache {
    Matrix x;
    std::vector<Matrix> conditions; // each batch x 1, raw outputs
    std::vector<Matrix> experts;    // each batch x m
    std::vector<double> denom;      // per row, sum_j c_j + epsilon
    Matrix y;                       // combined output
};

bool non_negative_kind(NodeKind kind) {
    return kind == NodeKind::Sigmoid || kind == NodeKind::Step || kind == NodeKind::Gaussian;
}
} // namespace

ConditionalLayer::ConditionalLayer(std::vector<std::unique_ptr<FunctionNode>> condition_nodes,
                                   std::vector<std::unique_ptr<FunctionNode>> function_nodes,
                                   double epsilon)
    : CompositionLayer(0, 0),
      condition_nodes_(std::move(condition_nodes)),
      function_nodes_(std::move(function_nodes)),
      epsilon_(epsilon) {
    if (condition_nodes_.empty() || condition_nodes_.size() != function_nodes_.size()) {
        throw ArgumentError("conditional layer: needs equal, non-zero numbers of conditions (" +
                            std::to_string(condition_nodes_.size()) + ") and experts (" +
                            std::to_string(function_nodes_.size()) + ")");
    }
    input_dim_ = condition_nodes_.front()->input_dim();
    output_dim_ = function_nodes_.front()->output_dim();
    for (std::size_t k = 0; k < condition_nodes_.size(); ++k) {
        const auto& cond = condition_nodes_[k];
        if (cond->output_dim() != 1) {
            throw ShapeError("conditional layer: condition " + std::to_string(k) +
                             " must produce a scalar, has output_dim " +
                             std::to_string(cond->output_dim()));
        }
        if (!non_negative_kind(cond->kind())) {
            throw ArgumentError("conditional layer: condition " + std::to_string(k) + " (" +
                                std::string(cond->kind_name()) +
                                ") is not a non-negative gate kind (sigmoid, step, gaussian)");
        }
        if (cond->input_dim() != input_dim_ ||
            function_nodes_[k]->input_dim() != input_dim_) {
            throw ShapeError("conditional layer: all nodes must share input_dim " +
                             std::to_string(input_dim_));
        }
        if (function_nodes_[k]->output_dim() != output_dim_) {
            throw ShapeError("conditional layer: expert " + std::to_string(k) +
                             " output_dim " + std::to_string(function_nodes_[k]->output_dim()) +
                             " differs from " + std::to_string(output_dim_));
        }
    }
}

Matrix ConditionalLayer::forward(const Matrix& x, std::unique_ptr<LayerCache>* cache) const {
    if (x.cols() != input_dim_) {
        throw ShapeError("conditional layer: input " + x.shape_str() + ", expected cols " +
                         std::to_string(input_dim_));
    }
    const std::size_t n = x.rows();
    const std::size_t n_experts = condition_nodes_.size();

    std::vector<Matrix> conditions;
    conditions.reserve(n_experts);
    for (const auto& cond : condition_nodes_) conditions.push_back(cond->forward(x));
    std::vector<Matrix> experts;
    experts.reserve(n_experts);
    for (const auto& expert : function_nodes_) experts.push_back(expert->forward(x));

    std::vector<double> denom(n, epsilon_);
    for (const auto& cond : conditions)
        for (std::size_t b = 0; b < n; ++b) denom[b] += cond(b, 0);

    Matrix y(n, output_dim_);
    for (std::size_t k = 0; k < n_experts; ++k) {
        for (std::size_t b = 0; b < n; ++b) {
            const double w = conditions[k](b, 0) / denom[b];
            const double* er = experts[k].row(b);
            double* yr = y.row(b);
            for (std::size_t j = 0; j < output_dim_; ++j) yr[j] += w * er[j];
        }
    }
    if (cache) {
        auto local = std::make_unique<ConditionalCache>();
        local->x = x;
        local->conditions = std::move(conditions);
        local->experts = std::move(experts);
        local->denom = std::move(denom);
        local->y = y;
        *cache = std::move(local);
    }
    return y;
}

Matrix ConditionalLayer::gate_weights(const Matrix& x) const {
    const std::size_t n = x.rows();
    std::vector<Matrix> conditions;
    conditions.reserve(condition_nodes_.size());
    for (const auto& cond : condition_nodes_) conditions.push_back(cond->forward(x));
    std::vector<double> denom(n, epsilon_);
    for (const auto& cond : conditions)
        for (std::size_t b = 0; b < n; ++b) denom[b] += cond(b, 0);
    Matrix w(n, condition_nodes_.size());
    for (std::size_t k = 0; k < conditions.size(); ++k)
        for (std::size_t b = 0; b < n; ++b) w(b, k) = conditions[k](b, 0) / denom[b];
    return w;
}

LayerBackward ConditionalLayer::backward(const LayerCache& cache, const Matrix& upstream) const {
    const auto* c = dynamic_cast<const ConditionalCache*>(&cache);
    if (!c || c->conditions.size() != condition_nodes_.size()) {
        throw UsageError("conditional layer: cache does not match this layer");
    }
    const Matrix& x = c->x;
    const std::size_t n = x.rows();
    const std::size_t n_experts = condition_nodes_.size();

    LayerBackward out;
    out.input = Matrix(n, input_dim_);
    out.params.assign(param_count(), 0.0);

    std::size_t offset = 0;
    // Conditions: quotient rule through the normalized weights. With
    // y = sum_i c_i g_i / D and D = sum_j c_j + eps, the derivative wrt c_i
    // is (g_i - y) / D.
    for (std::size_t k = 0; k < n_experts; ++k) {
        Matrix u(n, 1);
        for (std::size_t b = 0; b < n; ++b) {
            const double* ur = upstream.row(b);
            const double* gr = c->experts[k].row(b);
            const double* yr = c->y.row(b);
            double acc = 0.0;
            for (std::size_t j = 0; j < output_dim_; ++j) acc += ur[j] * (gr[j] - yr[j]);
            u(b, 0) = acc / c->denom[b];
        }
        NodeGrads g = condition_nodes_[k]->backward(x, u);
        std::copy(g.params.begin(), g.params.end(), out.params.begin() + offset);
        offset += condition_nodes_[k]->param_count();
        for (std::size_t i = 0; i < out.input.size(); ++i)
            out.input.data()[i] += g.input.data()[i];
    }
    // Experts: upstream scaled by the row's gate weight.
    for (std::size_t k = 0; k < n_experts; ++k) {
        Matrix u(n, output_dim_);
        for (std::size_t b = 0; b < n; ++b) {
            const double w = c->conditions[k](b, 0) / c->denom[b];
            const double* ur = upstream.row(b);
            double* wr = u.row(b);
            for (std::size_t j = 0; j < output_dim_; ++j) wr[j] = w * ur[j];
        }
        NodeGrads g = function_nodes_[k]->backward(x, u);
        std::copy(g.params.begin(), g.params.end(), out.params.begin() + offset);
        offset += function_nodes_[k]->param_count();
        for (std::size_t i = 0; i < out.input.size(); ++i)
            out.input.data()[i] += g.input.data()[i];
    }
    return out;
}

std::size_t ConditionalLayer::param_count() const {
    return total_param_count(condition_nodes_) + total_param_count(function_nodes_);
}

std::vector<double> ConditionalLayer::params() const {
    std::vector<double> out;
    out.reserve(param_count());
    append_params(condition_nodes_, out);
    append_params(function_nodes_, out);
    return out;
}

void ConditionalLayer::set_params(std::span<const double> v) {
    if (v.size() != param_count()) {
        throw ShapeError("conditional layer: parameter vector length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(param_count()));
    }
    const std::size_t off = scatter_params(condition_nodes_, v, 0);
    scatter_params(function_nodes_, v, off);
}

void ConditionalLayer::init(Rng& rng) {
    for (auto& node : condition_nodes_) node->init(rng);
    for (auto& node : function_nodes_) node->init(rng);
}

nlohmann::ordered_json ConditionalLayer::to_json() const {
    nlohmann::ordered_json j;
    j["layer_kind"] = "conditional";
    j["epsilon"] = epsilon_;
    j["condition_nodes"] = nodes_to_json(condition_nodes_);
    j["function_nodes"] = nodes_to_json(function_nodes_);
    return j;
}

std::unique_ptr<CompositionLayer> ConditionalLayer::clone() const {
    return std::make_unique<ConditionalLayer>(clone_nodes(condition_nodes_),
                                              clone_nodes(function_nodes_), epsilon_);
}

} // namespace cfn
