#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cfn/nodes.hpp"

namespace cfn {

// Intermediates recorded by a layer's forward pass for exact reuse in
// backward. One cache per forward call, owned by the caller.
struct LayerCache {
    virtual ~LayerCache() = default;
};

struct LayerBackward {
    Matrix input;               // gradient wrt the layer input
    std::vector<double> params; // aligned with the layer's parameter vector
};

// One stage of a network: a sequential chain, a parallel combine, or a
// conditional mixture of nodes. Dimension compatibility is checked at
// construction, never at step time.
class CompositionLayer {
public:
    virtual ~CompositionLayer() = default;

    virtual std::string_view layer_kind() const = 0;
    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }

    // When cache is non-null it receives the intermediates backward needs.
    virtual Matrix forward(const Matrix& x, std::unique_ptr<LayerCache>* cache = nullptr) const = 0;
    virtual LayerBackward backward(const LayerCache& cache, const Matrix& upstream) const = 0;

    virtual std::size_t param_count() const = 0;
    virtual std::vector<double> params() const = 0;
    virtual void set_params(std::span<const double> v) = 0;
    virtual void init(Rng& rng) = 0;

    virtual nlohmann::ordered_json to_json() const = 0;
    virtual std::unique_ptr<CompositionLayer> clone() const = 0;

protected:
    CompositionLayer(std::size_t input_dim, std::size_t output_dim)
        : input_dim_(input_dim), output_dim_(output_dim) {}

    std::size_t input_dim_;
    std::size_t output_dim_;
};

// Nodes applied in a chain; adjacent dimensions must line up.
// Parameter vector: node parameter vectors concatenated in chain order.
class SequentialLayer final : public CompositionLayer {
public:
    explicit SequentialLayer(std::vector<std::unique_ptr<FunctionNode>> nodes);

    std::string_view layer_kind() const override { return "sequential"; }
    Matrix forward(const Matrix& x, std::unique_ptr<LayerCache>* cache = nullptr) const override;
    LayerBackward backward(const LayerCache& cache, const Matrix& upstream) const override;
    std::size_t param_count() const override;
    std::vector<double> params() const override;
    void set_params(std::span<const double> v) override;
    void init(Rng& rng) override;
    nlohmann::ordered_json to_json() const override;
    std::unique_ptr<CompositionLayer> clone() const override;

    const std::vector<std::unique_ptr<FunctionNode>>& nodes() const { return nodes_; }

private:
    std::vector<std::unique_ptr<FunctionNode>> nodes_;
};

enum class CombineMode { Sum, Product, Concat, WeightedSum };

std::string_view combine_mode_name(CombineMode mode);
CombineMode combine_mode_from_name(std::string_view name);

// Nodes evaluated on the same input, results combined per mode. Sum, Product
// and WeightedSum require equal node output dims; Concat stacks columns in
// node order. WeightedSum weights are trainable raw reals initialized to 1/N.
// Parameter vector: node parameter vectors in order, then the combine weights
// (WeightedSum only).
class ParallelLayer final : public CompositionLayer {
public:
    ParallelLayer(std::vector<std::unique_ptr<FunctionNode>> nodes, CombineMode mode);

    std::string_view layer_kind() const override { return "parallel"; }
    Matrix forward(const Matrix& x, std::unique_ptr<LayerCache>* cache = nullptr) const override;
    LayerBackward backward(const LayerCache& cache, const Matrix& upstream) const override;
    std::size_t param_count() const override;
    std::vector<double> params() const override;
    void set_params(std::span<const double> v) override;
    void init(Rng& rng) override;
    nlohmann::ordered_json to_json() const override;
    std::unique_ptr<CompositionLayer> clone() const override;

    CombineMode combine_mode() const { return mode_; }
    std::span<const double> combine_weights() const { return weights_; }
    void set_combine_weights(std::vector<double> weights); // WeightedSum only
    const std::vector<std::unique_ptr<FunctionNode>>& nodes() const { return nodes_; }

private:
    std::vector<std::unique_ptr<FunctionNode>> nodes_;
    CombineMode mode_;
    std::vector<double> weights_; // WeightedSum only
};

// Mixture of experts: per row, non-negative condition outputs are normalized
// to weights w_i = c_i(x) / (sum_j c_j(x) + epsilon) and the output is
// sum_i w_i g_i(x). Conditions must be scalar nodes from the non-negative
// family (sigmoid, step, gaussian). Both conditions and experts receive
// gradient through the normalization.
// Parameter vector: condition node parameters in order, then expert node
// parameters in order.
class ConditionalLayer final : public CompositionLayer {
public:
    ConditionalLayer(std::vector<std::unique_ptr<FunctionNode>> condition_nodes,
                     std::vector<std::unique_ptr<FunctionNode>> function_nodes,
                     double epsilon = 1e-10);

    std::string_view layer_kind() const override { return "conditional"; }
    Matrix forward(const Matrix& x, std::unique_ptr<LayerCache>* cache = nullptr) const override;
    LayerBackward backward(const LayerCache& cache, const Matrix& upstream) const override;
    std::size_t param_count() const override;
    std::vector<double> params() const override;
    void set_params(std::span<const double> v) override;
    void init(Rng& rng) override;
    nlohmann::ordered_json to_json() const override;
    std::unique_ptr<CompositionLayer> clone() const override;

    double epsilon() const { return epsilon_; }
    const std::vector<std::unique_ptr<FunctionNode>>& condition_nodes() const {
        return condition_nodes_;
    }
    const std::vector<std::unique_ptr<FunctionNode>>& function_nodes() const {
        return function_nodes_;
    }

    // Per-row normalized gate weights, batch x n_experts.
    Matrix gate_weights(const Matrix& x) const;

private:
    std::vector<std::unique_ptr<FunctionNode>> condition_nodes_;
    std::vector<std::unique_ptr<FunctionNode>> function_nodes_;
    double epsilon_;
};

} // namespace cfn
