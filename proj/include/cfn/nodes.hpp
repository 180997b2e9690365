#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfn/matrix.hpp"
#include "cfn/rng.hpp"
#include "json.hpp"

namespace cfn {

enum class NodeKind { Linear, Gaussian, Sigmoid, Polynomial, Sinusoidal, ReLU, Exponential, Step };

std::string_view node_kind_name(NodeKind kind);

// Gradients of sum_batch(upstream * f(x)) with respect to the node input and
// the node's unconstrained parameter vector.
struct NodeGrads {
    Matrix input;               // batch x input_dim
    std::vector<double> params; // aligned with params(), empty for frozen nodes
};

// An elementary interpretable function with named parameter tensors and
// explicit forward/backward rules. Nodes are plain values: immutable during
// forward/backward, mutated only via set_params between optimizer steps.
//
// Unconstrained parameter vector layouts (stable, relied on by serialization
// and the optimizer):
//   linear       W row-major (out x in), then bias (out)
//   gaussian     center (in), log_width
//   sigmoid      direction (in), offset, steepness
//   polynomial   direction (in), coefficients a0..aD
//   sinusoidal   amplitude, angular_frequency, phase, direction (in)
//   relu         (none)
//   exponential  direction (in), offset
//   step         direction (in), offset, log_sharpness
// Positive parameters (Gaussian width, Step sharpness) are stored as logs so
// any unconstrained update keeps them strictly positive.
class FunctionNode {
public:
    virtual ~FunctionNode() = default;

    NodeKind kind() const { return kind_; }
    // Virtual so registered extension nodes can report their own name; the
    // base NodeKind then only marks which built-in family they behave like.
    virtual std::string_view kind_name() const { return node_kind_name(kind_); }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    bool trainable() const { return trainable_; }
    std::size_t param_count() const { return trainable_ ? trainable_param_count() : 0; }

    virtual Matrix forward(const Matrix& x) const = 0;
    virtual NodeGrads backward(const Matrix& x, const Matrix& upstream) const = 0;

    std::vector<double> params() const;
    void set_params(std::span<const double> v);

    // Spec defaults: He-initialized linear weights, unit Gaussian widths,
    // random unit directions, and so on per kind.
    virtual void init(Rng& rng) = 0;

    // Named parameter values in their natural (constrained) form, as stored
    // in model files and interpretability reports.
    virtual nlohmann::ordered_json param_json() const = 0;

    virtual std::unique_ptr<FunctionNode> clone() const = 0;

protected:
    FunctionNode(NodeKind kind, std::size_t input_dim, std::size_t output_dim, bool trainable)
        : kind_(kind), input_dim_(input_dim), output_dim_(output_dim), trainable_(trainable) {}

    virtual std::size_t trainable_param_count() const = 0;
    virtual void write_params(std::vector<double>& out) const = 0;
    virtual void read_params(std::span<const double> v) = 0;

    void check_input(const Matrix& x) const;
    void check_upstream(const Matrix& x, const Matrix& upstream) const;
    void check_output(const Matrix& y) const;

    NodeKind kind_;
    std::size_t input_dim_;
    std::size_t output_dim_;
    bool trainable_;
};

// f(x) = W x + b
class LinearNode final : public FunctionNode {
public:
    LinearNode(std::size_t input_dim, std::size_t output_dim, bool trainable = true);

    // Frozen identity map, used for direct feature passthrough.
    static std::unique_ptr<LinearNode> passthrough(std::size_t dim);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    const Matrix& weights() const { return w_; }
    std::span<const double> bias() const { return b_; }
    void assign(Matrix w, std::vector<double> b);

protected:
    std::size_t trainable_param_count() const override;
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    Matrix w_;              // output_dim x input_dim
    std::vector<double> b_; // output_dim
};

// f(x) = exp(-|x - c|^2 / (2 w^2)), scalar output in (0, 1]
class GaussianNode final : public FunctionNode {
public:
    explicit GaussianNode(std::size_t input_dim);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    std::span<const double> center() const { return center_; }
    double width() const;
    void assign(std::vector<double> center, double log_width);

protected:
    std::size_t trainable_param_count() const override { return input_dim_ + 1; }
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    std::vector<double> center_;
    double log_width_ = 0.0;
};

// f(x) = 1 / (1 + exp(-s (x . d + o))), scalar output in (0, 1)
class SigmoidNode final : public FunctionNode {
public:
    explicit SigmoidNode(std::size_t input_dim);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    void assign(std::vector<double> direction, double offset, double steepness);

protected:
    std::size_t trainable_param_count() const override { return input_dim_ + 2; }
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    std::vector<double> direction_;
    double offset_ = 0.0;
    double steepness_ = 1.0;
};

// f(x) = sum_i a_i (x . d)^i, evaluated by Horner's rule
class PolynomialNode final : public FunctionNode {
public:
    PolynomialNode(std::size_t input_dim, std::size_t degree);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    std::size_t degree() const { return degree_; }
    std::span<const double> direction() const { return direction_; }
    std::span<const double> coefficients() const { return coeffs_; }
    void assign(std::vector<double> direction, std::vector<double> coeffs);

protected:
    std::size_t trainable_param_count() const override { return input_dim_ + degree_ + 1; }
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    std::size_t degree_;
    std::vector<double> direction_;
    std::vector<double> coeffs_; // a0..aD
};

// f(x) = A sin(omega (x . d) + phi)
class SinusoidalNode final : public FunctionNode {
public:
    explicit SinusoidalNode(std::size_t input_dim);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    double amplitude() const { return amplitude_; }
    double angular_frequency() const { return angular_frequency_; }
    double phase() const { return phase_; }
    std::span<const double> direction() const { return direction_; }
    void assign(double amplitude, double angular_frequency, double phase,
                std::vector<double> direction);

protected:
    std::size_t trainable_param_count() const override { return input_dim_ + 3; }
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    double amplitude_ = 1.0;
    double angular_frequency_ = 1.0;
    double phase_ = 0.0;
    std::vector<double> direction_;
};

// f(x) = max(0, x) elementwise; parameter-free
class ReluNode final : public FunctionNode {
public:
    explicit ReluNode(std::size_t dim);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

protected:
    std::size_t trainable_param_count() const override { return 0; }
    void write_params(std::vector<double>&) const override {}
    void read_params(std::span<const double>) override {}
};

// f(x) = exp(min(x . d + o, clamp_hi)); the ceiling bounds the exponent so a
// diverging projection cannot blow the forward pass up to Inf.
class ExponentialNode final : public FunctionNode {
public:
    explicit ExponentialNode(std::size_t input_dim, double clamp_hi = 20.0);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    double clamp_hi() const { return clamp_hi_; }
    void assign(std::vector<double> direction, double offset);

protected:
    std::size_t trainable_param_count() const override { return input_dim_ + 1; }
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    std::vector<double> direction_;
    double offset_ = 0.0;
    double clamp_hi_;
};

// Smooth step gate: f(x) = 1 / (1 + exp(-s (x . d + o))) with s = exp(rho),
// the minimal smooth monotone gate for conditional layers.
class StepNode final : public FunctionNode {
public:
    explicit StepNode(std::size_t input_dim);

    Matrix forward(const Matrix& x) const override;
    NodeGrads backward(const Matrix& x, const Matrix& upstream) const override;
    void init(Rng& rng) override;
    nlohmann::ordered_json param_json() const override;
    std::unique_ptr<FunctionNode> clone() const override;

    double sharpness() const;
    void assign(std::vector<double> direction, double offset, double log_sharpness);

protected:
    std::size_t trainable_param_count() const override { return input_dim_ + 2; }
    void write_params(std::vector<double>& out) const override;
    void read_params(std::span<const double> v) override;

private:
    std::vector<double> direction_;
    double offset_ = 0.0;
    double log_sharpness_ = 0.0;
};

// Normal draws per coordinate, normalized to unit length.
std::vector<double> random_unit_vector(Rng& rng, std::size_t dim);

} // namespace cfn
