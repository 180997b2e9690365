#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfn/layer.hpp"

namespace cfn {

// Forward-pass record: layer caches plus the final output, consumed once by
// backward(). Holding the caches outside the network keeps a frozen network
// usable from several threads at once.
struct ForwardPass {
    Matrix output;
    std::vector<std::unique_ptr<LayerCache>> caches;
};

// An ordered stack of composition layers trained end to end. Adjacent layer
// dimensions are validated at construction.
class Network {
public:
    explicit Network(std::vector<std::unique_ptr<CompositionLayer>> layers);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    const std::vector<std::unique_ptr<CompositionLayer>>& layers() const { return layers_; }

    // Forward without caches; deterministic for fixed parameters and input.
    Matrix predict(const Matrix& x) const;

    ForwardPass forward(const Matrix& x) const;
    // Flat gradient over the network parameter vector, layers in order.
    std::vector<double> backward(const ForwardPass& pass, const Matrix& loss_grad) const;

    std::size_t param_count() const;
    std::vector<double> params() const;
    void set_params(std::span<const double> v);
    void init(Rng& rng);

    std::unique_ptr<Network> clone() const;

    // Interpretability report: every layer and node with its semantic
    // parameter names and current values.
    nlohmann::ordered_json describe_json() const;
    std::string describe_text() const;

private:
    std::vector<std::unique_ptr<CompositionLayer>> layers_;
    std::size_t input_dim_;
    std::size_t output_dim_;
};

// Canonical reading of a sinusoid over a scalar input: the direction and any
// sign ambiguity are folded into an equivalent form with positive amplitude,
// non-negative frequency and phase wrapped to (-pi, pi].
struct CanonicalSinusoid {
    double amplitude;
    double angular_frequency;
    double phase;
};

std::optional<CanonicalSinusoid> canonical_sinusoid(const SinusoidalNode& node);

// Closed-form rendering with learned constants for the symbolic-regression
// shapes (a lone sinusoid, or a parallel sum of sinusoid and polynomial over
// one input). Empty when the architecture has no such reading.
std::optional<std::string> closed_form_expression(const Network& net);

} // namespace cfn
