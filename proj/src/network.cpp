#include "cfn/network.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace cfn {

namespace {

// Rethrow layer failures with the layer index attached, preserving the type.
[[noreturn]] void rethrow_with_layer(std::size_t index, const CompositionLayer& layer,
                                     const Error& e) {
    const std::string msg = "layer " + std::to_string(index + 1) + " (" +
                            std::string(layer.layer_kind()) + "): " + e.what();
    if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
    if (dynamic_cast<const ShapeError*>(&e)) throw ShapeError(msg);
    if (dynamic_cast<const UsageError*>(&e)) throw UsageError(msg);
    throw Error(msg);
}

void format_value(std::ostringstream& os, const nlohmann::ordered_json& v) {
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v.get<double>());
        os << buf;
    } else if (v.is_array()) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) os << ", ";
            format_value(os, v[i]);
        }
        os << "]";
    } else {
        os << v.dump();
    }
}

void describe_node(std::ostringstream& os, const std::string& role, std::size_t index,
                   const FunctionNode& node) {
    os << "  " << role << " " << index + 1 << ": " << node.kind_name() << " ("
       << node.input_dim() << " -> " << node.output_dim() << ")";
    if (!node.trainable()) os << " [frozen]";
    os << "\n";
    const nlohmann::ordered_json params = node.param_json();
    for (const auto& [key, value] : params.items()) {
        os << "    " << key << ": ";
        format_value(os, value);
        os << "\n";
    }
}

} // namespace

Network::Network(std::vector<std::unique_ptr<CompositionLayer>> layers)
    : layers_(std::move(layers)) {
    if (layers_.empty()) throw ArgumentError("network: needs at least one layer");
    for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
        if (layers_[k]->output_dim() != layers_[k + 1]->input_dim()) {
            throw ShapeError("network: layer " + std::to_string(k + 1) + " outputs " +
                             std::to_string(layers_[k]->output_dim()) + " but layer " +
                             std::to_string(k + 2) + " expects " +
                             std::to_string(layers_[k + 1]->input_dim()));
        }
    }
    input_dim_ = layers_.front()->input_dim();
    output_dim_ = layers_.back()->output_dim();
}

Matrix Network::predict(const Matrix& x) const {
    Matrix cur = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        try {
            cur = layers_[k]->forward(cur, nullptr);
        } catch (const Error& e) {
            rethrow_with_layer(k, *layers_[k], e);
        }
    }
    return cur;
}

ForwardPass Network::forward(const Matrix& x) const {
    ForwardPass pass;
    pass.caches.reserve(layers_.size());
    Matrix cur = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        std::unique_ptr<LayerCache> cache;
        try {
            cur = layers_[k]->forward(cur, &cache);
        } catch (const Error& e) {
            rethrow_with_layer(k, *layers_[k], e);
        }
        pass.caches.push_back(std::move(cache));
    }
    pass.output = std::move(cur);
    return pass;
}

std::vector<double> Network::backward(const ForwardPass& pass, const Matrix& loss_grad) const {
    if (pass.caches.size() != layers_.size()) {
        throw UsageError("network: forward pass does not match this network");
    }
    std::vector<double> grad(param_count(), 0.0);
    std::vector<std::size_t> offsets(layers_.size());
    std::size_t off = 0;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        offsets[k] = off;
        off += layers_[k]->param_count();
    }
    Matrix u = loss_grad;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        LayerBackward lb;
        try {
            lb = layers_[k]->backward(*pass.caches[k], u);
        } catch (const Error& e) {
            rethrow_with_layer(k, *layers_[k], e);
        }
        std::copy(lb.params.begin(), lb.params.end(), grad.begin() + offsets[k]);
        u = std::move(lb.input);
    }
    return grad;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer->param_count();
    return n;
}

std::vector<double> Network::params() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& layer : layers_) {
        const auto p = layer->params();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

void Network::set_params(std::span<const double> v) {
    if (v.size() != param_count()) {
        throw ShapeError("network: parameter vector length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(param_count()));
    }
    std::size_t off = 0;
    for (const auto& layer : layers_) {
        const std::size_t n = layer->param_count();
        layer->set_params(v.subspan(off, n));
        off += n;
    }
}

void Network::init(Rng& rng) {
    for (auto& layer : layers_) layer->init(rng);
}

std::unique_ptr<Network> Network::clone() const {
    std::vector<std::unique_ptr<CompositionLayer>> copies;
    copies.reserve(layers_.size());
    for (const auto& layer : layers_) copies.push_back(layer->clone());
    return std::make_unique<Network>(std::move(copies));
}

nlohmann::ordered_json Network::describe_json() const {
    nlohmann::ordered_json j;
    j["input_dim"] = input_dim_;
    j["output_dim"] = output_dim_;
    j["trainable_parameters"] = param_count();
    auto layers = nlohmann::ordered_json::array();
    for (const auto& layer : layers_) layers.push_back(layer->to_json());
    j["layers"] = std::move(layers);
    if (const auto expr = closed_form_expression(*this)) j["closed_form"] = *expr;
    return j;
}

std::string Network::describe_text() const {
    std::ostringstream os;
    os << "network: input_dim=" << input_dim_ << ", output_dim=" << output_dim_
       << ", layers=" << layers_.size() << ", trainable parameters=" << param_count() << "\n";
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& layer = *layers_[k];
        os << "layer " << k + 1 << ": " << layer.layer_kind();
        if (const auto* par = dynamic_cast<const ParallelLayer*>(&layer)) {
            os << "[" << combine_mode_name(par->combine_mode()) << "]";
        }
        os << " (" << layer.input_dim() << " -> " << layer.output_dim() << ")\n";
        if (const auto* seq = dynamic_cast<const SequentialLayer*>(&layer)) {
            for (std::size_t i = 0; i < seq->nodes().size(); ++i)
                describe_node(os, "node", i, *seq->nodes()[i]);
        } else if (const auto* par = dynamic_cast<const ParallelLayer*>(&layer)) {
            for (std::size_t i = 0; i < par->nodes().size(); ++i)
                describe_node(os, "node", i, *par->nodes()[i]);
            if (par->combine_mode() == CombineMode::WeightedSum) {
                os << "  combine weights: ";
                std::ostringstream tmp;
                format_value(tmp, nlohmann::ordered_json(std::vector<double>(
                                      par->combine_weights().begin(), par->combine_weights().end())));
                os << tmp.str() << "\n";
            }
        } else if (const auto* cond = dynamic_cast<const ConditionalLayer*>(&layer)) {
            for (std::size_t i = 0; i < cond->condition_nodes().size(); ++i)
                describe_node(os, "condition", i, *cond->condition_nodes()[i]);
            for (std::size_t i = 0; i < cond->function_nodes().size(); ++i)
                describe_node(os, "expert", i, *cond->function_nodes()[i]);
        }
    }
    if (const auto expr = closed_form_expression(*this)) {
        os << "closed form: " << *expr << "\n";
    }
    return os.str();
}

std::optional<CanonicalSinusoid> canonical_sinusoid(const SinusoidalNode& node) {
    if (node.input_dim() != 1) return std::nullopt;
    double a = node.amplitude();
    double k = node.angular_frequency() * node.direction()[0];
    double phi = node.phase();
    if (k < 0.0) {
        // A sin(k t + phi) == -A sin(-k t - phi)
        k = -k;
        a = -a;
        phi = -phi;
    }
    if (a < 0.0) {
        a = -a;
        phi += std::numbers::pi;
    }
    phi = std::remainder(phi, 2.0 * std::numbers::pi);
    return CanonicalSinusoid{a, k, phi};
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// Polynomial over one input with the direction folded into the coefficients:
// sum_i a_i (d x)^i = sum_i (a_i d^i) x^i.
std::string polynomial_expression(const PolynomialNode& node) {
    const double d = node.direction()[0];
    std::string out;
    double dp = 1.0;
    for (std::size_t i = 0; i < node.coefficients().size(); ++i) {
        const double coef = node.coefficients()[i] * dp;
        dp *= d;
        if (!out.empty()) out += " + ";
        out += fmt(coef);
        if (i == 1) out += "*x";
        if (i > 1) out += "*x^" + std::to_string(i);
    }
    return out;
}

std::string sinusoid_expression(const SinusoidalNode& node, const std::string& var) {
    const auto c = canonical_sinusoid(node);
    return fmt(c->amplitude) + "*sin(" + fmt(c->angular_frequency) + "*" + var + " + " +
           fmt(c->phase) + ")";
}

} // namespace

std::optional<std::string> closed_form_expression(const Network& net) {
    if (net.input_dim() != 1 || net.layers().size() != 1) return std::nullopt;
    const auto& layer = *net.layers().front();
    if (const auto* seq = dynamic_cast<const SequentialLayer*>(&layer)) {
        if (seq->nodes().size() == 1) {
            if (const auto* sin = dynamic_cast<const SinusoidalNode*>(seq->nodes()[0].get())) {
                return "y = " + sinusoid_expression(*sin, "t");
            }
        }
        return std::nullopt;
    }
    if (const auto* par = dynamic_cast<const ParallelLayer*>(&layer)) {
        if (par->combine_mode() != CombineMode::Sum) return std::nullopt;
        std::string out = "y = ";
        for (std::size_t i = 0; i < par->nodes().size(); ++i) {
            const auto* node = par->nodes()[i].get();
            if (i) out += " + ";
            if (const auto* sin = dynamic_cast<const SinusoidalNode*>(node)) {
                out += sinusoid_expression(*sin, "x");
            } else if (const auto* poly = dynamic_cast<const PolynomialNode*>(node)) {
                out += "(" + polynomial_expression(*poly) + ")";
            } else {
                return std::nullopt;
            }
        }
        return out;
    }
    return std::nullopt;
}

} // namespace cfn
