#include "cfn/nodes.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace cfn {

namespace {

double dot(const double* a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) s += a[i] * b[i];
    return s;
}

// Numerically stable logistic.
double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

std::string_view node_kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::Linear: return "linear";
        case NodeKind::Gaussian: return "gaussian";
        case NodeKind::Sigmoid: return "sigmoid";
        case NodeKind::Polynomial: return "polynomial";
        case NodeKind::Sinusoidal: return "sinusoidal";
        case NodeKind::ReLU: return "relu";
        case NodeKind::Exponential: return "exponential";
        case NodeKind::Step: return "step";
    }
    return "unknown";
}

std::vector<double> random_unit_vector(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.normal(0.0, 1.0);
        norm2 += x * x;
    }
    if (norm2 < 1e-24) {
        v.assign(dim, 0.0);
        v[0] = 1.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

std::vector<double> FunctionNode::params() const {
    std::vector<double> out;
    if (trainable_) {
        out.reserve(trainable_param_count());
        write_params(out);
    }
    return out;
}

void FunctionNode::set_params(std::span<const double> v) {
    const std::size_t want = param_count();
    if (v.size() != want) {
        throw ShapeError(std::string(kind_name()) + ": parameter vector length " +
                         std::to_string(v.size()) + ", expected " + std::to_string(want));
    }
    if (want > 0) read_params(v);
}

void FunctionNode::check_input(const Matrix& x) const {
    if (x.cols() != input_dim_) {
        throw ShapeError(std::string(kind_name()) + ": input " + x.shape_str() +
                         " does not match input_dim " + std::to_string(input_dim_));
    }
}

void FunctionNode::check_upstream(const Matrix& x, const Matrix& upstream) const {
    if (upstream.rows() != x.rows() || upstream.cols() != output_dim_) {
        throw ShapeError(std::string(kind_name()) + ": upstream " + upstream.shape_str() +
                         " does not match output " + std::to_string(x.rows()) + "x" +
                         std::to_string(output_dim_));
    }
}

void FunctionNode::check_output(const Matrix& y) const {
    if (!all_finite(y)) {
        throw NumericError(std::string(kind_name()) + ": non-finite output");
    }
}

// ---------------------------------------------------------------- Linear

LinearNode::LinearNode(std::size_t input_dim, std::size_t output_dim, bool trainable)
    : FunctionNode(NodeKind::Linear, input_dim, output_dim, trainable),
      w_(output_dim, input_dim),
      b_(output_dim, 0.0) {
    if (input_dim < 1 || output_dim < 1) {
        throw ArgumentError("linear: dimensions must be >= 1");
    }
}

std::unique_ptr<LinearNode> LinearNode::passthrough(std::size_t dim) {
    auto node = std::make_unique<LinearNode>(dim, dim, /*trainable=*/false);
    node->w_ = Matrix::identity(dim);
    return node;
}

void LinearNode::assign(Matrix w, std::vector<double> b) {
    if (w.rows() != output_dim_ || w.cols() != input_dim_ || b.size() != output_dim_) {
        throw ShapeError("linear: assign shapes " + w.shape_str() + " / " +
                         std::to_string(b.size()) + " do not match " +
                         std::to_string(output_dim_) + "x" + std::to_string(input_dim_));
    }
    w_ = std::move(w);
    b_ = std::move(b);
}

Matrix LinearNode::forward(const Matrix& x) const {
    check_input(x);
    Matrix y(x.rows(), output_dim_);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        double* yr = y.row(b);
        for (std::size_t j = 0; j < output_dim_; ++j) {
            yr[j] = b_[j] + dot(xr, {w_.row(j), input_dim_});
        }
    }
    check_output(y);
    return y;
}

NodeGrads LinearNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    NodeGrads g;
    g.input = matmul(upstream, w_); // (n x out)(out x in)
    if (trainable_) {
        g.params.assign(param_count(), 0.0);
        // W gradient is upstream^T x, laid out row-major ahead of the bias.
        double* gw = g.params.data();
        double* gb = g.params.data() + output_dim_ * input_dim_;
        for (std::size_t b = 0; b < x.rows(); ++b) {
            const double* xr = x.row(b);
            const double* ur = upstream.row(b);
            for (std::size_t j = 0; j < output_dim_; ++j) {
                const double u = ur[j];
                double* grow = gw + j * input_dim_;
                for (std::size_t i = 0; i < input_dim_; ++i) grow[i] += u * xr[i];
                gb[j] += u;
            }
        }
    }
    return g;
}

void LinearNode::init(Rng& rng) {
    if (!trainable_) return;
    for (std::size_t j = 0; j < output_dim_; ++j)
        for (std::size_t i = 0; i < input_dim_; ++i) w_(j, i) = rng.he(input_dim_);
    b_.assign(output_dim_, 0.0);
}

std::size_t LinearNode::trainable_param_count() const {
    return output_dim_ * input_dim_ + output_dim_;
}

void LinearNode::write_params(std::vector<double>& out) const {
    out.insert(out.end(), w_.data().begin(), w_.data().end());
    out.insert(out.end(), b_.begin(), b_.end());
}

void LinearNode::read_params(std::span<const double> v) {
    const std::size_t nw = output_dim_ * input_dim_;
    std::copy(v.begin(), v.begin() + nw, w_.data().begin());
    std::copy(v.begin() + nw, v.end(), b_.begin());
}

nlohmann::ordered_json LinearNode::param_json() const {
    nlohmann::ordered_json j;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < w_.rows(); ++r) {
        rows.push_back(std::vector<double>(w_.row(r), w_.row(r) + w_.cols()));
    }
    j["weights"] = std::move(rows);
    j["bias"] = b_;
    return j;
}

std::unique_ptr<FunctionNode> LinearNode::clone() const {
    return std::make_unique<LinearNode>(*this);
}

// ---------------------------------------------------------------- Gaussian

GaussianNode::GaussianNode(std::size_t input_dim)
    : FunctionNode(NodeKind::Gaussian, input_dim, 1, true), center_(input_dim, 0.0) {
    if (input_dim < 1) throw ArgumentError("gaussian: input_dim must be >= 1");
}

double GaussianNode::width() const { return std::exp(log_width_); }

void GaussianNode::assign(std::vector<double> center, double log_width) {
    if (center.size() != input_dim_) {
        throw ShapeError("gaussian: center length " + std::to_string(center.size()));
    }
    center_ = std::move(center);
    log_width_ = log_width;
}

Matrix GaussianNode::forward(const Matrix& x) const {
    check_input(x);
    const double inv_w2 = std::exp(-2.0 * log_width_);
    Matrix y(x.rows(), 1);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        double s = 0.0;
        for (std::size_t i = 0; i < input_dim_; ++i) {
            const double r = xr[i] - center_[i];
            s += r * r;
        }
        y(b, 0) = std::exp(-0.5 * s * inv_w2);
    }
    check_output(y);
    return y;
}

NodeGrads GaussianNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    const double inv_w2 = std::exp(-2.0 * log_width_);
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    g.params.assign(param_count(), 0.0);
    double* gc = g.params.data();
    double grho = 0.0;
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        double s = 0.0;
        for (std::size_t i = 0; i < input_dim_; ++i) {
            const double r = xr[i] - center_[i];
            s += r * r;
        }
        const double y = std::exp(-0.5 * s * inv_w2);
        const double coef = upstream(b, 0) * y * inv_w2;
        double* gi = g.input.row(b);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            const double r = xr[i] - center_[i];
            gi[i] = -coef * r;
            gc[i] += coef * r;
        }
        // d/d(log w) of exp(-s e^{-2 rho} / 2) is y * s * e^{-2 rho}
        grho += upstream(b, 0) * y * s * inv_w2;
    }
    g.params[input_dim_] = grho;
    return g;
}

void GaussianNode::init(Rng& rng) {
    for (auto& c : center_) c = rng.normal(0.0, 1.0);
    log_width_ = 0.0; // width 1
}

void GaussianNode::write_params(std::vector<double>& out) const {
    out.insert(out.end(), center_.begin(), center_.end());
    out.push_back(log_width_);
}

void GaussianNode::read_params(std::span<const double> v) {
    std::copy(v.begin(), v.begin() + input_dim_, center_.begin());
    log_width_ = v[input_dim_];
}

nlohmann::ordered_json GaussianNode::param_json() const {
    nlohmann::ordered_json j;
    j["center"] = center_;
    j["log_width"] = log_width_;
    j["width"] = width();
    return j;
}

std::unique_ptr<FunctionNode> GaussianNode::clone() const {
    return std::make_unique<GaussianNode>(*this);
}

// ---------------------------------------------------------------- Sigmoid

SigmoidNode::SigmoidNode(std::size_t input_dim)
    : FunctionNode(NodeKind::Sigmoid, input_dim, 1, true), direction_(input_dim, 0.0) {
    if (input_dim < 1) throw ArgumentError("sigmoid: input_dim must be >= 1");
}

void SigmoidNode::assign(std::vector<double> direction, double offset, double steepness) {
    if (direction.size() != input_dim_) {
        throw ShapeError("sigmoid: direction length " + std::to_string(direction.size()));
    }
    direction_ = std::move(direction);
    offset_ = offset;
    steepness_ = steepness;
}

Matrix SigmoidNode::forward(const Matrix& x) const {
    check_input(x);
    Matrix y(x.rows(), 1);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double p = dot(x.row(b), direction_);
        y(b, 0) = logistic(steepness_ * (p + offset_));
    }
    check_output(y);
    return y;
}

NodeGrads SigmoidNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    g.params.assign(param_count(), 0.0);
    double* gd = g.params.data();
    double go = 0.0, gs = 0.0;
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        const double p = dot(xr, direction_);
        const double y = logistic(steepness_ * (p + offset_));
        const double slope = upstream(b, 0) * y * (1.0 - y);
        const double along = slope * steepness_;
        double* gi = g.input.row(b);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            gi[i] = along * direction_[i];
            gd[i] += along * xr[i];
        }
        go += along;
        gs += slope * (p + offset_);
    }
    g.params[input_dim_] = go;
    g.params[input_dim_ + 1] = gs;
    return g;
}

void SigmoidNode::init(Rng& rng) {
    direction_ = random_unit_vector(rng, input_dim_);
    offset_ = 0.0;
    steepness_ = 1.0;
}

void SigmoidNode::write_params(std::vector<double>& out) const {
    out.insert(out.end(), direction_.begin(), direction_.end());
    out.push_back(offset_);
    out.push_back(steepness_);
}

void SigmoidNode::read_params(std::span<const double> v) {
    std::copy(v.begin(), v.begin() + input_dim_, direction_.begin());
    offset_ = v[input_dim_];
    steepness_ = v[input_dim_ + 1];
}

nlohmann::ordered_json SigmoidNode::param_json() const {
    nlohmann::ordered_json j;
    j["direction"] = direction_;
    j["offset"] = offset_;
    j["steepness"] = steepness_;
    return j;
}

std::unique_ptr<FunctionNode> SigmoidNode::clone() const {
    return std::make_unique<SigmoidNode>(*this);
}

// ---------------------------------------------------------------- Polynomial

PolynomialNode::PolynomialNode(std::size_t input_dim, std::size_t degree)
    : FunctionNode(NodeKind::Polynomial, input_dim, 1, true),
      degree_(degree),
      direction_(input_dim, 0.0),
      coeffs_(degree + 1, 0.0) {
    if (input_dim < 1) throw ArgumentError("polynomial: input_dim must be >= 1");
    if (degree < 1) throw ArgumentError("polynomial: degree must be >= 1");
}

void PolynomialNode::assign(std::vector<double> direction, std::vector<double> coeffs) {
    if (direction.size() != input_dim_ || coeffs.size() != degree_ + 1) {
        throw ShapeError("polynomial: assign lengths " + std::to_string(direction.size()) +
                         " / " + std::to_string(coeffs.size()));
    }
    direction_ = std::move(direction);
    coeffs_ = std::move(coeffs);
}

Matrix PolynomialNode::forward(const Matrix& x) const {
    check_input(x);
    Matrix y(x.rows(), 1);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double p = dot(x.row(b), direction_);
        double acc = coeffs_[degree_];
        for (std::size_t i = degree_; i-- > 0;) acc = acc * p + coeffs_[i];
        y(b, 0) = acc;
    }
    check_output(y);
    return y;
}

NodeGrads PolynomialNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    g.params.assign(param_count(), 0.0);
    double* gd = g.params.data();
    double* ga = g.params.data() + input_dim_;
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        const double p = dot(xr, direction_);
        // Horner evaluation of the derivative sum_i i a_i p^{i-1}
        double q = degree_ * coeffs_[degree_];
        for (std::size_t i = degree_ - 1; i >= 1; --i) q = q * p + static_cast<double>(i) * coeffs_[i];
        const double u = upstream(b, 0);
        const double uq = u * q;
        double* gi = g.input.row(b);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            gi[i] = uq * direction_[i];
            gd[i] += uq * xr[i];
        }
        double pw = 1.0;
        for (std::size_t i = 0; i <= degree_; ++i) {
            ga[i] += u * pw;
            pw *= p;
        }
    }
    return g;
}

void PolynomialNode::init(Rng& rng) {
    direction_ = random_unit_vector(rng, input_dim_);
    for (auto& a : coeffs_) a = rng.uniform(-0.1, 0.1);
}

void PolynomialNode::write_params(std::vector<double>& out) const {
    out.insert(out.end(), direction_.begin(), direction_.end());
    out.insert(out.end(), coeffs_.begin(), coeffs_.end());
}

void PolynomialNode::read_params(std::span<const double> v) {
    std::copy(v.begin(), v.begin() + input_dim_, direction_.begin());
    std::copy(v.begin() + input_dim_, v.end(), coeffs_.begin());
}

nlohmann::ordered_json PolynomialNode::param_json() const {
    nlohmann::ordered_json j;
    j["degree"] = degree_;
    j["direction"] = direction_;
    j["coefficients"] = coeffs_;
    return j;
}

std::unique_ptr<FunctionNode> PolynomialNode::clone() const {
    return std::make_unique<PolynomialNode>(*this);
}

// ---------------------------------------------------------------- Sinusoidal

SinusoidalNode::SinusoidalNode(std::size_t input_dim)
    : FunctionNode(NodeKind::Sinusoidal, input_dim, 1, true), direction_(input_dim, 0.0) {
    if (input_dim < 1) throw ArgumentError("sinusoidal: input_dim must be >= 1");
}

void SinusoidalNode::assign(double amplitude, double angular_frequency, double phase,
                            std::vector<double> direction) {
    if (direction.size() != input_dim_) {
        throw ShapeError("sinusoidal: direction length " + std::to_string(direction.size()));
    }
    amplitude_ = amplitude;
    angular_frequency_ = angular_frequency;
    phase_ = phase;
    direction_ = std::move(direction);
}

Matrix SinusoidalNode::forward(const Matrix& x) const {
    check_input(x);
    Matrix y(x.rows(), 1);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double p = dot(x.row(b), direction_);
        y(b, 0) = amplitude_ * std::sin(angular_frequency_ * p + phase_);
    }
    check_output(y);
    return y;
}

NodeGrads SinusoidalNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    g.params.assign(param_count(), 0.0);
    double ga = 0.0, gw = 0.0, gp = 0.0;
    double* gd = g.params.data() + 3;
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        const double p = dot(xr, direction_);
        const double theta = angular_frequency_ * p + phase_;
        const double u = upstream(b, 0);
        const double c = amplitude_ * std::cos(theta) * u;
        ga += u * std::sin(theta);
        gw += c * p;
        gp += c;
        const double along = c * angular_frequency_;
        double* gi = g.input.row(b);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            gi[i] = along * direction_[i];
            gd[i] += along * xr[i];
        }
    }
    g.params[0] = ga;
    g.params[1] = gw;
    g.params[2] = gp;
    return g;
}

void SinusoidalNode::init(Rng& rng) {
    amplitude_ = 1.0;
    angular_frequency_ = rng.uniform(0.5, 2.0);
    phase_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
    direction_ = random_unit_vector(rng, input_dim_);
}

void SinusoidalNode::write_params(std::vector<double>& out) const {
    out.push_back(amplitude_);
    out.push_back(angular_frequency_);
    out.push_back(phase_);
    out.insert(out.end(), direction_.begin(), direction_.end());
}

void SinusoidalNode::read_params(std::span<const double> v) {
    amplitude_ = v[0];
    angular_frequency_ = v[1];
    phase_ = v[2];
    std::copy(v.begin() + 3, v.end(), direction_.begin());
}

nlohmann::ordered_json SinusoidalNode::param_json() const {
    nlohmann::ordered_json j;
    j["amplitude"] = amplitude_;
    j["angular_frequency"] = angular_frequency_;
    j["phase"] = phase_;
    j["direction"] = direction_;
    return j;
}

std::unique_ptr<FunctionNode> SinusoidalNode::clone() const {
    return std::make_unique<SinusoidalNode>(*this);
}

// ---------------------------------------------------------------- ReLU

ReluNode::ReluNode(std::size_t dim) : FunctionNode(NodeKind::ReLU, dim, dim, false) {
    if (dim < 1) throw ArgumentError("relu: dim must be >= 1");
}

Matrix ReluNode::forward(const Matrix& x) const {
    check_input(x);
    Matrix y = x;
    for (double& v : y.data())
        if (v < 0.0) v = 0.0;
    check_output(y);
    return y;
}

NodeGrads ReluNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    for (std::size_t b = 0; b < x.rows(); ++b)
        for (std::size_t i = 0; i < input_dim_; ++i)
            g.input(b, i) = x(b, i) > 0.0 ? upstream(b, i) : 0.0;
    return g;
}

void ReluNode::init(Rng&) {}

nlohmann::ordered_json ReluNode::param_json() const { return nlohmann::ordered_json::object(); }

std::unique_ptr<FunctionNode> ReluNode::clone() const {
    return std::make_unique<ReluNode>(*this);
}

// ---------------------------------------------------------------- Exponential

ExponentialNode::ExponentialNode(std::size_t input_dim, double clamp_hi)
    : FunctionNode(NodeKind::Exponential, input_dim, 1, true),
      direction_(input_dim, 0.0),
      clamp_hi_(clamp_hi) {
    if (input_dim < 1) throw ArgumentError("exponential: input_dim must be >= 1");
    if (!std::isfinite(clamp_hi)) throw ArgumentError("exponential: clamp_hi must be finite");
}

void ExponentialNode::assign(std::vector<double> direction, double offset) {
    if (direction.size() != input_dim_) {
        throw ShapeError("exponential: direction length " + std::to_string(direction.size()));
    }
    direction_ = std::move(direction);
    offset_ = offset;
}

Matrix ExponentialNode::forward(const Matrix& x) const {
    check_input(x);
    Matrix y(x.rows(), 1);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double z = dot(x.row(b), direction_) + offset_;
        y(b, 0) = std::exp(std::min(z, clamp_hi_));
    }
    check_output(y);
    return y;
}

NodeGrads ExponentialNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    g.params.assign(param_count(), 0.0);
    double* gd = g.params.data();
    double go = 0.0;
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        const double z = dot(xr, direction_) + offset_;
        double* gi = g.input.row(b);
        if (z >= clamp_hi_) {
            // Clamped: output constant, no gradient.
            for (std::size_t i = 0; i < input_dim_; ++i) gi[i] = 0.0;
            continue;
        }
        const double ue = upstream(b, 0) * std::exp(z);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            gi[i] = ue * direction_[i];
            gd[i] += ue * xr[i];
        }
        go += ue;
    }
    g.params[input_dim_] = go;
    return g;
}

void ExponentialNode::init(Rng& rng) {
    direction_ = random_unit_vector(rng, input_dim_);
    for (auto& d : direction_) d *= 0.1;
    offset_ = 0.0;
}

void ExponentialNode::write_params(std::vector<double>& out) const {
    out.insert(out.end(), direction_.begin(), direction_.end());
    out.push_back(offset_);
}

void ExponentialNode::read_params(std::span<const double> v) {
    std::copy(v.begin(), v.begin() + input_dim_, direction_.begin());
    offset_ = v[input_dim_];
}

nlohmann::ordered_json ExponentialNode::param_json() const {
    nlohmann::ordered_json j;
    j["direction"] = direction_;
    j["offset"] = offset_;
    j["clamp_hi"] = clamp_hi_;
    return j;
}

std::unique_ptr<FunctionNode> ExponentialNode::clone() const {
    return std::make_unique<ExponentialNode>(*this);
}

// ---------------------------------------------------------------- Step

StepNode::StepNode(std::size_t input_dim)
    : FunctionNode(NodeKind::Step, input_dim, 1, true), direction_(input_dim, 0.0) {
    if (input_dim < 1) throw ArgumentError("step: input_dim must be >= 1");
}

double StepNode::sharpness() const { return std::exp(log_sharpness_); }

void StepNode::assign(std::vector<double> direction, double offset, double log_sharpness) {
    if (direction.size() != input_dim_) {
        throw ShapeError("step: direction length " + std::to_string(direction.size()));
    }
    direction_ = std::move(direction);
    offset_ = offset;
    log_sharpness_ = log_sharpness;
}

Matrix StepNode::forward(const Matrix& x) const {
    check_input(x);
    const double s = sharpness();
    Matrix y(x.rows(), 1);
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double p = dot(x.row(b), direction_);
        y(b, 0) = logistic(s * (p + offset_));
    }
    check_output(y);
    return y;
}

NodeGrads StepNode::backward(const Matrix& x, const Matrix& upstream) const {
    check_input(x);
    check_upstream(x, upstream);
    const double s = sharpness();
    NodeGrads g;
    g.input = Matrix(x.rows(), input_dim_);
    g.params.assign(param_count(), 0.0);
    double* gd = g.params.data();
    double go = 0.0, grho = 0.0;
    for (std::size_t b = 0; b < x.rows(); ++b) {
        const double* xr = x.row(b);
        const double p = dot(xr, direction_);
        const double y = logistic(s * (p + offset_));
        const double slope = upstream(b, 0) * y * (1.0 - y);
        const double along = slope * s;
        double* gi = g.input.row(b);
        for (std::size_t i = 0; i < input_dim_; ++i) {
            gi[i] = along * direction_[i];
            gd[i] += along * xr[i];
        }
        go += along;
        // chain through s = exp(rho): d/drho = slope * (p + o) * s
        grho += slope * (p + offset_) * s;
    }
    g.params[input_dim_] = go;
    g.params[input_dim_ + 1] = grho;
    return g;
}

void StepNode::init(Rng& rng) {
    direction_ = random_unit_vector(rng, input_dim_);
    offset_ = 0.0;
    log_sharpness_ = 0.0; // sharpness 1
}

void StepNode::write_params(std::vector<double>& out) const {
    out.insert(out.end(), direction_.begin(), direction_.end());
    out.push_back(offset_);
    out.push_back(log_sharpness_);
}

void StepNode::read_params(std::span<const double> v) {
    std::copy(v.begin(), v.begin() + input_dim_, direction_.begin());
    offset_ = v[input_dim_];
    log_sharpness_ = v[input_dim_ + 1];
}

nlohmann::ordered_json StepNode::param_json() const {
    nlohmann::ordered_json j;
    j["direction"] = direction_;
    j["offset"] = offset_;
    j["log_sharpness"] = log_sharpness_;
    j["sharpness"] = sharpness();
    return j;
}

std::unique_ptr<FunctionNode> StepNode::clone() const {
    return std::make_unique<StepNode>(*this);
}

} // namespace cfn
