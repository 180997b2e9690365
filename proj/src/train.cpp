#include "cfn/train.hpp"

#include <cmath>

#include "cfn/error.hpp"
#include "cfn/rng.hpp"

namespace cfn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("train config: learning_rate must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ArgumentError("train config: beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ArgumentError("train config: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw ArgumentError("train config: eps must be > 0");
    if (l2_lambda < 0.0) throw ArgumentError("train config: l2_lambda must be >= 0");
    if (epochs < 1) throw ArgumentError("train config: epochs must be >= 1");
    if (patience < 1) throw ArgumentError("train config: patience must be >= 1");
    if (!(lr_decay_factor > 0.0) || lr_decay_factor > 1.0) {
        throw ArgumentError("train config: lr_decay_factor must be in (0, 1]");
    }
    if (lr_decay_every < 1) throw ArgumentError("train config: lr_decay_every must be >= 1");
}

std::vector<double> clip_gradients(std::vector<double> g, double max_norm) {
    if (!(max_norm > 0.0)) throw ArgumentError("clip_gradients: max_norm must be > 0");
    double sq = 0.0;
    for (double v : g) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& v : g) v *= scale;
    }
    return g;
}

std::vector<double> apply_l2(std::vector<double> g, std::span<const double> params,
                             double lambda) {
    if (g.size() != params.size()) {
        throw ShapeError("apply_l2: gradient length " + std::to_string(g.size()) +
                         " vs parameter length " + std::to_string(params.size()));
    }
    if (lambda != 0.0) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda * params[i];
    }
    return g;
}

void adam_step(AdamState& state, std::vector<double>& params, std::span<const double> g,
               double lr, const TrainConfig& config) {
    if (state.m.size() != params.size() || g.size() != params.size()) {
        throw ShapeError("adam_step: state " + std::to_string(state.m.size()) + ", params " +
                         std::to_string(params.size()) + ", gradient " +
                         std::to_string(g.size()) + " must agree");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g[i] * g[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
    if (epoch < 1) throw ArgumentError("lr_at: epochs are 1-based");
    const auto steps = static_cast<double>((epoch - 1) / config.lr_decay_every);
    return config.learning_rate * std::pow(config.lr_decay_factor, steps);
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw ArgumentError("early stopper: patience must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
    epoch_ += 1;
    if (val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        no_improve_ = 0;
        return true;
    }
    no_improve_ += 1;
    return false;
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = m(rows[i], c);
    }
    return out;
}

} // namespace

TrainResult train(Network& net, const Matrix& train_x, const Matrix& train_y,
                  const Matrix& val_x, const Matrix& val_y, LossKind loss_kind,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train_x.rows() == 0) throw ArgumentError("train: empty training set");
    if (val_x.rows() == 0) throw ArgumentError("train: empty validation set");
    if (train_x.rows() != train_y.rows()) {
        throw ShapeError("train: " + std::to_string(train_x.rows()) + " training inputs vs " +
                         std::to_string(train_y.rows()) + " targets");
    }
    if (val_x.rows() != val_y.rows()) {
        throw ShapeError("train: " + std::to_string(val_x.rows()) + " validation inputs vs " +
                         std::to_string(val_y.rows()) + " targets");
    }

    const std::size_t n = train_x.rows();
    const std::size_t batch = config.batch_size == 0 ? n : config.batch_size;

    Rng shuffle_rng(config.seed);
    AdamState adam(net.param_count());
    EarlyStopper stopper(config.patience);
    TrainResult result;
    result.best_params = net.params();

    std::vector<double> params = net.params();
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = lr_at(epoch, config);
        const std::vector<std::size_t> order = shuffle_rng.permutation(n);

        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            const std::span<const std::size_t> rows(order.data() + start, count);
            const Matrix bx = gather_rows(train_x, rows);
            const Matrix by = gather_rows(train_y, rows);

            ForwardPass pass;
            LossResult batch_loss;
            std::vector<double> grad;
            try {
                pass = net.forward(bx);
                batch_loss = loss(loss_kind, pass.output, by);
                grad = net.backward(pass, batch_loss.grad);
            } catch (const NumericError& e) {
                throw NumericError("train: epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(batch_loss.value)) {
                throw NumericError("train: epoch " + std::to_string(epoch) +
                                   ": non-finite training loss");
            }
            epoch_loss_sum += batch_loss.value * static_cast<double>(count);

            grad = apply_l2(std::move(grad), params, config.l2_lambda);
            if (config.clip_norm > 0.0) grad = clip_gradients(std::move(grad), config.clip_norm);
            adam_step(adam, params, grad, lr, config);
            net.set_params(params);
        }

        double val_loss_value;
        try {
            val_loss_value = loss(loss_kind, net.predict(val_x), val_y).value;
        } catch (const NumericError& e) {
            throw NumericError("train: epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(val_loss_value)) {
            throw NumericError("train: epoch " + std::to_string(epoch) +
                               ": non-finite validation loss");
        }

        const EpochRecord record{epoch, epoch_loss_sum / static_cast<double>(n), val_loss_value,
                                 lr};
        result.history.push_back(record);
        result.stopped_epoch = epoch;
        if (on_epoch) on_epoch(record, params);

        if (stopper.observe(val_loss_value)) {
            result.best_params = params;
        } else if (stopper.should_stop()) {
            break;
        }
    }

    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best_loss();
    net.set_params(result.best_params);
    return result;
}

} // namespace cfn
