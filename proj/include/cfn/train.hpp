#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cfn/loss.hpp"
#include "cfn/network.hpp"

namespace cfn {

struct TrainConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;   // <= 0 disables clipping
    double l2_lambda = 1e-4;  // 0 disables the penalty
    std::size_t epochs = 150;
    std::size_t batch_size = 0; // 0 = full batch
    std::size_t patience = 20;
    double lr_decay_factor = 0.1;
    std::size_t lr_decay_every = 50;
    std::uint64_t seed = 0;

    void validate() const; // throws ArgumentError on out-of-range fields
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t t = 0;

    explicit AdamState(std::size_t param_count) : m(param_count, 0.0), v(param_count, 0.0) {}
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<double> best_params;
    std::vector<EpochRecord> history;
    std::size_t stopped_epoch = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
};

// Scale g down to max_norm when its Euclidean norm exceeds it.
std::vector<double> clip_gradients(std::vector<double> g, double max_norm);

// Gradient of loss + (lambda/2)||params||^2 given the raw loss gradient.
std::vector<double> apply_l2(std::vector<double> g, std::span<const double> params,
                             double lambda);

// One Adam update in place: advances t, updates moments, applies the
// bias-corrected step with the given learning rate.
void adam_step(AdamState& state, std::vector<double>& params, std::span<const double> g,
               double lr, const TrainConfig& config);

// Step-decay schedule: the rate used during the given 1-based epoch.
double lr_at(std::size_t epoch, const TrainConfig& config);

// Patience tracker: observe() consumes one epoch's validation loss and
// reports whether it strictly improved on the best so far.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience);

    bool observe(double val_loss);
    bool should_stop() const { return no_improve_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_; }

private:
    std::size_t patience_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
    std::size_t epoch_ = 0;
    std::size_t no_improve_ = 0;
};

// Called after each epoch with the record just written and the current
// parameter vector (post-update, pre-restore).
using EpochCallback = std::function<void(const EpochRecord&, std::span<const double>)>;

// Full training loop: seeded per-epoch shuffle, mini-batch (or full-batch)
// Adam with L2 and clipping, per-epoch validation, patience-based early
// stopping, best-weight restore. The network is left holding best_params.
TrainResult train(Network& net, const Matrix& train_x, const Matrix& train_y,
                  const Matrix& val_x, const Matrix& val_y, LossKind loss_kind,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

} // namespace cfn
