#include "cfn/presets.hpp"

#include <cmath>
#include <numbers>

#include "cfn/error.hpp"

namespace cfn {

namespace {

using NodeVec = std::vector<std::unique_ptr<FunctionNode>>;

void init_all(NodeVec& nodes, Rng& rng) {
    for (auto& node : nodes) node->init(rng);
}

PresetBuild tabular(std::size_t input_dim, Task task, std::size_t num_classes,
                    std::uint64_t seed) {
    Rng rng(seed);

    NodeVec features;
    features.push_back(LinearNode::passthrough(input_dim));
    features.push_back(std::make_unique<PolynomialNode>(input_dim, 2));
    features.push_back(std::make_unique<GaussianNode>(input_dim));
    features.push_back(std::make_unique<SigmoidNode>(input_dim));
    features.push_back(std::make_unique<SinusoidalNode>(input_dim));
    features.push_back(std::make_unique<ExponentialNode>(input_dim));
    init_all(features, rng);
    const std::size_t feature_dim = input_dim + 5;

    NodeVec hidden;
    hidden.push_back(std::make_unique<LinearNode>(feature_dim, 64));
    hidden.push_back(std::make_unique<ReluNode>(64));
    init_all(hidden, rng);

    NodeVec head;
    PresetBuild out;
    switch (task) {
    case Task::Regression:
        head.push_back(std::make_unique<LinearNode>(64, 1));
        out.loss = LossKind::MSE;
        // Raw-unit regression targets can sit hundreds of units from the
        // zero-initialized head, and Adam moves each parameter by roughly the
        // learning rate per step, so the regression branch needs many more,
        // larger steps than the classification branches.
        out.config.epochs = 600;
        out.config.patience = 80;
        out.config.learning_rate = 0.05;
        out.config.batch_size = 32;
        out.config.lr_decay_factor = 0.5;
        out.config.lr_decay_every = 200;
        break;
    case Task::Binary:
        head.push_back(std::make_unique<LinearNode>(64, 1));
        head.push_back(std::make_unique<SigmoidNode>(1));
        out.loss = LossKind::BCE;
        break;
    case Task::Multiclass:
        if (num_classes < 2) {
            throw ArgumentError("preset tabular: multiclass needs at least 2 classes");
        }
        head.push_back(std::make_unique<LinearNode>(64, num_classes));
        out.loss = LossKind::SoftmaxCE;
        break;
    }
    init_all(head, rng);

    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.push_back(std::make_unique<ParallelLayer>(std::move(features), CombineMode::Concat));
    layers.push_back(std::make_unique<SequentialLayer>(std::move(hidden)));
    layers.push_back(std::make_unique<SequentialLayer>(std::move(head)));
    out.network = std::make_unique<Network>(std::move(layers));
    out.config.seed = seed;
    out.standardize = true;
    return out;
}

PresetBuild symreg_sin(std::size_t input_dim, Task task, std::uint64_t seed) {
    if (input_dim != 1 || task != Task::Regression) {
        throw ArgumentError("preset symreg_sin: expects one input feature and a regression task");
    }
    Rng rng(seed);
    NodeVec nodes;
    nodes.push_back(std::make_unique<SinusoidalNode>(1));
    init_all(nodes, rng);

    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.push_back(std::make_unique<SequentialLayer>(std::move(nodes)));

    PresetBuild out;
    out.network = std::make_unique<Network>(std::move(layers));
    out.loss = LossKind::MSE;
    out.config.seed = seed;
    out.config.epochs = 4000;
    out.config.patience = 200;
    out.config.l2_lambda = 0.0;
    out.config.lr_decay_factor = 0.5;
    out.config.lr_decay_every = 500;
    return out;
}

PresetBuild spiral(std::size_t input_dim, Task task, std::size_t num_classes,
                   std::uint64_t seed) {
    if (input_dim != 2 || task != Task::Multiclass) {
        throw ArgumentError("preset spiral: expects two input features and a multiclass task");
    }
    if (num_classes < 2) throw ArgumentError("preset spiral: needs at least 2 classes");
    Rng rng(seed);

    NodeVec features;
    for (int i = 0; i < 5; ++i) features.push_back(std::make_unique<GaussianNode>(2));
    for (int i = 0; i < 4; ++i) features.push_back(std::make_unique<SigmoidNode>(2));
    for (int i = 0; i < 2; ++i) features.push_back(std::make_unique<SinusoidalNode>(2));
    features.push_back(std::make_unique<PolynomialNode>(2, 2));
    init_all(features, rng);
    const std::size_t feature_dim = features.size();

    // A dense sigmoid hidden layer: each node's direction vector is one row
    // of the linear map, so parallel scalar sigmoids make up linear+sigmoid.
    NodeVec hidden;
    for (int i = 0; i < 8; ++i) hidden.push_back(std::make_unique<SigmoidNode>(feature_dim));
    init_all(hidden, rng);

    NodeVec head;
    head.push_back(std::make_unique<LinearNode>(hidden.size(), num_classes));
    init_all(head, rng);

    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.push_back(std::make_unique<ParallelLayer>(std::move(features), CombineMode::Concat));
    layers.push_back(std::make_unique<ParallelLayer>(std::move(hidden), CombineMode::Concat));
    layers.push_back(std::make_unique<SequentialLayer>(std::move(head)));

    PresetBuild out;
    out.network = std::make_unique<Network>(std::move(layers));
    out.loss = LossKind::SoftmaxCE;
    out.config.seed = seed;
    out.config.epochs = 500;
    out.config.patience = 60;
    out.config.learning_rate = 0.02;
    out.config.lr_decay_factor = 0.5;
    out.config.lr_decay_every = 150;
    return out;
}

// Feature stage shared by the mixture preset and its single-expert baseline:
// raw coordinates, two origin-centered Gaussians as monotone radius
// encodings at different scales, and two directional waves as angle proxies.
NodeVec moe_features(Rng& rng) {
    NodeVec features;
    features.push_back(LinearNode::passthrough(2));
    features.push_back(std::make_unique<GaussianNode>(2));
    features.push_back(std::make_unique<GaussianNode>(2));
    features.push_back(std::make_unique<SinusoidalNode>(2));
    features.push_back(std::make_unique<SinusoidalNode>(2));
    init_all(features, rng);
    dynamic_cast<GaussianNode&>(*features[1]).assign({0.0, 0.0}, std::log(0.8));
    dynamic_cast<GaussianNode&>(*features[2]).assign({0.0, 0.0}, std::log(1.8));
    return features;
}

std::unique_ptr<FunctionNode> moe_expert(std::size_t index, std::size_t feature_dim) {
    switch (index) {
    case 0: return std::make_unique<SinusoidalNode>(feature_dim);
    case 1: return std::make_unique<PolynomialNode>(feature_dim, 2);
    case 2: return std::make_unique<GaussianNode>(feature_dim);
    case 3: return std::make_unique<SinusoidalNode>(feature_dim);
    }
    throw ArgumentError("moe expert index must be 0..3");
}

// Seed each expert near the shape of one concentric region, expressed through
// the shared feature columns: a sinusoid of the narrow radius encoding for the
// center dome, a quadratic of the wide radius encoding for the bowl, a bump at
// the feature-space image of the on-ring Gaussian, and a diagonal plane wave.
// Training refines all of them; the single-expert baselines start from the
// same initialization as their mixture counterparts.
NodeVec make_moe_experts(const NodeVec& features, Rng& rng) {
    NodeVec experts;
    for (std::size_t i = 0; i < 4; ++i) experts.push_back(moe_expert(i, 6));
    init_all(experts, rng);

    Matrix probe(1, 2);
    probe(0, 0) = std::numbers::sqrt2;
    probe(0, 1) = std::numbers::sqrt2;
    std::vector<double> at_bump;
    for (const auto& node : features) {
        Matrix out = node->forward(probe);
        for (std::size_t j = 0; j < out.cols(); ++j) at_bump.push_back(out(0, j));
    }

    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    dynamic_cast<SinusoidalNode&>(*experts[0]).assign(2.56, 1.0, -0.47, {0, 0, 1, 0, 0, 0});
    dynamic_cast<PolynomialNode&>(*experts[1]).assign({0, 0, 0, 1, 0, 0}, {3.68, -9.26, 5.82});
    dynamic_cast<GaussianNode&>(*experts[2]).assign(at_bump, std::log(0.5));
    dynamic_cast<SinusoidalNode&>(*experts[3]).assign(0.15, 1.3 * std::numbers::sqrt2, 0.0,
                                                      {inv_sqrt2, inv_sqrt2, 0, 0, 0, 0});
    return experts;
}

TrainConfig moe_config(std::uint64_t seed) {
    TrainConfig config;
    config.seed = seed;
    config.epochs = 600;
    config.patience = 60;
    config.learning_rate = 0.02;
    config.l2_lambda = 0.0;
    config.lr_decay_factor = 0.5;
    config.lr_decay_every = 200;
    return config;
}

PresetBuild moe_concentric(std::size_t input_dim, Task task, std::uint64_t seed) {
    if (input_dim != 2 || task != Task::Regression) {
        throw ArgumentError(
            "preset moe_concentric: expects two input features and a regression task");
    }
    Rng rng(seed);
    NodeVec features = moe_features(rng);
    const std::size_t feature_dim = 6;

    // Gates threshold the two radius encodings (feature columns 2 and 3).
    // The first opens on the inner disk, the next two are bumps over the
    // middle annuli, the last opens outward; together they keep the summed
    // condition mass near 1 across the whole square.
    NodeVec gates;
    for (int i = 0; i < 4; ++i) gates.push_back(std::make_unique<StepNode>(feature_dim));
    init_all(gates, rng);
    dynamic_cast<StepNode&>(*gates[0]).assign({0, 0, 72.9, -50.3, 0, 0}, 1.4, 0.0);
    dynamic_cast<StepNode&>(*gates[1]).assign({0, 0, -137.0, 277.8, 0, 0}, -168.6, 0.0);
    dynamic_cast<StepNode&>(*gates[2]).assign({0, 0, -288.5, 136.5, 0, 0}, -52.9, 0.0);
    dynamic_cast<StepNode&>(*gates[3]).assign({0, 0, 48.1, -151.1, 0, 0}, 61.6, 0.0);

    NodeVec experts = make_moe_experts(features, rng);

    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.push_back(std::make_unique<ParallelLayer>(std::move(features), CombineMode::Concat));
    layers.push_back(std::make_unique<ConditionalLayer>(std::move(gates), std::move(experts)));

    PresetBuild out;
    out.network = std::make_unique<Network>(std::move(layers));
    out.loss = LossKind::MSE;
    out.config = moe_config(seed);
    return out;
}

PresetBuild basis2d(std::size_t input_dim, Task task, std::uint64_t seed) {
    if (input_dim != 2 || task != Task::Regression) {
        throw ArgumentError("preset basis2d: expects two input features and a regression task");
    }
    Rng rng(seed);

    NodeVec basis;
    for (int i = 0; i < 5; ++i) basis.push_back(std::make_unique<GaussianNode>(2));
    for (int i = 0; i < 3; ++i) basis.push_back(std::make_unique<SinusoidalNode>(2));
    for (int i = 0; i < 2; ++i) basis.push_back(std::make_unique<PolynomialNode>(2, 4));
    init_all(basis, rng);
    // Start one Gaussian at the origin, one narrow Gaussian on the ring of
    // radius 2, and the remaining three spread over the other diagonals where
    // they can drift toward whatever residual structure training uncovers.
    // The quartic polynomials point along the diagonals: their even terms
    // combine into radial quadratics/quartics and an xy cross term, which
    // covers bowl-shaped and saddle-shaped trends.
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    dynamic_cast<GaussianNode&>(*basis[0]).assign({0.0, 0.0}, std::log(0.5));
    dynamic_cast<GaussianNode&>(*basis[1]).assign({std::numbers::sqrt2, std::numbers::sqrt2},
                                                  std::log(0.35));
    for (int i = 2; i < 5; ++i) {
        const double angle = std::numbers::pi * (0.25 + 0.5 * (i - 1));
        dynamic_cast<GaussianNode&>(*basis[i]).assign(
            {2.0 * std::cos(angle), 2.0 * std::sin(angle)}, std::log(0.6));
    }
    dynamic_cast<SinusoidalNode&>(*basis[5]).assign(1.0, 1.8, 0.0, {inv_sqrt2, inv_sqrt2});
    dynamic_cast<SinusoidalNode&>(*basis[6]).assign(1.0, 1.5, 0.0, {inv_sqrt2, -inv_sqrt2});
    dynamic_cast<SinusoidalNode&>(*basis[7]).assign(1.0, 1.5, 0.0, {1.0, 0.0});
    dynamic_cast<PolynomialNode&>(*basis[8]).assign({inv_sqrt2, inv_sqrt2},
                                                    {0.0, 0.0, 0.05, 0.0, 0.0});
    dynamic_cast<PolynomialNode&>(*basis[9]).assign({inv_sqrt2, -inv_sqrt2},
                                                    {0.0, 0.0, 0.05, 0.0, 0.0});

    NodeVec head;
    head.push_back(std::make_unique<LinearNode>(basis.size(), 1));
    init_all(head, rng);

    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.push_back(std::make_unique<ParallelLayer>(std::move(basis), CombineMode::Concat));
    layers.push_back(std::make_unique<SequentialLayer>(std::move(head)));

    PresetBuild out;
    out.network = std::make_unique<Network>(std::move(layers));
    out.loss = LossKind::MSE;
    out.config.seed = seed;
    out.config.epochs = 2000;
    out.config.patience = 250;
    out.config.learning_rate = 0.02;
    out.config.batch_size = 64;
    out.config.l2_lambda = 0.0;
    out.config.lr_decay_factor = 0.5;
    out.config.lr_decay_every = 600;
    return out;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"tabular", "symreg_sin", "spiral", "moe_concentric", "basis2d"};
}

PresetBuild build_preset(const std::string& name, std::size_t input_dim, Task task,
                         std::size_t num_classes, std::uint64_t seed) {
    if (input_dim < 1) throw ArgumentError("preset: input_dim must be >= 1");
    if (name == "tabular") return tabular(input_dim, task, num_classes, seed);
    if (name == "symreg_sin") return symreg_sin(input_dim, task, seed);
    if (name == "spiral") return spiral(input_dim, task, num_classes, seed);
    if (name == "moe_concentric") return moe_concentric(input_dim, task, seed);
    if (name == "basis2d") return basis2d(input_dim, task, seed);
    throw ArgumentError("unknown preset '" + name + "'");
}

PresetBuild build_moe_single_expert(std::size_t expert_index, std::uint64_t seed) {
    if (expert_index > 3) throw ArgumentError("moe expert index must be 0..3");
    Rng rng(seed);
    NodeVec features = moe_features(rng);

    NodeVec experts = make_moe_experts(features, rng);
    NodeVec head;
    head.push_back(std::move(experts[expert_index]));

    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.push_back(std::make_unique<ParallelLayer>(std::move(features), CombineMode::Concat));
    layers.push_back(std::make_unique<SequentialLayer>(std::move(head)));

    PresetBuild out;
    out.network = std::make_unique<Network>(std::move(layers));
    out.loss = LossKind::MSE;
    out.config = moe_config(seed);
    return out;
}

} // namespace cfn
