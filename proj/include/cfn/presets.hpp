#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cfn/metrics.hpp"
#include "cfn/network.hpp"
#include "cfn/train.hpp"

namespace cfn {

// A ready-to-train model: network with parameters already initialized from
// the seed, plus the loss and training configuration the preset prescribes.
// standardize marks presets whose protocol scales features to zero mean and
// unit variance; the synthetic-geometry and symbolic-regression presets train
// in raw units so their learned parameters stay directly interpretable.
struct PresetBuild {
    std::unique_ptr<Network> network;
    LossKind loss = LossKind::MSE;
    TrainConfig config;
    bool standardize = false;
};

std::vector<std::string> preset_names();

// num_classes is the head width for multiclass tasks and ignored otherwise.
PresetBuild build_preset(const std::string& name, std::size_t input_dim, Task task,
                         std::size_t num_classes, std::uint64_t seed);

// The moe_concentric feature layer with a single expert as the whole head,
// for measuring how much the gated mixture buys over one expert alone.
PresetBuild build_moe_single_expert(std::size_t expert_index, std::uint64_t seed);

} // namespace cfn
