#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cfn/data.hpp"
#include "cfn/network.hpp"

namespace cfn {

inline constexpr int kModelFormatVersion = 1;

// Builds a node from its serialized form: an object holding "kind",
// "input_dim", "output_dim", "trainable" and the named "params".
using NodeFactory = std::function<std::unique_ptr<FunctionNode>(const nlohmann::ordered_json&)>;

// Extends load() with a new node kind. Built-in kinds are pre-registered;
// re-registering any name is a usage error.
void register_node_kind(const std::string& name, NodeFactory factory);

std::unique_ptr<FunctionNode> node_from_json(const nlohmann::ordered_json& node_json);
std::unique_ptr<CompositionLayer> layer_from_json(const nlohmann::ordered_json& layer_json);
std::unique_ptr<Network> network_from_json(const nlohmann::ordered_json& network_json);

struct ModelFile {
    std::unique_ptr<Network> network;
    std::optional<Scaler> scaler;
    nlohmann::ordered_json metadata; // saved verbatim, may be empty
};

nlohmann::ordered_json model_to_json(const Network& net, const Scaler* scaler,
                                     const nlohmann::ordered_json& metadata);

// Human-readable structured model document, written atomically. Numbers are
// rendered with round-trip precision, so identical models save byte-identically.
void save_model(const Network& net, const Scaler* scaler,
                const nlohmann::ordered_json& metadata, const std::filesystem::path& path);

ModelFile load_model(const std::filesystem::path& path);

} // namespace cfn
