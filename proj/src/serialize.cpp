#include "cfn/serialize.hpp"

#include <map>
#include <utility>

#include "cfn/error.hpp"
#include "cfn/io.hpp"

namespace cfn {

namespace {

const nlohmann::ordered_json& field(const nlohmann::ordered_json& j, const char* key,
                                    const std::string& context) {
    const auto it = j.find(key);
    if (it == j.end()) throw IoError("model: " + context + ": missing field '" + key + "'");
    return *it;
}

Matrix matrix_from_rows(const nlohmann::ordered_json& rows, const std::string& context) {
    if (!rows.is_array() || rows.empty()) {
        throw IoError("model: " + context + ": expected an array of rows");
    }
    const std::size_t cols = rows[0].size();
    Matrix out(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) {
            throw ShapeError("model: " + context + ": row " + std::to_string(r) + " has " +
                             std::to_string(rows[r].size()) + " entries, row 0 has " +
                             std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = rows[r][c].get<double>();
    }
    return out;
}

std::map<std::string, NodeFactory, std::less<>> make_builtin_registry() {
    std::map<std::string, NodeFactory, std::less<>> reg;

    reg["linear"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "linear").get<std::size_t>();
        const auto out = field(j, "output_dim", "linear").get<std::size_t>();
        const auto trainable = field(j, "trainable", "linear").get<bool>();
        const auto& params = field(j, "params", "linear");
        auto node = std::make_unique<LinearNode>(in, out, trainable);
        Matrix w = matrix_from_rows(field(params, "weights", "linear"), "linear weights");
        node->assign(std::move(w), field(params, "bias", "linear").get<std::vector<double>>());
        return node;
    };

    reg["gaussian"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "gaussian").get<std::size_t>();
        const auto& params = field(j, "params", "gaussian");
        auto node = std::make_unique<GaussianNode>(in);
        node->assign(field(params, "center", "gaussian").get<std::vector<double>>(),
                     field(params, "log_width", "gaussian").get<double>());
        return node;
    };

    reg["sigmoid"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "sigmoid").get<std::size_t>();
        const auto& params = field(j, "params", "sigmoid");
        auto node = std::make_unique<SigmoidNode>(in);
        node->assign(field(params, "direction", "sigmoid").get<std::vector<double>>(),
                     field(params, "offset", "sigmoid").get<double>(),
                     field(params, "steepness", "sigmoid").get<double>());
        return node;
    };

    reg["polynomial"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "polynomial").get<std::size_t>();
        const auto& params = field(j, "params", "polynomial");
        const auto degree = field(params, "degree", "polynomial").get<std::size_t>();
        auto node = std::make_unique<PolynomialNode>(in, degree);
        node->assign(field(params, "direction", "polynomial").get<std::vector<double>>(),
                     field(params, "coefficients", "polynomial").get<std::vector<double>>());
        return node;
    };

    reg["sinusoidal"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "sinusoidal").get<std::size_t>();
        const auto& params = field(j, "params", "sinusoidal");
        auto node = std::make_unique<SinusoidalNode>(in);
        node->assign(field(params, "amplitude", "sinusoidal").get<double>(),
                     field(params, "angular_frequency", "sinusoidal").get<double>(),
                     field(params, "phase", "sinusoidal").get<double>(),
                     field(params, "direction", "sinusoidal").get<std::vector<double>>());
        return node;
    };

    reg["relu"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "relu").get<std::size_t>();
        return std::make_unique<ReluNode>(in);
    };

    reg["exponential"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "exponential").get<std::size_t>();
        const auto& params = field(j, "params", "exponential");
        auto node = std::make_unique<ExponentialNode>(
            in, field(params, "clamp_hi", "exponential").get<double>());
        node->assign(field(params, "direction", "exponential").get<std::vector<double>>(),
                     field(params, "offset", "exponential").get<double>());
        return node;
    };

    reg["step"] = [](const nlohmann::ordered_json& j) -> std::unique_ptr<FunctionNode> {
        const auto in = field(j, "input_dim", "step").get<std::size_t>();
        const auto& params = field(j, "params", "step");
        auto node = std::make_unique<StepNode>(in);
        node->assign(field(params, "direction", "step").get<std::vector<double>>(),
                     field(params, "offset", "step").get<double>(),
                     field(params, "log_sharpness", "step").get<double>());
        return node;
    };

    return reg;
}

std::map<std::string, NodeFactory, std::less<>>& registry() {
    static std::map<std::string, NodeFactory, std::less<>> reg = make_builtin_registry();
    return reg;
}

std::vector<std::unique_ptr<FunctionNode>> nodes_from_json(const nlohmann::ordered_json& arr,
                                                           const std::string& context) {
    if (!arr.is_array()) throw IoError("model: " + context + ": expected a node array");
    std::vector<std::unique_ptr<FunctionNode>> nodes;
    nodes.reserve(arr.size());
    for (const auto& node_json : arr) nodes.push_back(node_from_json(node_json));
    return nodes;
}

} // namespace

void register_node_kind(const std::string& name, NodeFactory factory) {
    if (!factory) throw ArgumentError("register_node_kind: null factory for '" + name + "'");
    auto [it, inserted] = registry().emplace(name, std::move(factory));
    if (!inserted) throw UsageError("node kind '" + name + "' already registered");
}

std::unique_ptr<FunctionNode> node_from_json(const nlohmann::ordered_json& node_json) {
    const auto kind = field(node_json, "kind", "node").get<std::string>();
    const auto it = registry().find(kind);
    if (it == registry().end()) throw RegistryError("unknown node kind '" + kind + "'");
    std::unique_ptr<FunctionNode> node;
    try {
        node = it->second(node_json);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model: node kind '" + kind + "': " + e.what());
    }
    const auto out = field(node_json, "output_dim", kind).get<std::size_t>();
    if (node->output_dim() != out) {
        throw ShapeError("model: node kind '" + kind + "': output_dim " + std::to_string(out) +
                         " does not match the reconstructed node's " +
                         std::to_string(node->output_dim()));
    }
    return node;
}

std::unique_ptr<CompositionLayer> layer_from_json(const nlohmann::ordered_json& layer_json) {
    const auto kind = field(layer_json, "layer_kind", "layer").get<std::string>();
    try {
        if (kind == "sequential") {
            return std::make_unique<SequentialLayer>(
                nodes_from_json(field(layer_json, "nodes", kind), kind));
        }
        if (kind == "parallel") {
            const auto mode =
                combine_mode_from_name(field(layer_json, "combine", kind).get<std::string>());
            auto layer = std::make_unique<ParallelLayer>(
                nodes_from_json(field(layer_json, "nodes", kind), kind), mode);
            if (mode == CombineMode::WeightedSum) {
                layer->set_combine_weights(
                    field(layer_json, "weights", kind).get<std::vector<double>>());
            }
            return layer;
        }
        if (kind == "conditional") {
            return std::make_unique<ConditionalLayer>(
                nodes_from_json(field(layer_json, "condition_nodes", kind), kind),
                nodes_from_json(field(layer_json, "function_nodes", kind), kind),
                field(layer_json, "epsilon", kind).get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model: layer kind '" + kind + "': " + e.what());
    }
    throw IoError("model: unknown layer kind '" + kind + "'");
}

std::unique_ptr<Network> network_from_json(const nlohmann::ordered_json& network_json) {
    const auto& layers_json = field(network_json, "layers", "network");
    if (!layers_json.is_array() || layers_json.empty()) {
        throw IoError("model: network has no layers");
    }
    std::vector<std::unique_ptr<CompositionLayer>> layers;
    layers.reserve(layers_json.size());
    for (const auto& layer_json : layers_json) layers.push_back(layer_from_json(layer_json));
    return std::make_unique<Network>(std::move(layers));
}

nlohmann::ordered_json model_to_json(const Network& net, const Scaler* scaler,
                                     const nlohmann::ordered_json& metadata) {
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["metadata"] = metadata.is_null() ? nlohmann::ordered_json::object() : metadata;
    if (scaler != nullptr) {
        nlohmann::ordered_json s;
        s["means"] = scaler->means;
        s["stds"] = scaler->stds;
        j["scaler"] = std::move(s);
    }
    j["network"] = net.describe_json();
    return j;
}

void save_model(const Network& net, const Scaler* scaler,
                const nlohmann::ordered_json& metadata, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json(net, scaler, metadata).dump(2) + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("model: cannot parse " + path.string() + ": " + e.what());
    }
    const auto& version_json = field(doc, "format_version", "document");
    if (!version_json.is_number_integer()) {
        throw IoError("model: format_version must be an integer");
    }
    const int version = version_json.get<int>();
    if (version != kModelFormatVersion) {
        throw VersionError("model format version " + std::to_string(version) +
                           "; this build reads version " + std::to_string(kModelFormatVersion));
    }

    ModelFile out;
    out.metadata = doc.contains("metadata") ? doc["metadata"] : nlohmann::ordered_json::object();
    if (doc.contains("scaler")) {
        Scaler s;
        try {
            s.means = field(doc["scaler"], "means", "scaler").get<std::vector<double>>();
            s.stds = field(doc["scaler"], "stds", "scaler").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("model: scaler: ") + e.what());
        }
        if (s.means.size() != s.stds.size()) {
            throw ShapeError("model: scaler has " + std::to_string(s.means.size()) +
                             " means and " + std::to_string(s.stds.size()) + " stds");
        }
        out.scaler = std::move(s);
    }
    out.network = network_from_json(field(doc, "network", "document"));
    return out;
}

} // namespace cfn
