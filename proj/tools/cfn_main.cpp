#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfn/data.hpp"
#include "cfn/error.hpp"
#include "cfn/io.hpp"
#include "cfn/metrics.hpp"
#include "cfn/presets.hpp"
#include "cfn/serialize.hpp"
#include "cfn/train.hpp"

namespace {

using cfn::Task;
using nlohmann::ordered_json;

std::filesystem::path sibling_path(std::filesystem::path base, const std::string& suffix) {
    base.replace_extension();
    return std::filesystem::path(base.string() + suffix);
}

ordered_json config_to_json(const cfn::TrainConfig& c) {
    ordered_json j;
    j["learning_rate"] = c.learning_rate;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["eps"] = c.eps;
    j["clip_norm"] = c.clip_norm;
    j["l2_lambda"] = c.l2_lambda;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["patience"] = c.patience;
    j["lr_decay_factor"] = c.lr_decay_factor;
    j["lr_decay_every"] = c.lr_decay_every;
    j["seed"] = c.seed;
    return j;
}

cfn::Matrix softmax_rows(const cfn::Matrix& logits) {
    cfn::Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double hi = logits(r, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) hi = std::max(hi, logits(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            out(r, c) = std::exp(logits(r, c) - hi);
            z += out(r, c);
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) /= z;
    }
    return out;
}

// Task metrics on already-scaled inputs: RMSE for regression, accuracy plus
// AUC (one-vs-rest macro for multiclass) for classification.
ordered_json compute_metrics(const cfn::Network& net, const cfn::Matrix& x_scaled,
                             const cfn::Matrix& y, Task task) {
    ordered_json m;
    const cfn::Matrix pred = net.predict(x_scaled);
    switch (task) {
    case Task::Regression:
        m["rmse"] = cfn::rmse(pred, y);
        break;
    case Task::Binary: {
        m["accuracy"] = cfn::accuracy(pred, y, task);
        std::vector<double> scores(pred.rows());
        std::vector<int> labels(pred.rows());
        for (std::size_t r = 0; r < pred.rows(); ++r) {
            scores[r] = pred(r, 0);
            labels[r] = static_cast<int>(y(r, 0));
        }
        m["auc"] = cfn::roc_auc(scores, labels);
        break;
    }
    case Task::Multiclass: {
        const cfn::Matrix probs = softmax_rows(pred);
        m["accuracy"] = cfn::accuracy(probs, y, task);
        std::vector<int> labels(y.rows());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            labels[r] = static_cast<int>(cfn::argmax_row(y, r));
        }
        m["auc"] = cfn::roc_auc_ovr(probs, labels);
        break;
    }
    }
    return m;
}

void print_metrics_text(const ordered_json& metrics, std::ostream& os) {
    for (const auto& [key, value] : metrics.items()) {
        os << "  " << key << ": " << value.dump() << "\n";
    }
}

// Sinusoid parameters in canonical form when the model is a lone sinusoid.
ordered_json learned_sinusoid_json(const cfn::Network& net) {
    if (net.layers().size() != 1) return nullptr;
    const auto* seq = dynamic_cast<const cfn::SequentialLayer*>(net.layers().front().get());
    if (seq == nullptr || seq->nodes().size() != 1) return nullptr;
    const auto* sin = dynamic_cast<const cfn::SinusoidalNode*>(seq->nodes().front().get());
    if (sin == nullptr) return nullptr;
    const auto canon = cfn::canonical_sinusoid(*sin);
    if (!canon) return nullptr;
    ordered_json j;
    j["amplitude"] = canon->amplitude;
    j["angular_frequency"] = canon->angular_frequency;
    j["phase"] = canon->phase;
    return j;
}

struct TrainFlags {
    std::string data;
    std::string target;
    std::string task_name;
    std::string preset;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 42;
    long long epochs = -1;
    double lr = -1.0;
    long long batch_size = -1;
    long long patience = -1;
    std::string out = "model.json";
    std::string format = "text";
};

struct TrainedRun {
    std::unique_ptr<cfn::Network> network;
    std::optional<cfn::Scaler> scaler; // presets that train on raw features carry none
    cfn::TrainConfig config;
    cfn::LossKind loss = cfn::LossKind::MSE;
    cfn::TrainResult result;
    cfn::Dataset heldout; // raw, unscaled
    ordered_json metrics;
    double train_seconds = 0.0;
    std::size_t n_train = 0;
};

TrainedRun run_training(const TrainFlags& flags, std::uint64_t run_seed) {
    const Task task = cfn::parse_task(flags.task_name);
    const cfn::Dataset ds = cfn::load_csv(flags.data, flags.target, task);
    auto [train_part, test_part] = cfn::split(ds, 0.2, flags.split_seed);

    TrainedRun run;
    cfn::PresetBuild build =
        cfn::build_preset(flags.preset, ds.x.cols(), task, ds.y.cols(), run_seed);
    if (build.standardize) run.scaler = cfn::fit_scaler(train_part.x);
    const cfn::Matrix train_x =
        run.scaler ? cfn::apply_scaler(*run.scaler, train_part.x) : train_part.x;
    const cfn::Matrix test_x =
        run.scaler ? cfn::apply_scaler(*run.scaler, test_part.x) : test_part.x;
    run.config = build.config;
    if (flags.epochs >= 0) run.config.epochs = static_cast<std::size_t>(flags.epochs);
    if (flags.lr > 0.0) run.config.learning_rate = flags.lr;
    if (flags.batch_size >= 0) run.config.batch_size = static_cast<std::size_t>(flags.batch_size);
    if (flags.patience >= 0) run.config.patience = static_cast<std::size_t>(flags.patience);

    const auto t0 = std::chrono::steady_clock::now();
    run.result = cfn::train(*build.network, train_x, train_part.y, test_x, test_part.y,
                            build.loss, run.config);
    run.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    run.metrics = compute_metrics(*build.network, test_x, test_part.y, task);
    run.network = std::move(build.network);
    run.loss = build.loss;
    run.heldout = std::move(test_part);
    run.n_train = train_x.rows();
    return run;
}

int cmd_train(const TrainFlags& flags) {
    const TrainedRun run = run_training(flags, flags.seed);

    ordered_json metadata;
    metadata["preset"] = flags.preset;
    metadata["task"] = flags.task_name;
    metadata["data"] = flags.data;
    metadata["target"] = flags.target;
    metadata["split_seed"] = flags.split_seed;
    metadata["train_config"] = config_to_json(run.config);
    cfn::save_model(*run.network, run.scaler ? &*run.scaler : nullptr, metadata, flags.out);

    std::string history = "epoch,train_loss,val_loss,lr\n";
    for (const auto& rec : run.result.history) {
        history += std::to_string(rec.epoch) + "," + cfn::format_double(rec.train_loss) + "," +
                   cfn::format_double(rec.val_loss) + "," + cfn::format_double(rec.lr) + "\n";
    }
    cfn::write_file_atomic(sibling_path(flags.out, ".history.csv"), history);
    cfn::save_csv(run.heldout, sibling_path(flags.out, ".heldout.csv").string());

    ordered_json doc;
    doc["command"] = "train";
    doc["preset"] = flags.preset;
    doc["task"] = flags.task_name;
    doc["data"] = flags.data;
    doc["target"] = flags.target;
    doc["seed"] = flags.seed;
    doc["split_seed"] = flags.split_seed;
    doc["loss"] = cfn::loss_kind_name(run.loss);
    doc["n_train"] = run.n_train;
    doc["n_test"] = run.heldout.size();
    doc["stopped_epoch"] = run.result.stopped_epoch;
    doc["best_epoch"] = run.result.best_epoch;
    doc["best_val_loss"] = run.result.best_val_loss;
    doc["metrics"] = run.metrics;
    const ordered_json sinusoid = learned_sinusoid_json(*run.network);
    if (!sinusoid.is_null()) doc["learned_sinusoid"] = sinusoid;
    cfn::write_file_atomic(sibling_path(flags.out, ".metrics.json"), doc.dump(2) + "\n");

    if (flags.format == "structured") {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "trained " << flags.preset << " on " << flags.data << " (" << run.n_train
                  << " train / " << run.heldout.size() << " held-out rows)\n";
        std::cout << "stopped at epoch " << run.result.stopped_epoch << ", best epoch "
                  << run.result.best_epoch << ", best validation loss "
                  << cfn::format_double(run.result.best_val_loss) << "\n";
        std::cout << "held-out metrics:\n";
        print_metrics_text(run.metrics, std::cout);
        if (!sinusoid.is_null()) {
            std::cout << "learned sinusoid:\n";
            std::cout << "  amplitude (A): " << cfn::format_double(sinusoid["amplitude"]) << "\n";
            std::cout << "  angular frequency (omega): "
                      << cfn::format_double(sinusoid["angular_frequency"]) << "\n";
            std::cout << "  phase (phi): " << cfn::format_double(sinusoid["phase"]) << "\n";
        }
        if (const auto expr = cfn::closed_form_expression(*run.network)) {
            std::cout << "closed form: " << *expr << "\n";
        }
        std::cout << "model: " << flags.out << "\n";
        std::cerr << "training took " << run.train_seconds << " s\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& target, const std::string& task_name,
                 const std::string& format) {
    const Task task = cfn::parse_task(task_name);
    cfn::ModelFile model = cfn::load_model(model_path);
    cfn::Dataset ds = cfn::load_csv(data_path, target, task);

    // Re-encode one-hot width to the model head so a file that happens to
    // miss the top class still lines up.
    if (task == Task::Multiclass && ds.y.cols() != model.network->output_dim()) {
        std::vector<int> labels = ds.labels();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (static_cast<std::size_t>(labels[i]) >= model.network->output_dim()) {
                throw cfn::ShapeError("evaluate: label " + std::to_string(labels[i]) +
                                      " outside the model's " +
                                      std::to_string(model.network->output_dim()) + " classes");
            }
        }
        ds.y = cfn::one_hot(labels, model.network->output_dim());
    }

    const cfn::Matrix x = model.scaler ? cfn::apply_scaler(*model.scaler, ds.x) : ds.x;
    const ordered_json metrics = compute_metrics(*model.network, x, ds.y, task);

    ordered_json doc;
    doc["command"] = "evaluate";
    doc["model"] = model_path;
    doc["data"] = data_path;
    doc["task"] = task_name;
    doc["n"] = ds.size();
    doc["metrics"] = metrics;

    if (format == "structured") {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "evaluated " << model_path << " on " << data_path << " (" << ds.size()
                  << " rows)\n";
        print_metrics_text(metrics, std::cout);
    }
    return 0;
}

int cmd_report(const std::string& model_path, const std::string& format) {
    const cfn::ModelFile model = cfn::load_model(model_path);
    if (format == "structured") {
        std::cout << model.network->describe_json().dump(2) << "\n";
    } else {
        std::cout << model.network->describe_text();
    }
    return 0;
}

int cmd_benchmark(const TrainFlags& flags, std::size_t seeds) {
    ordered_json runs = ordered_json::array();
    std::map<std::string, std::vector<double>> by_metric;
    bool any_failed = false;

    for (std::size_t s = 1; s <= seeds; ++s) {
        ordered_json entry;
        entry["seed"] = s;
        try {
            const TrainedRun run = run_training(flags, s);
            entry["metrics"] = run.metrics;
            entry["stopped_epoch"] = run.result.stopped_epoch;
            entry["train_seconds"] = run.train_seconds;
            for (const auto& [key, value] : run.metrics.items()) {
                by_metric[key].push_back(value.get<double>());
            }
        } catch (const std::exception& e) {
            entry["error"] = e.what();
            any_failed = true;
        }
        runs.push_back(std::move(entry));
    }

    ordered_json aggregate;
    for (const auto& [key, values] : by_metric) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double sd = 0.0;
        if (values.size() > 1) {
            double sq = 0.0;
            for (double v : values) sq += (v - mean) * (v - mean);
            sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
        }
        aggregate[key] = {{"mean", mean}, {"sd", sd}};
    }

    ordered_json doc;
    doc["command"] = "benchmark";
    doc["preset"] = flags.preset;
    doc["task"] = flags.task_name;
    doc["data"] = flags.data;
    doc["target"] = flags.target;
    doc["split_seed"] = flags.split_seed;
    doc["seeds"] = seeds;
    if (seeds == 1) doc["note"] = "single seed: sd reported as 0 by convention";
    doc["runs"] = runs;
    doc["aggregate"] = aggregate;

    if (!flags.out.empty()) {
        cfn::write_file_atomic(flags.out, doc.dump(2) + "\n");
    }
    if (flags.format == "structured") {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "benchmark " << flags.preset << " on " << flags.data << " over " << seeds
                  << " seeds\n";
        for (const auto& entry : runs) {
            std::cout << "  seed " << entry["seed"].get<std::size_t>() << ": ";
            if (entry.contains("error")) {
                std::cout << "FAILED: " << entry["error"].get<std::string>() << "\n";
                continue;
            }
            for (const auto& [key, value] : entry["metrics"].items()) {
                std::cout << key << "=" << value.dump() << " ";
            }
            std::cout << "(" << entry["train_seconds"].get<double>() << " s)\n";
        }
        std::cout << "aggregate (mean +/- sd):\n";
        for (const auto& [key, value] : aggregate.items()) {
            std::cout << "  " << key << ": " << value["mean"].get<double>() << " +/- "
                      << value["sd"].get<double>() << "\n";
        }
    }
    return any_failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compositional function network toolkit"};
    app.require_subcommand(1);

    // generate
    std::string gen_kind;
    std::size_t gen_n = 500;
    std::size_t gen_classes = 3;
    double gen_noise = -1.0;
    std::uint64_t gen_seed = 0;
    double gen_amplitude = 2.0;
    double gen_omega = 1.5;
    double gen_phi = std::numbers::pi / 4.0;
    double gen_t_lo = 0.0;
    double gen_t_hi = 10.0;
    std::string gen_out;
    auto* generate = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    generate->add_option("kind", gen_kind, "shm, spiral or concentric")
        ->required()
        ->check(CLI::IsMember({"shm", "spiral", "concentric"}));
    generate->add_option("--n", gen_n, "rows (per class for spiral)");
    generate->add_option("--classes", gen_classes, "spiral class count");
    generate->add_option("--noise", gen_noise, "noise sd (default 0.1 shm, 0.2 spiral)");
    generate->add_option("--seed", gen_seed, "generator seed");
    generate->add_option("--amplitude", gen_amplitude, "shm amplitude");
    generate->add_option("--omega", gen_omega, "shm angular frequency");
    generate->add_option("--phi", gen_phi, "shm phase");
    generate->add_option("--t-lo", gen_t_lo, "shm time range start");
    generate->add_option("--t-hi", gen_t_hi, "shm time range end");
    generate->add_option("--out", gen_out, "output CSV path")->required();

    // train
    TrainFlags tf;
    auto* train = app.add_subcommand("train", "train a preset on a CSV dataset");
    train->add_option("--data", tf.data, "input CSV")->required();
    train->add_option("--target", tf.target, "target column name")->required();
    train->add_option("--task", tf.task_name, "regression, binary or multiclass")
        ->required()
        ->check(CLI::IsMember({"regression", "binary", "multiclass"}));
    train->add_option("--preset", tf.preset, "architecture preset")
        ->required()
        ->check(CLI::IsMember(cfn::preset_names()));
    train->add_option("--seed", tf.seed, "init and shuffle seed");
    train->add_option("--split-seed", tf.split_seed, "train/test split seed");
    train->add_option("--epochs", tf.epochs, "override preset epochs");
    train->add_option("--lr", tf.lr, "override preset learning rate");
    train->add_option("--batch-size", tf.batch_size, "override batch size (0 = full batch)");
    train->add_option("--patience", tf.patience, "override early-stopping patience");
    train->add_option("--out", tf.out, "model file path");
    train->add_option("--format", tf.format, "stdout format")
        ->check(CLI::IsMember({"text", "structured"}));

    // evaluate
    std::string eval_model;
    std::string eval_data;
    std::string eval_target;
    std::string eval_task;
    std::string eval_format = "text";
    auto* evaluate = app.add_subcommand("evaluate", "compute metrics for a saved model");
    evaluate->add_option("--model", eval_model, "model file")->required();
    evaluate->add_option("--data", eval_data, "input CSV")->required();
    evaluate->add_option("--target", eval_target, "target column name")->required();
    evaluate->add_option("--task", eval_task, "regression, binary or multiclass")
        ->required()
        ->check(CLI::IsMember({"regression", "binary", "multiclass"}));
    evaluate->add_option("--format", eval_format, "stdout format")
        ->check(CLI::IsMember({"text", "structured"}));

    // report
    std::string report_model;
    std::string report_format = "text";
    auto* report = app.add_subcommand("report", "render a model's interpretability report");
    report->add_option("--model", report_model, "model file")->required();
    report->add_option("--format", report_format, "stdout format")
        ->check(CLI::IsMember({"text", "structured"}));

    // benchmark
    TrainFlags bf;
    bf.out.clear();
    std::size_t bench_seeds = 5;
    auto* benchmark = app.add_subcommand("benchmark", "train over several seeds and aggregate");
    benchmark->add_option("--data", bf.data, "input CSV")->required();
    benchmark->add_option("--target", bf.target, "target column name")->required();
    benchmark->add_option("--task", bf.task_name, "regression, binary or multiclass")
        ->required()
        ->check(CLI::IsMember({"regression", "binary", "multiclass"}));
    benchmark->add_option("--preset", bf.preset, "architecture preset")
        ->required()
        ->check(CLI::IsMember(cfn::preset_names()));
    benchmark->add_option("--seeds", bench_seeds, "number of run seeds (1..N)")
        ->check(CLI::PositiveNumber);
    benchmark->add_option("--split-seed", bf.split_seed, "train/test split seed");
    benchmark->add_option("--epochs", bf.epochs, "override preset epochs");
    benchmark->add_option("--lr", bf.lr, "override preset learning rate");
    benchmark->add_option("--batch-size", bf.batch_size, "override batch size");
    benchmark->add_option("--patience", bf.patience, "override early-stopping patience");
    benchmark->add_option("--out", bf.out, "write the report document here");
    benchmark->add_option("--format", bf.format, "stdout format")
        ->check(CLI::IsMember({"text", "structured"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            cfn::Dataset ds;
            if (gen_kind == "shm") {
                const double noise = gen_noise < 0.0 ? 0.1 : gen_noise;
                ds = cfn::gen_shm(gen_n, gen_amplitude, gen_omega, gen_phi, noise, gen_t_lo,
                                  gen_t_hi, gen_seed);
            } else if (gen_kind == "spiral") {
                const double noise = gen_noise < 0.0 ? 0.2 : gen_noise;
                ds = cfn::gen_spiral(gen_n, gen_classes, noise, gen_seed);
            } else {
                ds = cfn::gen_concentric(gen_n, gen_seed);
            }
            cfn::save_csv(ds, gen_out);
            std::cout << "wrote " << ds.size() << " rows to " << gen_out << "\n";
            return 0;
        }
        if (train->parsed()) return cmd_train(tf);
        if (evaluate->parsed()) {
            return cmd_evaluate(eval_model, eval_data, eval_target, eval_task, eval_format);
        }
        if (report->parsed()) return cmd_report(report_model, report_format);
        if (benchmark->parsed()) return cmd_benchmark(bf, bench_seeds);
    } catch (const cfn::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
