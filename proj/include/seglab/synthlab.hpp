#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seglab/field.hpp"
#include "seglab/grad.hpp"
#include "seglab/losses.hpp"

namespace seglab {

/// Synthetic segmentation scenarios: nested-blob label layouts sized to
/// target proportions, Gaussian class features. Everything is
/// deterministic given the seed (splitmix64 streams).
struct ScenarioSpec {
    std::string name; // binary_imbalanced | multiclass_diverse | marginal_only
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t num_classes = 2;
    std::vector<double> target_proportions;
    std::size_t feature_dim = 4;
    double class_separation = 1.0; // pairwise distance between class means
    double noise_sigma = 1.0;
    std::uint64_t seed = 1;

    static ScenarioSpec preset(const std::string& name, std::uint64_t seed = 1);
    std::string to_json() const;
    static ScenarioSpec from_json(const std::string& text);
};

struct Dataset {
    std::size_t feature_dim = 0;
    std::vector<double> features; // flat, pixel-major: i*D+d
    LabelField labels;
};

Dataset make_scenario(const ScenarioSpec& spec);

/// Per-pixel linear model: logits z_i = W f_i + b.
struct Model {
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;
    std::vector<double> weights; // K*D
    std::vector<double> bias;    // K
};

/// Small Gaussian weights, zero bias; stream "model-init" of the seed.
Model init_model(std::size_t num_classes, std::size_t feature_dim,
                 std::uint64_t seed);

LogitField model_logits(const Model& model, const Dataset& data);

/// Hard-argmax overlap metrics. Classes absent from both the prediction
/// and the ground truth are excluded from the means (and flagged);
/// classes absent from the ground truth only score 0.
struct Metrics {
    std::vector<double> dsc_per_class;
    std::vector<double> iou_per_class;
    std::vector<bool> class_scored; // false = absent everywhere, excluded
    double mean_dsc = 0.0;
    double mean_iou = 0.0;
    double marginal_l1_error = 0.0; // l1_marginal(y, p-hat), soft marginal
    bool any_class_excluded = false;
};

Metrics evaluate(const ProbField& p, const LabelField& g);

enum class TrainStatus { completed, diverged };

struct TraceRow {
    std::size_t iteration = 0; // 1-based, counts applied updates
    double loss = 0.0;
    std::vector<double> marginal;
    std::vector<double> dsc;
    double mean_iou = 0.0;
};

struct TrainTrace {
    std::vector<TraceRow> rows;
    Model final_model;
    TrainStatus status = TrainStatus::completed;
};

/// Deterministic full-batch gradient descent. Each row reflects the model
/// after that iteration's update. A non-finite loss or gradient aborts
/// with status diverged and the partial trace.
TrainTrace train(const Model& model0, const LossSpec& spec, const Dataset& data,
                 double lr = 0.02, std::size_t epochs = 500,
                 double tau = kDefaultTau);

struct SweepRow {
    std::string loss;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    TrainStatus status = TrainStatus::completed;
    double final_loss = 0.0;
    Metrics metrics;
    std::vector<double> final_marginal;
};

struct SweepOptions {
    double lr = 0.02;
    std::size_t epochs = 500;
    double tau = kDefaultTau;
    // 0 or 1 = sequential; >1 = worker threads over independent runs;
    // output ordering is canonical either way
    unsigned threads = 1;
};

/// One run per (loss, lambda, seed), ordered canonically by the input
/// lists regardless of execution schedule. Diverged runs are flagged,
/// not dropped.
std::vector<SweepRow> sweep(const ScenarioSpec& scenario,
                            const std::vector<std::string>& losses,
                            const std::vector<double>& lambdas,
                            const std::vector<std::uint64_t>& seeds,
                            const SweepOptions& options = {});

} // namespace seglab
