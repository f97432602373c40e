#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermoseer/types.hpp"

namespace thermoseer {

/// Adam training schedule for the mapping model.
struct TrainConfig {
    int epochs = 500;
    int batch_size = 256;
    double initial_lr = 0.001;
    double lr_decay_ratio = 0.5;
    std::vector<int> lr_decay_epochs{100, 200, 300, 400};
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;

    void validate() const;
    /// Learning rate used during epoch `epoch` (0-based): the initial rate
    /// multiplied by the decay ratio once for every decay epoch already completed.
    double lr_at(int epoch) const;
};

/// Input scaling: curves divided by temp_scale, features z-scored.
struct FeatureScaler {
    double temp_scale = 1000.0;
    std::array<double, 4> feature_mean{0.0, 0.0, 0.0, 0.0};
    std::array<double, 4> feature_std{1.0, 1.0, 1.0, 1.0};
    bool fitted = false;

    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

struct TrainingMeta {
    int epochs_run = 0;
    double final_loss = 0.0;

    friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

/// Fully connected network with a residual connection:
///   C' = temp_scale * FCN([C / temp_scale, z(features)]) + C
/// FCN = Linear(N+4, 3N) ReLU, Linear(3N, 6N) ReLU, Linear(6N, 12N) ReLU,
///       Linear(12N, 6N) ReLU, Linear(6N, 3N) ReLU, Dropout(0.1), Linear(3N, N).
struct MappingModel {
    int n = 0;
    std::vector<Eigen::MatrixXd> weights;  // weights[l] is out x in
    std::vector<Eigen::VectorXd> biases;
    double dropout_rate = 0.1;
    FeatureScaler scaler;
    std::uint64_t seed = 0;
    TrainingMeta meta;

    /// Output widths of the six affine maps: 3N, 6N, 12N, 6N, 3N, N.
    std::vector<int> layer_widths() const;
    std::size_t affine_count() const noexcept { return weights.size(); }

    /// Flat parameter access in checkpoint order: per affine map, weights
    /// row-major followed by biases.
    double& parameter(std::size_t flat);
    double parameter(std::size_t flat) const;
};

/// One supervised curve pair: lower-layer curve k plus features, and the
/// upper-layer curve k truncated to the lower curve's duration.
struct CurvePairSample {
    Curve input;
    MappingFeatures features;
    Curve target;
};

struct TrainResult {
    MappingModel model;
    std::vector<double> loss_history;  // per-epoch MSE on scaled targets
    std::vector<double> lr_history;    // learning rate used in each epoch
};

/// Parameter gradient in the same flat order as MappingModel::parameter.
using FlatGradient = std::vector<double>;

MappingModel init_model(int n, std::uint64_t seed);

std::size_t param_count(const MappingModel& model);

/// Single-curve forward pass. Dropout (inverted scaling) is active only when
/// train_mode is set, and then draws from rng.
Curve forward(const MappingModel& model, const Curve& input_curve, const MappingFeatures& features,
              bool train_mode = false, std::mt19937_64* rng = nullptr);

/// Inference over many curves in one batched pass.
std::vector<Curve> forward_batch(const MappingModel& model, std::span<const Curve> inputs,
                                 std::span<const MappingFeatures> features);

TrainResult train(MappingModel model, std::span<const CurvePairSample> samples, const TrainConfig& config);

/// Same procedure as train starting from pretrained weights; scaler statistics
/// of an already fitted model are kept.
TrainResult finetune(const MappingModel& pretrained, std::span<const CurvePairSample> samples,
                     const TrainConfig& config);

/// Folds forward over the feature sequence (layer i -> i+1 -> ... -> i+M).
Curve recursive_predict(const MappingModel& model, const Curve& start_curve,
                        std::span<const MappingFeatures> feature_sequence);

/// Mean squared error on scaled targets with dropout disabled.
double batch_loss(const MappingModel& model, std::span<const CurvePairSample> samples);

/// Analytic gradient of batch_loss (dropout disabled).
FlatGradient loss_gradient(const MappingModel& model, std::span<const CurvePairSample> samples);

/// Fits the feature z-scoring statistics on the samples.
FeatureScaler fit_scaler(std::span<const CurvePairSample> samples, double temp_scale = 1000.0);

}  // namespace thermoseer
