#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thermoseer/mapping.hpp"
#include "thermoseer/reconstruct.hpp"
#include "thermoseer/types.hpp"

namespace thermoseer {

inline constexpr double kRoomTemperature = 25.0;  // °C
inline constexpr int kDefaultFieldPositions = 160;

struct ReconstructOptions {
    double energy_threshold = kDefaultEnergyThreshold;
    int n_hidden = kDefaultHiddenNodes;
    std::uint64_t elm_seed = 1;
};

/// Online prediction of layer i+1 from the measured profiles of layer i.
struct LayerPrediction {
    int layer = 0;
    std::vector<Profile> mapped_profiles;
    LayerReconstruction reconstruction;
    double map_seconds = 0.0;
    double reconstruct_seconds = 0.0;
    double elapsed = 0.0;
};

struct FieldFrame {
    double local_time = 0.0;          // s since the layer started printing
    std::vector<double> positions;    // mm
    std::vector<double> temps;        // °C
    std::vector<bool> extrapolated;   // outside the span of mapped points
};

struct PointScore {
    int layer = 0;
    int index = 0;
    double axial_distance = 0.0;
    double reop = 0.0;
};

struct LayerSummary {
    int layer = 0;
    int count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct EvalReport {
    std::vector<PointScore> scores;
    std::vector<LayerSummary> layers;
    LayerSummary overall;  // layer = 0
};

struct LayerTiming {
    int layer = 0;
    double map_seconds = 0.0;
    double reconstruct_seconds = 0.0;
    double total_seconds = 0.0;
};

/// Which points feed the online reconstruction and which are held out for scoring.
/// Empty lists select odd point indices as measured and even ones as evaluated.
struct BenchmarkOptions {
    std::vector<int> measured_points;
    std::vector<int> evaluated_points;
    ReconstructOptions reconstruct;
};

struct BenchmarkReport {
    EvalReport eval;
    std::vector<LayerTiming> timing;  // kept apart so reports stay reproducible
};

LayerPrediction predict_next_layer(const MappingModel& model, std::span<const Profile> measured,
                                   const ProcessSettings& settings, const DwellSchedule& schedule,
                                   const ReconstructOptions& options = {});

/// Predicts `target_layer` of a dataset from its lower layer; selected point
/// indices only when `points` is nonempty.
LayerPrediction predict_layer(const MappingModel& model, const WallDataset& dataset, int target_layer,
                              std::span<const int> points = {}, const ReconstructOptions& options = {});

Profile predict_point(const LayerPrediction& prediction, double axial_distance, const ProcessSettings& settings);

/// Partial-curve temperature field of the predicted layer at one local time.
FieldFrame render_field(const LayerPrediction& prediction, const ProcessSettings& settings, double local_time,
                        int n_positions = kDefaultFieldPositions);

/// Latest local time render_field can represent.
double field_horizon(const LayerPrediction& prediction);

/// Scores each prediction against the truth profile with the same (layer, index).
EvalReport evaluate(std::span<const Profile> predictions, std::span<const Profile> truth);

LayerSummary summarize(std::span<const double> values, int layer = 0);

/// Linear-interpolation quantile of values sorted ascending.
double quantile_sorted(std::span<const double> sorted, double q);

/// Single-step curve pairs (i, i+1) with both layers inside [first_layer, last_layer].
std::vector<CurvePairSample> extract_curve_pairs(const WallDataset& dataset, int first_layer, int last_layer,
                                                 std::span<const int> points = {});

/// Features of the layers i, i+1, ..., i+steps-1 for recursive prediction from layer i.
std::vector<MappingFeatures> feature_sequence(const WallDataset& dataset, int source_layer, int steps);

/// Predicts layers in `test_layers` from their lower layers and scores the held-out points.
BenchmarkReport run_benchmark(const MappingModel& model, const WallDataset& dataset,
                              std::span<const int> test_layers, const BenchmarkOptions& options = {});

/// Trains a freshly initialized model on curve pairs of the given layer span of every wall.
TrainResult train_on_walls(std::span<const WallDataset> walls, int first_layer, int last_layer,
                           const TrainConfig& config, std::uint64_t init_seed);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace thermoseer
