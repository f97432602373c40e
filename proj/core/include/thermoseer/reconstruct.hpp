#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermoseer/types.hpp"

namespace thermoseer {

/// Snapshot matrix of one layer: column j stacks the five curves of point j.
struct ProfileMatrix {
    Eigen::MatrixXd s;            // 5N x M
    std::vector<double> delays;   // relative delays, nondecreasing
    std::vector<PointId> points;  // column order
    std::array<double, kCurvesPerProfile> durations{};  // curve durations of the first column
    int n = 0;
    int layer = 0;
};

struct PodResult {
    Eigen::MatrixXd basis;         // 5N x m_star, orthonormal columns
    Eigen::MatrixXd coefficients;  // M x m_star, row j belongs to point j
    int m_star = 0;
    Eigen::VectorXd singular_values;  // nonincreasing, length M
    std::vector<double> energy;       // cumulative energy fraction after each basis
};

/// Single-hidden-layer extreme learning machine from relative delay to POD coefficients.
struct ElmModel {
    Eigen::VectorXd hidden_weights;  // N_h
    Eigen::VectorXd hidden_biases;   // N_h
    Eigen::MatrixXd output_weights;  // N_h x M*
    double input_mean = 0.0;
    double input_std = 1.0;
    Eigen::VectorXd output_mean;   // M*, empty means zero
    Eigen::VectorXd output_scale;  // M*, empty means one
    std::uint64_t seed = 0;

    int hidden() const noexcept { return static_cast<int>(hidden_weights.size()); }
    int outputs() const noexcept { return static_cast<int>(output_weights.cols()); }
    std::size_t param_count() const noexcept {
        return static_cast<std::size_t>(hidden()) * static_cast<std::size_t>(2 + outputs());
    }
    /// Hidden activations for a column of delays: rows are samples.
    Eigen::MatrixXd hidden_matrix(std::span<const double> delays) const;
};

/// Reduced-order model of one layer, immutable once built.
struct LayerReconstruction {
    int layer = 0;
    int n = 0;
    double travel_speed = 0.0;
    std::array<double, kCurvesPerProfile> durations{};
    Eigen::MatrixXd basis;
    Eigen::MatrixXd coefficients;
    int m_star = 0;
    Eigen::VectorXd singular_values;
    ElmModel elm;
};

inline constexpr int kDefaultHiddenNodes = 128;
inline constexpr double kDefaultEnergyThreshold = 0.99;

ProfileMatrix build_profile_matrix(std::span<const Profile> profiles);

/// Unstacks one 5N column into five curves with the given durations.
std::vector<Curve> unstack(const Eigen::Ref<const Eigen::VectorXd>& column, int n,
                           const std::array<double, kCurvesPerProfile>& durations);

/// Smallest prefix count whose cumulative energy reaches the threshold.
int select_rank(const Eigen::VectorXd& singular_values, double energy_threshold);

PodResult pod_decompose(const Eigen::MatrixXd& s, double energy_threshold = kDefaultEnergyThreshold);

ElmModel elm_train(std::span<const double> delays, const Eigen::MatrixXd& coefficients,
                   int n_hidden = kDefaultHiddenNodes, std::uint64_t seed = 1);

Eigen::VectorXd elm_predict(const ElmModel& elm, double delay);

LayerReconstruction build_layer_reconstruction(std::span<const Profile> profiles, double travel_speed,
                                               double energy_threshold = kDefaultEnergyThreshold,
                                               int n_hidden = kDefaultHiddenNodes, std::uint64_t seed = 1);

/// Profile of a point at the given relative delay: P' = U * elm(delay).
Profile reconstruct_profile(const LayerReconstruction& recon, double delay);

}  // namespace thermoseer
