#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "thermoseer/types.hpp"

namespace thermoseer {

/// Constants of the analytic thin-wall thermal oracle.
///
/// Curve k of a point on layer i follows
///   T(tau) = ambient + A_k exp(-tau / tau_c) + R_k exp((tau - D_k) / reheat_tau)
/// with tau_c = cool_tau0 (1 + cool_height_gain h_i)(1 - edge_gain exp(-d / edge_length)),
/// A_1 = (peak_base + dr_gain DR - ambient)(1 + position_gain (d/L - 1/2)),
/// R_k = reheat_gain reheat_decay^(k-1) A_1 and A_k = A_{k-1} exp(-D_{k-1}/tau_c) + R_{k-1}.
struct SynthParams {
    double ambient = 25.0;           // °C
    double peak_base = 1450.0;       // °C
    double cool_tau0 = 20.0;         // s
    double cool_height_gain = 0.02;  // 1/mm
    double reheat_tau = 1.0;         // s
    double reheat_decay = 0.55;      // per re-heat cycle
    double reheat_gain = 0.75;       // first re-heat amplitude relative to A_1
    double dr_gain = 0.4;            // °C per mm^3/s
    double position_gain = 0.06;     // relative peak rise from layer start to end
    double edge_gain = 0.1;          // faster cooling near the start boundary
    double edge_length = 15.0;       // mm
    double noise_sd = 0.0;           // °C, Gaussian
    double sample_period = 0.05;     // s, simulation output period; dwell is quantized to it
    std::uint64_t seed = 1;

    void validate() const;
};

/// Unsegmented temperature history of one point on the global time axis.
struct RawTrace {
    std::vector<double> times;  // s, strictly increasing at sample_period
    std::vector<double> temps;  // °C
    PointId point;
    double sample_period = 0.1;

    void validate() const;
};

/// Pyrometer artifacts applied to experiment-style data.
struct ExperimentStyle {
    double clamp_low = 150.0;
    double clamp_high = 1000.0;
    double noise_sd = 3.0;
    double jitter_mm = 2.0;  // uniform point-placement jitter, ± mm
};

/// Deterministic per-stream seed derived from a root seed and stream labels.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0);

/// Closed-form time for exponential cooling from t_end to target toward ambient.
/// Zero when the start temperature is already at or below the target.
double cooling_time(double tau_c, double t_end, double ambient, double target);

/// Analytic thermal history of one wall under fixed process settings.
class ThinWallOracle {
public:
    ThinWallOracle(const ProcessSettings& settings, const SynthParams& params);

    const ProcessSettings& settings() const noexcept { return settings_; }
    const SynthParams& params() const noexcept { return params_; }
    const DwellSchedule& schedule() const noexcept { return schedule_; }

    double cooling_tau(int layer, double axial_distance) const;
    double first_amplitude(double axial_distance) const;
    /// Temperature of the layer's last-deposited point when the layer finishes printing.
    double end_of_print_temperature(int layer) const;
    /// Analytic dwell before quantization to the sample period.
    double analytic_dwell(int layer) const;

    /// Temperature of curve k (1-based) at local time tau in [0, D_k].
    double temperature(int layer, double axial_distance, int curve_index, double tau) const;
    Curve curve(int layer, double axial_distance, int curve_index, int n) const;
    Profile profile(const PointId& point, int n) const;
    /// Samples curves 1..5 of the point from its deposition time on a fixed grid.
    RawTrace trace(int layer, double axial_distance, double sample_period) const;

    /// Highest layer whose five curves are fully defined.
    int last_profile_layer() const noexcept { return settings_.num_layers - kCurvesPerProfile; }

private:
    struct Cycle {
        double amplitude;
        double reheat;
        double duration;
    };
    std::vector<Cycle> cycles(int layer, double axial_distance) const;

    ProcessSettings settings_;
    SynthParams params_;
    DwellSchedule schedule_;
};

/// Dwell of `layer` such that its last-deposited point cools to the interpass target.
double solve_dwell(const SynthParams& params, const ProcessSettings& settings, int layer);

/// Points at d_j = j L / (M+1), j = 1..M.
std::vector<double> point_positions(const ProcessSettings& settings, int points_per_layer);

/// Simulation-style wall: profiles of M points on layers 1..num_layers-5.
WallDataset generate_wall(const ProcessSettings& settings, const SynthParams& params,
                          int points_per_layer, int n = kDefaultSamples,
                          const std::string& wall_id = "wall");

/// Experiment-style wall: jittered point placement, pyrometer noise and clamping.
WallDataset generate_experiment_wall(const ProcessSettings& settings, const SynthParams& params,
                                     int points_per_layer, const ExperimentStyle& style,
                                     int n = kDefaultSamples, const std::string& wall_id = "exp");

/// Adds zero-mean Gaussian noise, then clamps into [clamp_low, clamp_high].
RawTrace emulate_pyrometer(const RawTrace& trace, double clamp_low, double clamp_high,
                           double noise_sd, std::uint64_t seed);
Profile emulate_pyrometer(const Profile& profile, double clamp_low, double clamp_high,
                          double noise_sd, std::uint64_t seed);

}  // namespace thermoseer
