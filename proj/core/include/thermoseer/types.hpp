#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace thermoseer {

/// Number of curves that make up a temperature profile.
inline constexpr int kCurvesPerProfile = 5;
/// Default number of evenly resampled temperatures per curve.
inline constexpr int kDefaultSamples = 100;
/// Absolute zero in degrees Celsius.
inline constexpr double kAbsoluteZero = -273.15;

/// Process settings of one unidirectionally printed thin wall.
///
/// Units: travel_speed mm/s, wire_feed_rate m/min, wire_diameter mm,
/// lengths mm, layer_print_time s, deposition_rate mm^3/s, interpass_target °C.
struct ProcessSettings {
    double travel_speed = 8.0;
    double wire_feed_rate = 3.0;
    double wire_diameter = 1.2;
    double layer_length = 160.0;
    double layer_width = 4.4;
    double layer_thickness = 1.5;
    double layer_print_time = 20.5;
    double deposition_rate = 52.8;
    double interpass_target = 200.0;
    int num_layers = 40;

    /// Throws ErrorKind::Domain naming the first offending field.
    void validate() const;

    /// Simulation-style settings: t_layer = L/TS + 0.5 and DR = width * l_t * TS.
    static ProcessSettings simulation(double travel_speed, double wire_feed_rate,
                                      double layer_thickness, int num_layers = 40);

    /// Experiment-style settings: DR derived from the wire, t_layer as measured.
    static ProcessSettings experiment(double travel_speed, double wire_feed_rate,
                                      double step_height, double layer_print_time,
                                      int num_layers = 40);
};

/// Volumetric deposition rate of a wire feed, mm^3/s.
double deposition_rate_from_wire(double wire_diameter_mm, double wire_feed_rate_m_per_min);

/// Per-layer dwell times in seconds; layer indices are 1-based.
class DwellSchedule {
public:
    DwellSchedule() = default;
    explicit DwellSchedule(std::vector<double> dwell);

    double dwell(int layer) const;
    int num_layers() const noexcept { return static_cast<int>(dwell_.size()); }
    const std::vector<double>& values() const noexcept { return dwell_; }
    bool nondecreasing() const noexcept;

private:
    std::vector<double> dwell_;
};

/// Identity of a point on the wall.
struct PointId {
    int layer = 1;                 // 1-based layer index
    double axial_distance = 0.0;   // mm from the layer's start boundary
    double relative_delay = 0.0;   // s, axial_distance / travel_speed
    int index = 0;                 // 1-based point slot on the layer, 0 when unlabeled

    static PointId at(int layer, double axial_distance, double travel_speed, int index = 0);

    friend bool operator==(const PointId&, const PointId&) = default;
};

/// N evenly resampled temperatures spanning `duration` seconds of local time.
class Curve {
public:
    Curve(std::vector<double> temps, double duration, int curve_index);

    const std::vector<double>& temps() const noexcept { return temps_; }
    std::span<const double> view() const noexcept { return temps_; }
    double duration() const noexcept { return duration_; }
    int index() const noexcept { return index_; }
    std::size_t size() const noexcept { return temps_.size(); }

    /// Local time of sample n.
    double time_of(std::size_t n) const noexcept;

    friend bool operator==(const Curve&, const Curve&) = default;

private:
    std::vector<double> temps_;
    double duration_;
    int index_;
};

/// The five ordered curves of one point.
class Profile {
public:
    Profile(PointId point, std::vector<Curve> curves);

    const PointId& point() const noexcept { return point_; }
    const std::vector<Curve>& curves() const noexcept { return curves_; }
    const Curve& curve(int k) const;  // 1-based
    std::size_t samples() const noexcept { return curves_.front().size(); }
    std::array<double, kCurvesPerProfile> durations() const;

    /// Same profile with its point identity replaced.
    Profile relabeled(PointId point) const;

    friend bool operator==(const Profile&, const Profile&) = default;

private:
    PointId point_;
    std::vector<Curve> curves_;
};

/// Complementary inputs of the mapping model.
struct MappingFeatures {
    double layer_print_time = 0.0;       // s
    double dwell_of_source_layer = 0.0;  // s
    double deposition_rate = 0.0;        // mm^3/s
    double relative_height = 0.0;        // mm

    std::array<double, 4> to_array() const noexcept {
        return {layer_print_time, dwell_of_source_layer, deposition_rate, relative_height};
    }

    friend bool operator==(const MappingFeatures&, const MappingFeatures&) = default;
};

/// All profiles of one wall plus the settings that produced them.
class WallDataset {
public:
    WallDataset(std::string wall_id, ProcessSettings settings, DwellSchedule schedule, int n);

    const std::string& wall_id() const noexcept { return wall_id_; }
    const ProcessSettings& settings() const noexcept { return settings_; }
    const DwellSchedule& schedule() const noexcept { return schedule_; }
    int samples() const noexcept { return n_; }

    std::map<std::string, std::string>& provenance() noexcept { return provenance_; }
    const std::map<std::string, std::string>& provenance() const noexcept { return provenance_; }

    /// Inserts or replaces the profile at (layer, index). Rejects mismatched N
    /// and layers outside [1, num_layers].
    void add(Profile profile);

    const std::vector<Profile>& profiles() const noexcept { return profiles_; }
    const Profile* find(int layer, int index) const;
    std::vector<Profile> layer(int layer) const;
    std::vector<int> layers() const;
    int points_per_layer() const;

private:
    std::string wall_id_;
    ProcessSettings settings_;
    DwellSchedule schedule_;
    int n_;
    std::map<std::string, std::string> provenance_;
    std::vector<Profile> profiles_;  // sorted by (layer, index)
};

}  // namespace thermoseer
