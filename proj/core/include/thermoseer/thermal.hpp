#pragma once

#include <span>

#include "thermoseer/types.hpp"

namespace thermoseer {

/// Global time at which material is deposited at `axial_distance` on `layer`:
/// (layer-1)*t_layer + sum of dwell over the lower layers + d/TS.
double deposition_time(const DwellSchedule& schedule, const ProcessSettings& settings,
                       int layer, double axial_distance);

/// Duration of curve k of any point on layer i: t_layer + dwell[i+k-1].
double curve_duration(const DwellSchedule& schedule, const ProcessSettings& settings,
                      int layer, int curve_index);

MappingFeatures mapping_features(const ProcessSettings& settings, const DwellSchedule& schedule,
                                 int source_layer);

/// Mean relative absolute error over all samples (REOP). Both profiles must
/// hold five curves of identical length; every truth sample must be > 0.
double reop(const Profile& predicted, const Profile& truth);

/// Same metric over flat sample arrays.
double reop(std::span<const double> predicted, std::span<const double> truth);

/// Arc energy per bead volume, J/mm^3, with process efficiency 0.85 and
/// current/voltage fitted as linear functions of the wire feed rate.
double energy_per_volume(double wire_feed_rate, double layer_thickness, double layer_length,
                         double layer_width);

/// Arc current (A) and voltage (V) fits used by energy_per_volume.
double arc_current(double wire_feed_rate) noexcept;
double arc_voltage(double wire_feed_rate) noexcept;

}  // namespace thermoseer
