#include "thermoseer/thermal.hpp"

#include <cmath>
#include <sstream>

#include "thermoseer/errors.hpp"

namespace thermoseer {

namespace {

void check_layer(const ProcessSettings& settings, int layer, const char* op) {
    if (layer < 1 || layer > settings.num_layers) {
        std::ostringstream os;
        os << op << ": layer " << layer << " outside [1, " << settings.num_layers << "]";
        fail(ErrorKind::Domain, os.str());
    }
}

}  // namespace

double deposition_time(const DwellSchedule& schedule, const ProcessSettings& settings, int layer,
                       double axial_distance) {
    check_layer(settings, layer, "deposition_time");
    if (!(axial_distance >= 0.0) || axial_distance > settings.layer_length) {
        std::ostringstream os;
        os << "deposition_time: axial_distance " << axial_distance << " mm outside [0, "
           << settings.layer_length << "]";
        fail(ErrorKind::Domain, os.str());
    }
    double t = 0.0;
    for (int m = 1; m < layer; ++m) {
        t += settings.layer_print_time + schedule.dwell(m);
    }
    return t + axial_distance / settings.travel_speed;
}

double curve_duration(const DwellSchedule& schedule, const ProcessSettings& settings, int layer,
                      int curve_index) {
    check_layer(settings, layer, "curve_duration");
    if (curve_index < 1 || curve_index > kCurvesPerProfile) {
        fail(ErrorKind::Domain, "curve_duration: curve_index outside [1, 5]");
    }
    const int dwell_layer = layer + curve_index - 1;
    if (dwell_layer > settings.num_layers || dwell_layer > schedule.num_layers()) {
        std::ostringstream os;
        os << "curve_duration: curve " << curve_index << " of layer " << layer
           << " needs dwell of layer " << dwell_layer << " beyond the top layer " << settings.num_layers;
        fail(ErrorKind::Domain, os.str());
    }
    return settings.layer_print_time + schedule.dwell(dwell_layer);
}

MappingFeatures mapping_features(const ProcessSettings& settings, const DwellSchedule& schedule,
                                 int source_layer) {
    check_layer(settings, source_layer, "mapping_features");
    return MappingFeatures{settings.layer_print_time, schedule.dwell(source_layer),
                           settings.deposition_rate, source_layer * settings.layer_thickness};
}

double reop(std::span<const double> predicted, std::span<const double> truth) {
    require(predicted.size() == truth.size() && !truth.empty(), ErrorKind::Shape,
            "reop: predicted and truth must have the same nonzero length");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!(truth[i] > 0.0)) {
            std::ostringstream os;
            os << "reop: truth sample " << i << " is " << truth[i] << " (must be > 0)";
            fail(ErrorKind::Metric, os.str());
        }
        sum += std::abs(predicted[i] - truth[i]) / truth[i];
    }
    return sum / static_cast<double>(truth.size());
}

double reop(const Profile& predicted, const Profile& truth) {
    require(predicted.samples() == truth.samples(), ErrorKind::Shape,
            "reop: profiles must share N");
    double sum = 0.0;
    std::size_t count = 0;
    for (int k = 1; k <= kCurvesPerProfile; ++k) {
        const auto& p = predicted.curve(k).temps();
        const auto& t = truth.curve(k).temps();
        sum += reop(p, t) * static_cast<double>(t.size());
        count += t.size();
    }
    return sum / static_cast<double>(count);
}

double arc_current(double wire_feed_rate) noexcept { return 1.22 * wire_feed_rate + 5.2444; }

double arc_voltage(double wire_feed_rate) noexcept { return 27.267 * wire_feed_rate + 10.556; }

double energy_per_volume(double wire_feed_rate, double layer_thickness, double layer_length,
                         double layer_width) {
    constexpr double kProcessEfficiency = 0.85;
    const double bead_volume = layer_width * layer_length * layer_thickness;
    if (!(bead_volume > 0.0)) {
        fail(ErrorKind::Domain, "energy_per_volume: bead volume must be > 0");
    }
    require(wire_feed_rate >= 0.0, ErrorKind::Domain, "energy_per_volume: wire_feed_rate must be >= 0");
    return kProcessEfficiency * arc_current(wire_feed_rate) * arc_voltage(wire_feed_rate) / bead_volume;
}

}  // namespace thermoseer
