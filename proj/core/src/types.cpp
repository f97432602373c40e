#include "thermoseer/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "thermoseer/errors.hpp"

namespace thermoseer {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Coverage: return "coverage";
        case ErrorKind::Metric: return "metric";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Pairing: return "pairing";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::Horizon: return "horizon";
        case ErrorKind::Config: return "config";
        case ErrorKind::Data: return "data";
        case ErrorKind::Checkpoint: return "checkpoint";
    }
    return "unknown";
}

namespace {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << "process settings: " << field << " must be finite and > 0 (got " << value << ")";
        fail(ErrorKind::Domain, os.str());
    }
}

}  // namespace

void ProcessSettings::validate() const {
    require_positive(travel_speed, "travel_speed");
    require_positive(wire_feed_rate, "wire_feed_rate");
    require_positive(wire_diameter, "wire_diameter");
    require_positive(layer_length, "layer_length");
    require_positive(layer_width, "layer_width");
    require_positive(layer_thickness, "layer_thickness");
    require_positive(layer_print_time, "layer_print_time");
    require_positive(deposition_rate, "deposition_rate");
    require_positive(interpass_target, "interpass_target");
    if (num_layers < 1) {
        fail(ErrorKind::Domain, "process settings: num_layers must be >= 1");
    }
    if (layer_print_time < layer_length / travel_speed - 1e-9) {
        std::ostringstream os;
        os << "process settings: layer_print_time " << layer_print_time
           << " s is shorter than layer_length/travel_speed = " << layer_length / travel_speed << " s";
        fail(ErrorKind::Domain, os.str());
    }
}

ProcessSettings ProcessSettings::simulation(double travel_speed, double wire_feed_rate,
                                            double layer_thickness, int num_layers) {
    ProcessSettings s;
    s.travel_speed = travel_speed;
    s.wire_feed_rate = wire_feed_rate;
    s.layer_thickness = layer_thickness;
    s.layer_print_time = s.layer_length / travel_speed + 0.5;
    s.deposition_rate = s.layer_width * layer_thickness * travel_speed;
    s.num_layers = num_layers;
    s.validate();
    return s;
}

ProcessSettings ProcessSettings::experiment(double travel_speed, double wire_feed_rate,
                                            double step_height, double layer_print_time,
                                            int num_layers) {
    ProcessSettings s;
    s.travel_speed = travel_speed;
    s.wire_feed_rate = wire_feed_rate;
    s.layer_thickness = step_height;
    s.layer_print_time = layer_print_time;
    s.deposition_rate = deposition_rate_from_wire(s.wire_diameter, wire_feed_rate);
    s.num_layers = num_layers;
    s.validate();
    return s;
}

double deposition_rate_from_wire(double wire_diameter_mm, double wire_feed_rate_m_per_min) {
    const double radius = wire_diameter_mm / 2.0;
    constexpr double kWirePi = 3.14;
    return kWirePi * radius * radius * wire_feed_rate_m_per_min * 1000.0 / 60.0;
}

DwellSchedule::DwellSchedule(std::vector<double> dwell) : dwell_(std::move(dwell)) {
    for (std::size_t i = 0; i < dwell_.size(); ++i) {
        if (!(dwell_[i] >= 0.0) || !std::isfinite(dwell_[i])) {
            std::ostringstream os;
            os << "dwell schedule: dwell[" << i + 1 << "] must be finite and >= 0 (got " << dwell_[i]
               << ")";
            fail(ErrorKind::Domain, os.str());
        }
    }
}

double DwellSchedule::dwell(int layer) const {
    if (layer < 1 || layer > num_layers()) {
        std::ostringstream os;
        os << "dwell schedule: layer " << layer << " outside [1, " << num_layers() << "]";
        fail(ErrorKind::Domain, os.str());
    }
    return dwell_[static_cast<std::size_t>(layer - 1)];
}

bool DwellSchedule::nondecreasing() const noexcept {
    return std::is_sorted(dwell_.begin(), dwell_.end());
}

PointId PointId::at(int layer, double axial_distance, double travel_speed, int index) {
    require(travel_speed > 0.0, ErrorKind::Domain, "point: travel_speed must be > 0");
    require(layer >= 1, ErrorKind::Domain, "point: layer must be >= 1");
    require(axial_distance >= 0.0, ErrorKind::Domain, "point: axial_distance must be >= 0");
    return PointId{layer, axial_distance, axial_distance / travel_speed, index};
}

Curve::Curve(std::vector<double> temps, double duration, int curve_index)
    : temps_(std::move(temps)), duration_(duration), index_(curve_index) {
    require(temps_.size() >= 2, ErrorKind::Shape, "curve: needs at least 2 samples");
    require(duration_ > 0.0 && std::isfinite(duration_), ErrorKind::Domain,
            "curve: duration must be finite and > 0");
    require(index_ >= 1 && index_ <= kCurvesPerProfile, ErrorKind::Domain,
            "curve: curve_index must lie in [1, 5]");
    for (double t : temps_) {
        if (!std::isfinite(t) || !(t > kAbsoluteZero)) {
            std::ostringstream os;
            os << "curve " << index_ << ": temperature " << t << " is not finite or below absolute zero";
            fail(ErrorKind::Domain, os.str());
        }
    }
}

double Curve::time_of(std::size_t n) const noexcept {
    return duration_ * static_cast<double>(n) / static_cast<double>(temps_.size() - 1);
}

Profile::Profile(PointId point, std::vector<Curve> curves)
    : point_(point), curves_(std::move(curves)) {
    require(curves_.size() == kCurvesPerProfile, ErrorKind::Shape, "profile: needs exactly 5 curves");
    for (int k = 0; k < kCurvesPerProfile; ++k) {
        require(curves_[static_cast<std::size_t>(k)].index() == k + 1, ErrorKind::Shape,
                "profile: curve indices must be 1..5 in order");
        require(curves_[static_cast<std::size_t>(k)].size() == curves_.front().size(), ErrorKind::Shape,
                "profile: all curves must share N");
    }
}

const Curve& Profile::curve(int k) const {
    require(k >= 1 && k <= kCurvesPerProfile, ErrorKind::Domain, "profile: curve index outside [1, 5]");
    return curves_[static_cast<std::size_t>(k - 1)];
}

std::array<double, kCurvesPerProfile> Profile::durations() const {
    std::array<double, kCurvesPerProfile> out{};
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = curves_[k].duration();
    }
    return out;
}

Profile Profile::relabeled(PointId point) const {
    return Profile(point, curves_);
}

WallDataset::WallDataset(std::string wall_id, ProcessSettings settings, DwellSchedule schedule, int n)
    : wall_id_(std::move(wall_id)), settings_(settings), schedule_(std::move(schedule)), n_(n) {
    settings_.validate();
    require(n_ >= 2, ErrorKind::Shape, "dataset: N must be >= 2");
    require(schedule_.num_layers() >= settings_.num_layers, ErrorKind::Data,
            "dataset: dwell schedule shorter than num_layers");
}

void WallDataset::add(Profile profile) {
    const PointId& p = profile.point();
    if (static_cast<int>(profile.samples()) != n_) {
        std::ostringstream os;
        os << "dataset " << wall_id_ << ": profile at layer " << p.layer << " point " << p.index
           << " has N=" << profile.samples() << ", dataset N=" << n_;
        fail(ErrorKind::Shape, os.str());
    }
    if (p.layer < 1 || p.layer > settings_.num_layers) {
        std::ostringstream os;
        os << "dataset " << wall_id_ << ": profile layer " << p.layer << " outside [1, "
           << settings_.num_layers << "]";
        fail(ErrorKind::Domain, os.str());
    }
    auto key_less = [](const Profile& a, int layer, int index) {
        return a.point().layer < layer || (a.point().layer == layer && a.point().index < index);
    };
    auto it = std::lower_bound(profiles_.begin(), profiles_.end(), p,
                               [&](const Profile& a, const PointId& b) { return key_less(a, b.layer, b.index); });
    if (it != profiles_.end() && it->point().layer == p.layer && it->point().index == p.index) {
        *it = std::move(profile);
    } else {
        profiles_.insert(it, std::move(profile));
    }
}

const Profile* WallDataset::find(int layer, int index) const {
    for (const auto& profile : profiles_) {
        if (profile.point().layer == layer && profile.point().index == index) {
            return &profile;
        }
    }
    return nullptr;
}

std::vector<Profile> WallDataset::layer(int layer) const {
    std::vector<Profile> out;
    for (const auto& profile : profiles_) {
        if (profile.point().layer == layer) {
            out.push_back(profile);
        }
    }
    return out;
}

std::vector<int> WallDataset::layers() const {
    std::vector<int> out;
    for (const auto& profile : profiles_) {
        if (out.empty() || out.back() != profile.point().layer) {
            out.push_back(profile.point().layer);
        }
    }
    return out;
}

int WallDataset::points_per_layer() const {
    if (profiles_.empty()) {
        return 0;
    }
    const int first = profiles_.front().point().layer;
    int count = 0;
    for (const auto& profile : profiles_) {
        if (profile.point().layer == first) {
            ++count;
        }
    }
    return count;
}

}  // namespace thermoseer
