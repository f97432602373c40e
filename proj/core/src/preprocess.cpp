#include "thermoseer/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thermoseer/errors.hpp"
#include "thermoseer/thermal.hpp"

namespace thermoseer {

namespace {

constexpr double kTimeTolerance = 1e-7;  // s

// Linear interpolation of (times, temps) at t; times sorted, t inside the span.
double interpolate(const std::vector<double>& times, const std::vector<double>& temps, double t) {
    if (t <= times.front()) {
        return temps.front();
    }
    if (t >= times.back()) {
        return temps.back();
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return temps[lo] + w * (temps[hi] - temps[lo]);
}

// Samples of the trace inside [t0, t1], with interpolated endpoints where the
// boundary does not coincide with a sample.
Segment cut(const RawTrace& trace, double t0, double t1) {
    Segment seg;
    const auto& times = trace.times;
    auto first = std::lower_bound(times.begin(), times.end(), t0 - kTimeTolerance);
    auto last = std::upper_bound(times.begin(), times.end(), t1 + kTimeTolerance);
    if (first == last || std::abs(*first - t0) > kTimeTolerance) {
        seg.times.push_back(t0);
        seg.temps.push_back(interpolate(times, trace.temps, t0));
    }
    for (auto it = first; it != last; ++it) {
        const auto i = static_cast<std::size_t>(it - times.begin());
        seg.times.push_back(std::clamp(times[i], t0, t1));
        seg.temps.push_back(trace.temps[i]);
    }
    if (std::abs(seg.times.back() - t1) > kTimeTolerance) {
        seg.times.push_back(t1);
        seg.temps.push_back(interpolate(times, trace.temps, t1));
    }
    return seg;
}

}  // namespace

std::vector<Segment> split_simulation(const RawTrace& trace, const DwellSchedule& schedule,
                                      const ProcessSettings& settings, const PointId& point) {
    trace.validate();
    require(!trace.times.empty(), ErrorKind::Coverage, "split_simulation: empty trace");
    const int available = settings.num_layers - point.layer;
    if (available < kCurvesPerProfile) {
        std::ostringstream os;
        os << "split_simulation: layer " << point.layer << " of a " << settings.num_layers
           << "-layer wall has only " << std::max(available, 0) << " complete curves (last representable k = "
           << std::max(available, 0) << ")";
        fail(ErrorKind::Coverage, os.str());
    }

    std::array<double, kCurvesPerProfile + 1> bounds{};
    for (int k = 0; k <= kCurvesPerProfile; ++k) {
        bounds[static_cast<std::size_t>(k)] =
            deposition_time(schedule, settings, point.layer + k, point.axial_distance);
    }
    if (trace.times.front() > bounds[0] + kTimeTolerance) {
        fail(ErrorKind::Coverage, "split_simulation: trace starts after the point's deposition time");
    }
    if (trace.times.back() < bounds.back() - kTimeTolerance) {
        int last_k = 0;
        while (last_k < kCurvesPerProfile &&
               trace.times.back() >= bounds[static_cast<std::size_t>(last_k + 1)] - kTimeTolerance) {
            ++last_k;
        }
        std::ostringstream os;
        os << "split_simulation: trace ends at " << trace.times.back() << " s before "
           << bounds.back() << " s; last representable k = " << last_k;
        fail(ErrorKind::Coverage, os.str());
    }

    std::vector<Segment> out;
    out.reserve(kCurvesPerProfile);
    for (std::size_t k = 0; k < kCurvesPerProfile; ++k) {
        out.push_back(cut(trace, bounds[k], bounds[k + 1]));
    }
    return out;
}

std::vector<Segment> split_experiment(const RawTrace& trace, double rise_threshold) {
    trace.validate();
    require(!trace.temps.empty(), ErrorKind::Domain, "split_experiment: empty trace");
    std::vector<std::size_t> starts{0};
    const std::size_t n = trace.temps.size();
    for (std::size_t s = 1; s < n; ++s) {
        const bool rise = trace.temps[s] - trace.temps[s - 1] > rise_threshold;
        const bool run_continues = s + 1 < n && trace.temps[s + 1] - trace.temps[s] > rise_threshold;
        if (rise && !run_continues) {
            starts.push_back(s);
        }
    }
    std::vector<Segment> out;
    out.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const std::size_t begin = starts[i];
        const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : n;
        Segment seg;
        seg.times.assign(trace.times.begin() + static_cast<std::ptrdiff_t>(begin),
                         trace.times.begin() + static_cast<std::ptrdiff_t>(end));
        seg.temps.assign(trace.temps.begin() + static_cast<std::ptrdiff_t>(begin),
                         trace.temps.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(seg));
    }
    return out;
}

Segment smooth_tail(Segment segment, double tail_fraction) {
    const std::size_t n = segment.temps.size();
    require(n >= 4, ErrorKind::Domain, "smooth_tail: segment needs at least 4 samples");
    require(tail_fraction >= 0.0 && tail_fraction <= 1.0, ErrorKind::Domain,
            "smooth_tail: tail_fraction must lie in [0, 1]");
    const auto window = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n) - 1e-9)));
    if (window == 0) {
        return segment;
    }
    auto& t = segment.temps;
    // start of the strictly increasing run that ends at the last sample
    std::size_t rise = n - 1;
    while (rise > 0 && t[rise - 1] < t[rise]) {
        --rise;
    }
    if (rise == n - 1) {
        return segment;
    }
    const std::size_t from = std::max(rise + 1, n - window);
    const double hold = t[from - 1];
    std::fill(t.begin() + static_cast<std::ptrdiff_t>(from), t.end(), hold);
    return segment;
}

Curve resample(const Segment& segment, int n, int curve_index) {
    require(segment.times.size() == segment.temps.size(), ErrorKind::Shape,
            "resample: times and temps differ in length");
    require(segment.size() >= 2, ErrorKind::Domain, "resample: segment needs at least 2 samples");
    require(n >= 2, ErrorKind::Domain, "resample: N must be >= 2");
    const double t0 = segment.times.front();
    const double duration = segment.duration();
    if (!(duration > 0.0)) {
        fail(ErrorKind::Domain, "resample: degenerate segment duration");
    }
    std::vector<double> temps(static_cast<std::size_t>(n));
    temps.front() = segment.temps.front();
    temps.back() = segment.temps.back();
    for (int i = 1; i + 1 < n; ++i) {
        temps[static_cast<std::size_t>(i)] =
            interpolate(segment.times, segment.temps, t0 + duration * i / (n - 1));
    }
    return Curve(std::move(temps), duration, curve_index);
}

Curve overlap_truncate(const Segment& upper, double lower_duration, int n, int curve_index) {
    require(upper.size() >= 2, ErrorKind::Domain, "overlap_truncate: segment needs at least 2 samples");
    const double upper_duration = upper.duration();
    if (lower_duration > upper_duration + kTimeTolerance) {
        std::ostringstream os;
        os << "overlap_truncate: lower duration " << lower_duration << " s exceeds upper duration "
           << upper_duration << " s (dwell must not decrease with layer)";
        fail(ErrorKind::Domain, os.str());
    }
    require(lower_duration > 0.0, ErrorKind::Domain, "overlap_truncate: lower duration must be > 0");
    if (std::abs(lower_duration - upper_duration) <= kTimeTolerance) {
        return resample(upper, n, curve_index);
    }
    const double t0 = upper.times.front();
    const double t1 = t0 + lower_duration;
    Segment head;
    for (std::size_t i = 0; i < upper.size() && upper.times[i] < t1 - kTimeTolerance; ++i) {
        head.times.push_back(upper.times[i]);
        head.temps.push_back(upper.temps[i]);
    }
    head.times.push_back(t1);
    head.temps.push_back(interpolate(upper.times, upper.temps, t1));
    return resample(head, n, curve_index);
}

Segment segment_of(const Curve& curve) {
    Segment seg;
    seg.temps = curve.temps();
    seg.times.resize(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        seg.times[i] = curve.time_of(i);
    }
    return seg;
}

Curve truncate_curve(const Curve& curve, double duration) {
    if (std::abs(duration - curve.duration()) <= 1e-12 * std::max(1.0, curve.duration())) {
        return curve;
    }
    return overlap_truncate(segment_of(curve), duration, static_cast<int>(curve.size()), curve.index());
}

Profile truncate_profile(const Profile& profile, const std::array<double, kCurvesPerProfile>& durations) {
    std::vector<Curve> curves;
    curves.reserve(kCurvesPerProfile);
    for (int k = 1; k <= kCurvesPerProfile; ++k) {
        curves.push_back(truncate_curve(profile.curve(k), durations[static_cast<std::size_t>(k - 1)]));
    }
    return Profile(profile.point(), std::move(curves));
}

Profile profile_from_trace(const RawTrace& trace, const DwellSchedule& schedule,
                           const ProcessSettings& settings, const PointId& point, int n) {
    const auto segments = split_simulation(trace, schedule, settings, point);
    std::vector<Curve> curves;
    curves.reserve(segments.size());
    for (std::size_t k = 0; k < segments.size(); ++k) {
        curves.push_back(resample(segments[k], n, static_cast<int>(k) + 1));
    }
    return Profile(point, std::move(curves));
}

}  // namespace thermoseer
