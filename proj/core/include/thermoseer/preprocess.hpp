#pragma once

#include <array>
#include <vector>

#include "thermoseer/synthgen.hpp"
#include "thermoseer/types.hpp"

namespace thermoseer {

/// A contiguous piece of a raw trace; times are global seconds.
struct Segment {
    std::vector<double> times;
    std::vector<double> temps;

    double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
    std::size_t size() const noexcept { return temps.size(); }
};

/// Cuts a trace at the estimated deposition times of the point and the four
/// layers above it, giving the five raw curve segments. Boundary values falling
/// between samples are linearly interpolated.
std::vector<Segment> split_simulation(const RawTrace& trace, const DwellSchedule& schedule,
                                      const ProcessSettings& settings, const PointId& point);

/// Splits at sharp rises: a new segment starts at the top of every run of
/// consecutive samples whose backward difference exceeds rise_threshold.
std::vector<Segment> split_experiment(const RawTrace& trace, double rise_threshold = 50.0);

/// Replaces a strictly increasing suffix inside the final tail_fraction of the
/// segment by a hold of the sample preceding the rise.
Segment smooth_tail(Segment segment, double tail_fraction = 0.05);

/// N temperatures at evenly spaced local times over [0, duration].
Curve resample(const Segment& segment, int n, int curve_index = 1);

/// Restricts the upper curve to its first lower_duration seconds and resamples to N.
Curve overlap_truncate(const Segment& upper, double lower_duration, int n, int curve_index = 1);

/// Segment view of an evenly sampled curve, local times starting at 0.
Segment segment_of(const Curve& curve);

/// Curve truncated to `duration` seconds from its N-sample representation; an
/// unchanged copy when the durations already agree.
Curve truncate_curve(const Curve& curve, double duration);

/// Profile whose curves are truncated to the given per-curve durations.
Profile truncate_profile(const Profile& profile, const std::array<double, kCurvesPerProfile>& durations);

/// split_simulation followed by resample of each segment.
Profile profile_from_trace(const RawTrace& trace, const DwellSchedule& schedule,
                           const ProcessSettings& settings, const PointId& point, int n);

}  // namespace thermoseer
