#pragma once

#include <random>
#include <vector>

#include "thermoseer/synthgen.hpp"
#include "thermoseer/types.hpp"

namespace thermoseer::testing {

inline ProcessSettings small_settings(int num_layers = 12) {
    return ProcessSettings::simulation(8.0, 3.0, 1.5, num_layers);
}

inline WallDataset small_wall(int num_layers = 12, int points = 7, int n = 20, std::uint64_t seed = 3) {
    SynthParams params;
    params.seed = seed;
    return generate_wall(small_settings(num_layers), params, points, n, "test");
}

inline Curve ramp_curve(double from, double to, int n, double duration = 10.0, int k = 1) {
    std::vector<double> temps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        temps[static_cast<std::size_t>(i)] = from + (to - from) * i / (n - 1);
    }
    return Curve(std::move(temps), duration, k);
}

inline Profile random_profile(std::mt19937_64& rng, int n, int layer = 1, double d = 20.0) {
    std::uniform_real_distribution<double> temp(50.0, 1400.0);
    std::vector<Curve> curves;
    for (int k = 1; k <= kCurvesPerProfile; ++k) {
        std::vector<double> temps(static_cast<std::size_t>(n));
        for (double& t : temps) {
            t = temp(rng);
        }
        curves.emplace_back(std::move(temps), 10.0 + k, k);
    }
    return Profile(PointId::at(layer, d, 8.0), std::move(curves));
}

inline Profile scaled(const Profile& p, double alpha) {
    std::vector<Curve> curves;
    for (const auto& c : p.curves()) {
        std::vector<double> temps = c.temps();
        for (double& t : temps) {
            t *= alpha;
        }
        curves.emplace_back(std::move(temps), c.duration(), c.index());
    }
    return Profile(p.point(), std::move(curves));
}

}  // namespace thermoseer::testing
