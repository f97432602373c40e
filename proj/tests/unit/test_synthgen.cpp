#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "thermoseer/errors.hpp"
#include "thermoseer/preprocess.hpp"
#include "thermoseer/synthgen.hpp"
#include "thermoseer/thermal.hpp"

namespace thermoseer {
namespace {

TEST(CoolingTime, HandExample) {
    EXPECT_NEAR(cooling_time(30.0, 625.0, 25.0, 200.0), 30.0 * std::log(600.0 / 175.0), 1e-12);
    EXPECT_NEAR(cooling_time(30.0, 625.0, 25.0, 200.0), 36.96, 0.01);
    EXPECT_EQ(cooling_time(30.0, 200.0, 25.0, 200.0), 0.0);
    EXPECT_THROW(cooling_time(30.0, 625.0, 25.0, 25.0), Error);
}

TEST(SolveDwell, RejectsTargetOutsideBand) {
    SynthParams p;
    auto s = testing::small_settings();
    s.interpass_target = 20.0;
    EXPECT_THROW(solve_dwell(p, s, 1), Error);
    s.interpass_target = 5000.0;
    EXPECT_THROW(solve_dwell(p, s, 1), Error);
}

TEST(SolveDwell, HeightIndependentWithoutGain) {
    SynthParams p;
    p.cool_height_gain = 0.0;
    const auto s = testing::small_settings();
    const double first = solve_dwell(p, s, 1);
    for (int i = 2; i <= s.num_layers; ++i) {
        EXPECT_DOUBLE_EQ(solve_dwell(p, s, i), first);
    }
}

TEST(SolveDwell, NondecreasingWithHeightGain) {
    SynthParams p;
    const auto s = ProcessSettings::simulation(8.0, 3.0, 1.5, 40);
    for (int i = 1; i < 40; ++i) {
        EXPECT_LE(solve_dwell(p, s, i), solve_dwell(p, s, i + 1));
    }
    EXPECT_TRUE(ThinWallOracle(s, p).schedule().nondecreasing());
}

TEST(Oracle, CurveStartIsDepositionPeak) {
    SynthParams p;
    const ThinWallOracle oracle(ProcessSettings::simulation(8.0, 3.0, 1.5, 40), p);
    const double d = 80.0;
    const double a1 = oracle.first_amplitude(d);
    const double d1 = curve_duration(oracle.schedule(), oracle.settings(), 10, 1);
    const double expected = p.ambient + a1 + p.reheat_gain * a1 * std::exp(-d1 / p.reheat_tau);
    EXPECT_NEAR(oracle.temperature(10, d, 1, 0.0), expected, 1e-9);
    EXPECT_GT(oracle.temperature(10, d, 1, 0.0), 1000.0);
}

TEST(Oracle, CurvesContinuousAcrossCycles) {
    const ThinWallOracle oracle(ProcessSettings::simulation(8.0, 3.0, 1.5, 40), SynthParams{});
    for (int layer : {1, 10, 30}) {
        for (int k = 1; k < kCurvesPerProfile; ++k) {
            const double dk = curve_duration(oracle.schedule(), oracle.settings(), layer, k);
            EXPECT_NEAR(oracle.temperature(layer, 50.0, k, dk), oracle.temperature(layer, 50.0, k + 1, 0.0), 1.0);
        }
    }
}

TEST(Oracle, DwellEndsNearInterpassTarget) {
    const auto s = ProcessSettings::simulation(8.0, 3.0, 1.5, 40);
    const ThinWallOracle oracle(s, SynthParams{});
    for (int i = 1; i <= oracle.last_profile_layer(); ++i) {
        const double tau = oracle.schedule().dwell(i) + s.layer_print_time - s.layer_length / s.travel_speed;
        const double t = oracle.temperature(i, s.layer_length, 1, tau);
        EXPECT_NEAR(t, s.interpass_target, 10.0) << "layer " << i;
    }
}

TEST(GenerateWall, ShapeAndDurations) {
    const auto wall = testing::small_wall(12, 7, 20);
    EXPECT_EQ(wall.layers().size(), 7u);
    EXPECT_EQ(wall.points_per_layer(), 7);
    for (const auto& p : wall.profiles()) {
        for (int k = 1; k <= kCurvesPerProfile; ++k) {
            EXPECT_DOUBLE_EQ(p.curve(k).duration(),
                             curve_duration(wall.schedule(), wall.settings(), p.point().layer, k));
        }
    }
    const auto layer3 = wall.layer(3);
    EXPECT_EQ(layer3.front().durations(), layer3.back().durations());
}

TEST(GenerateWall, PointsEvenlyInterior) {
    const auto pos = point_positions(ProcessSettings{}, 7);
    ASSERT_EQ(pos.size(), 7u);
    EXPECT_DOUBLE_EQ(pos.front(), 20.0);
    EXPECT_DOUBLE_EQ(pos.back(), 140.0);
    EXPECT_THROW(point_positions(ProcessSettings{}, 1), Error);
}

TEST(GenerateWall, RejectsTooFewLayers) {
    EXPECT_THROW(generate_wall(testing::small_settings(5), SynthParams{}, 7), Error);
}

TEST(GenerateWall, RejectsPointsCloserThanSamplePeriod) {
    EXPECT_THROW(generate_wall(testing::small_settings(8), SynthParams{}, 400), Error);
}

TEST(GenerateWall, DeterministicPerSeed) {
    const auto a = testing::small_wall(10, 5, 20, 11);
    const auto b = testing::small_wall(10, 5, 20, 11);
    EXPECT_EQ(a.profiles(), b.profiles());
    SynthParams noisy;
    noisy.noise_sd = 2.0;
    noisy.seed = 4;
    const auto c = generate_wall(testing::small_settings(10), noisy, 5, 20);
    noisy.seed = 5;
    const auto d = generate_wall(testing::small_settings(10), noisy, 5, 20);
    EXPECT_NE(c.profiles(), d.profiles());
}

TEST(GenerateWall, CurveSimilarityGrowsWithHeight) {
    const auto s = ProcessSettings::simulation(8.0, 3.0, 1.5, 40);
    const auto wall = generate_wall(s, SynthParams{}, 7, 100);
    double previous = 1.0;
    for (int i = 10; i < 35; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int j = 1; j <= 7; ++j) {
            const Profile* lower = wall.find(i, j);
            const Profile* upper = wall.find(i + 1, j);
            for (int k = 1; k <= kCurvesPerProfile; ++k) {
                const Curve target = truncate_curve(upper->curve(k), lower->curve(k).duration());
                const double e = reop(lower->curve(k).view(), target.view());
                EXPECT_LT(e, 0.15);
                sum += e;
                ++count;
            }
        }
        const double mean = sum / count;
        EXPECT_LE(mean, previous) << "layer " << i;
        previous = mean;
    }
}

TEST(EmulatePyrometer, ClampsAndKeepsBand) {
    std::vector<Curve> curves;
    for (int k = 1; k <= kCurvesPerProfile; ++k) {
        curves.emplace_back(std::vector<double>{500.0, 1450.0, 25.0}, 3.0, k);
    }
    const Profile p(PointId{}, curves);
    const Profile out = emulate_pyrometer(p, 150.0, 1000.0, 0.0, 1);
    for (const auto& c : out.curves()) {
        EXPECT_EQ(c.temps(), (std::vector<double>{500.0, 1000.0, 150.0}));
    }
    EXPECT_THROW(emulate_pyrometer(p, 1000.0, 150.0, 0.0, 1), Error);
}

TEST(EmulatePyrometer, NoiseDeterministicPerSeed) {
    RawTrace t;
    t.times = {0.0, 0.1, 0.2, 0.3};
    t.temps = {500.0, 500.0, 500.0, 500.0};
    t.sample_period = 0.1;
    const auto a = emulate_pyrometer(t, 150.0, 1000.0, 3.0, 7);
    const auto b = emulate_pyrometer(t, 150.0, 1000.0, 3.0, 7);
    EXPECT_EQ(a.temps, b.temps);
    EXPECT_NE(a.temps, t.temps);
}

TEST(ExperimentWall, ClampedAndJittered) {
    const auto s = ProcessSettings::experiment(8.0, 3.0, 1.4, 21.0, 12);
    const auto wall = generate_experiment_wall(s, SynthParams{}, 7, ExperimentStyle{}, 50);
    for (const auto& p : wall.profiles()) {
        for (const auto& c : p.curves()) {
            for (double t : c.temps()) {
                EXPECT_GE(t, 150.0);
                EXPECT_LE(t, 1000.0);
            }
        }
    }
    EXPECT_EQ(wall.provenance().at("style"), "experiment");
}

TEST(DeriveSeed, DistinctStreams) {
    EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
    EXPECT_NE(derive_seed(1, 1, 0), derive_seed(1, 1, 1));
    EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
}

}  // namespace
}  // namespace thermoseer
