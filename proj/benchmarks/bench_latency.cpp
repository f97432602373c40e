#include <benchmark/benchmark.h>

#include <vector>

#include "thermoseer/config.hpp"
#include "thermoseer/mapping.hpp"
#include "thermoseer/pipeline.hpp"
#include "thermoseer/reconstruct.hpp"
#include "thermoseer/synthgen.hpp"
#include "thermoseer/thermal.hpp"

namespace {

using namespace thermoseer;

const WallDataset& wall() {
    static const WallDataset w = [] {
        SynthParams p;
        p.seed = 1;
        return generate_wall(simulation_presets(12)[0], p, 7, 100, "bench");
    }();
    return w;
}

const MappingModel& model() {
    static const MappingModel m = init_model(100, 1);
    return m;
}

void BM_MapCurves35(benchmark::State& state) {
    std::vector<Curve> inputs;
    std::vector<MappingFeatures> features;
    for (const auto& p : wall().layer(4)) {
        for (int k = 1; k <= kCurvesPerProfile; ++k) {
            inputs.push_back(p.curve(k));
            features.push_back(mapping_features(wall().settings(), wall().schedule(), 4));
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_batch(model(), inputs, features));
    }
}
BENCHMARK(BM_MapCurves35)->Unit(benchmark::kMillisecond);

void BM_Reconstruction(benchmark::State& state) {
    const auto profiles = wall().layer(5);
    for (auto _ : state) {
        const auto recon = build_layer_reconstruction(profiles, wall().settings().travel_speed);
        benchmark::DoNotOptimize(reconstruct_profile(recon, 10.0));
    }
}
BENCHMARK(BM_Reconstruction)->Unit(benchmark::kMillisecond);

void BM_PredictNextLayer(benchmark::State& state) {
    const auto measured = wall().layer(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict_next_layer(model(), measured, wall().settings(), wall().schedule()));
    }
}
BENCHMARK(BM_PredictNextLayer)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
