#include "thermoseer/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "thermoseer/errors.hpp"
#include "thermoseer/preprocess.hpp"
#include "thermoseer/thermal.hpp"

namespace thermoseer {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool selected(std::span<const int> points, int index) {
    return points.empty() || std::find(points.begin(), points.end(), index) != points.end();
}

std::vector<int> indices_with_parity(int count, int parity) {
    std::vector<int> out;
    for (int j = 1; j <= count; ++j) {
        if (j % 2 == parity) {
            out.push_back(j);
        }
    }
    return out;
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t r = i; r <= j; ++r) {
            ranks[order[r]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

LayerPrediction predict_next_layer(const MappingModel& model, std::span<const Profile> measured,
                                   const ProcessSettings& settings, const DwellSchedule& schedule,
                                   const ReconstructOptions& options) {
    const auto start = Clock::now();
    require(!measured.empty(), ErrorKind::Domain, "predict_next_layer: no measured profiles");
    const int source = measured.front().point().layer;
    if (source + 1 > settings.num_layers) {
        std::ostringstream os;
        os << "predict_next_layer: layer " << source << " is the top layer of a " << settings.num_layers
           << "-layer wall";
        fail(ErrorKind::Protocol, os.str());
    }
    for (const auto& p : measured) {
        if (p.point().layer != source) {
            std::ostringstream os;
            os << "predict_next_layer: point " << p.point().index << " is on layer " << p.point().layer
               << ", expected " << source;
            fail(ErrorKind::Shape, os.str());
        }
        if (static_cast<int>(p.samples()) != model.n) {
            std::ostringstream os;
            os << "predict_next_layer: point " << p.point().index << " curves have N=" << p.samples()
               << ", model expects N=" << model.n;
            fail(ErrorKind::Shape, os.str());
        }
    }

    const MappingFeatures features = mapping_features(settings, schedule, source);
    std::vector<Curve> inputs;
    inputs.reserve(measured.size() * kCurvesPerProfile);
    for (const auto& p : measured) {
        inputs.insert(inputs.end(), p.curves().begin(), p.curves().end());
    }
    const std::vector<MappingFeatures> feature_rows(inputs.size(), features);
    std::vector<Curve> mapped = forward_batch(model, inputs, feature_rows);

    LayerPrediction out;
    out.layer = source + 1;
    out.mapped_profiles.reserve(measured.size());
    for (std::size_t j = 0; j < measured.size(); ++j) {
        PointId point = measured[j].point();
        point.layer = source + 1;
        std::vector<Curve> curves(std::make_move_iterator(mapped.begin() + static_cast<std::ptrdiff_t>(j * 5)),
                                  std::make_move_iterator(mapped.begin() + static_cast<std::ptrdiff_t>(j * 5 + 5)));
        out.mapped_profiles.emplace_back(point, std::move(curves));
    }
    out.map_seconds = seconds_since(start);

    const auto recon_start = Clock::now();
    out.reconstruction = build_layer_reconstruction(out.mapped_profiles, settings.travel_speed,
                                                    options.energy_threshold, options.n_hidden, options.elm_seed);
    out.reconstruct_seconds = seconds_since(recon_start);
    out.elapsed = seconds_since(start);
    return out;
}

LayerPrediction predict_layer(const MappingModel& model, const WallDataset& dataset, int target_layer,
                              std::span<const int> points, const ReconstructOptions& options) {
    if (target_layer <= 1) {
        fail(ErrorKind::Protocol, "predict: layer 1 has no printed layer below it to map from");
    }
    std::vector<Profile> measured;
    for (auto& p : dataset.layer(target_layer - 1)) {
        if (selected(points, p.point().index)) {
            measured.push_back(std::move(p));
        }
    }
    if (measured.empty()) {
        std::ostringstream os;
        os << "predict: no measured profiles on layer " << target_layer - 1 << " of wall " << dataset.wall_id();
        fail(ErrorKind::Protocol, os.str());
    }
    return predict_next_layer(model, measured, dataset.settings(), dataset.schedule(), options);
}

Profile predict_point(const LayerPrediction& prediction, double axial_distance, const ProcessSettings& settings) {
    if (!(axial_distance >= 0.0) || axial_distance > settings.layer_length) {
        std::ostringstream os;
        os << "predict_point: axial distance " << axial_distance << " mm outside [0, " << settings.layer_length
           << "]";
        fail(ErrorKind::Domain, os.str());
    }
    Profile p = reconstruct_profile(prediction.reconstruction, axial_distance / settings.travel_speed);
    PointId point = p.point();
    point.axial_distance = axial_distance;
    return p.relabeled(point);
}

double field_horizon(const LayerPrediction& prediction) {
    const auto& d = prediction.reconstruction.durations;
    return std::accumulate(d.begin(), d.end(), 0.0);
}

FieldFrame render_field(const LayerPrediction& prediction, const ProcessSettings& settings, double local_time,
                        int n_positions) {
    require(local_time >= 0.0, ErrorKind::Domain, "render_field: local time must be >= 0");
    require(n_positions >= 2, ErrorKind::Domain, "render_field: needs at least 2 positions");
    const double horizon = field_horizon(prediction);
    if (local_time > horizon + 1e-9) {
        std::ostringstream os;
        os << "render_field: local time " << local_time << " s is beyond the 5-curve horizon; max representable "
           << "time is " << horizon << " s";
        fail(ErrorKind::Horizon, os.str());
    }
    const auto& recon = prediction.reconstruction;
    const int n = recon.n;
    double first_delay = std::numeric_limits<double>::infinity();
    double last_delay = -first_delay;
    for (const auto& p : prediction.mapped_profiles) {
        first_delay = std::min(first_delay, p.point().relative_delay);
        last_delay = std::max(last_delay, p.point().relative_delay);
    }

    FieldFrame frame;
    frame.local_time = local_time;
    for (int p = 0; p < n_positions; ++p) {
        const double pos = settings.layer_length * p / (n_positions - 1);
        const double delay = pos / settings.travel_speed;
        frame.positions.push_back(pos);
        frame.extrapolated.push_back(delay < first_delay - 1e-12 || delay > last_delay + 1e-12);
        if (local_time < delay) {
            frame.temps.push_back(kRoomTemperature);
            continue;
        }
        double tau = local_time - delay;
        int k = 0;
        while (k + 1 < kCurvesPerProfile && tau >= recon.durations[static_cast<std::size_t>(k)]) {
            tau -= recon.durations[static_cast<std::size_t>(k)];
            ++k;
        }
        const double duration = recon.durations[static_cast<std::size_t>(k)];
        const double x = std::clamp(tau / duration, 0.0, 1.0) * (n - 1);
        const int i0 = std::min(static_cast<int>(x), n - 2);
        const double w = x - i0;
        const Eigen::VectorXd c = elm_predict(recon.elm, delay);
        const Eigen::Index row = static_cast<Eigen::Index>(k) * n + i0;
        const double lo = recon.basis.row(row).dot(c);
        const double hi = recon.basis.row(row + 1).dot(c);
        frame.temps.push_back(lo + w * (hi - lo));
    }
    return frame;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    require(!sorted.empty(), ErrorKind::Metric, "quantile: empty list");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

LayerSummary summarize(std::span<const double> values, int layer) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    LayerSummary s;
    s.layer = layer;
    s.count = static_cast<int>(sorted.size());
    s.median = quantile_sorted(sorted, 0.5);
    s.q1 = quantile_sorted(sorted, 0.25);
    s.q3 = quantile_sorted(sorted, 0.75);
    s.max = sorted.back();
    return s;
}

EvalReport evaluate(std::span<const Profile> predictions, std::span<const Profile> truth) {
    std::map<std::pair<int, int>, const Profile*> truth_by_key;
    for (const auto& t : truth) {
        truth_by_key[{t.point().layer, t.point().index}] = &t;
    }
    std::map<std::pair<int, int>, const Profile*> pred_by_key;
    for (const auto& p : predictions) {
        pred_by_key[{p.point().layer, p.point().index}] = &p;
    }
    std::ostringstream orphans;
    for (const auto& [key, p] : pred_by_key) {
        if (!truth_by_key.contains(key)) {
            orphans << " prediction(layer " << key.first << ", point " << key.second << ")";
        }
    }
    for (const auto& [key, t] : truth_by_key) {
        if (!pred_by_key.contains(key)) {
            orphans << " truth(layer " << key.first << ", point " << key.second << ")";
        }
    }
    if (!orphans.str().empty()) {
        fail(ErrorKind::Pairing, "evaluate: unmatched points:" + orphans.str());
    }
    require(!pred_by_key.empty(), ErrorKind::Pairing, "evaluate: nothing to score");

    EvalReport report;
    std::map<int, std::vector<double>> by_layer;
    std::vector<double> all;
    for (const auto& [key, p] : pred_by_key) {
        const double r = reop(*p, *truth_by_key.at(key));
        report.scores.push_back({key.first, key.second, p->point().axial_distance, r});
        by_layer[key.first].push_back(r);
        all.push_back(r);
    }
    for (const auto& [layer, values] : by_layer) {
        report.layers.push_back(summarize(values, layer));
    }
    report.overall = summarize(all, 0);
    return report;
}

std::vector<CurvePairSample> extract_curve_pairs(const WallDataset& dataset, int first_layer, int last_layer,
                                                 std::span<const int> points) {
    std::vector<CurvePairSample> pairs;
    for (const auto& lower : dataset.profiles()) {
        const PointId& pt = lower.point();
        if (pt.layer < first_layer || pt.layer + 1 > last_layer || !selected(points, pt.index)) {
            continue;
        }
        const Profile* upper = dataset.find(pt.layer + 1, pt.index);
        if (upper == nullptr) {
            continue;
        }
        const MappingFeatures features = mapping_features(dataset.settings(), dataset.schedule(), pt.layer);
        for (int k = 1; k <= kCurvesPerProfile; ++k) {
            const Curve& input = lower.curve(k);
            pairs.push_back({input, features, truncate_curve(upper->curve(k), input.duration())});
        }
    }
    return pairs;
}

std::vector<MappingFeatures> feature_sequence(const WallDataset& dataset, int source_layer, int steps) {
    require(steps >= 1, ErrorKind::Domain, "feature_sequence: steps must be >= 1");
    std::vector<MappingFeatures> out;
    for (int s = 0; s < steps; ++s) {
        out.push_back(mapping_features(dataset.settings(), dataset.schedule(), source_layer + s));
    }
    return out;
}

BenchmarkReport run_benchmark(const MappingModel& model, const WallDataset& dataset,
                              std::span<const int> test_layers, const BenchmarkOptions& options) {
    require(!test_layers.empty(), ErrorKind::Protocol, "benchmark: no test layers");
    const int m = dataset.points_per_layer();
    const std::vector<int> measured =
        options.measured_points.empty() ? indices_with_parity(m, 1) : options.measured_points;
    const std::vector<int> evaluated =
        options.evaluated_points.empty() ? indices_with_parity(m, 0) : options.evaluated_points;
    if (measured.size() < 2 || evaluated.empty()) {
        std::ostringstream os;
        os << "benchmark: wall " << dataset.wall_id() << " with " << m
           << " points per layer leaves too few measured or evaluated points";
        fail(ErrorKind::Protocol, os.str());
    }

    BenchmarkReport report;
    std::vector<Profile> predictions;
    std::vector<Profile> truths;
    for (int layer : test_layers) {
        const LayerPrediction prediction = predict_layer(model, dataset, layer, measured, options.reconstruct);
        report.timing.push_back(
            {layer, prediction.map_seconds, prediction.reconstruct_seconds, prediction.elapsed});
        for (int idx : evaluated) {
            const Profile* truth = dataset.find(layer, idx);
            if (truth == nullptr) {
                std::ostringstream os;
                os << "benchmark: wall " << dataset.wall_id() << " has no profile at layer " << layer << ", point "
                   << idx;
                fail(ErrorKind::Protocol, os.str());
            }
            const Profile predicted = predict_point(prediction, truth->point().axial_distance, dataset.settings());
            predictions.push_back(predicted.relabeled(truth->point()));
            truths.push_back(truncate_profile(*truth, prediction.reconstruction.durations));
        }
    }
    report.eval = evaluate(predictions, truths);
    return report;
}

TrainResult train_on_walls(std::span<const WallDataset> walls, int first_layer, int last_layer,
                           const TrainConfig& config, std::uint64_t init_seed) {
    require(!walls.empty(), ErrorKind::Data, "train: no walls");
    const int n = walls.front().samples();
    std::vector<CurvePairSample> pairs;
    for (const auto& wall : walls) {
        if (wall.samples() != n) {
            std::ostringstream os;
            os << "train: wall " << wall.wall_id() << " has N=" << wall.samples() << ", expected N=" << n;
            fail(ErrorKind::Shape, os.str());
        }
        auto more = extract_curve_pairs(wall, first_layer, last_layer);
        pairs.insert(pairs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    require(!pairs.empty(), ErrorKind::Protocol, "train: the layer span yields no curve pairs");
    return train(init_model(n, init_seed), pairs, config);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorKind::Domain, "spearman: needs two equal-length series");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace thermoseer
