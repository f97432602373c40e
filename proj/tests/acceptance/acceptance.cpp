#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "commands.hpp"
#include "thermoseer/config.hpp"
#include "thermoseer/errors.hpp"
#include "thermoseer/io.hpp"
#include "thermoseer/mapping.hpp"
#include "thermoseer/pipeline.hpp"
#include "thermoseer/reconstruct.hpp"
#include "thermoseer/synthgen.hpp"
#include "thermoseer/thermal.hpp"

namespace {

using namespace thermoseer;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Options {
    int same_setting_epochs = 500;
    double same_setting_median = 0.05;
    int cross_setting_epochs = 30;
    int finetune_epochs = 100;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

MappingModel zero_model(int n) {
    MappingModel m = init_model(n, 1);
    for (std::size_t i = 0; i < param_count(m); ++i) {
        m.parameter(i) = 0.0;
    }
    return m;
}

Curve random_curve(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> temp(100.0, 1400.0);
    std::vector<double> temps(static_cast<std::size_t>(n));
    for (double& t : temps) {
        t = temp(rng);
    }
    return Curve(std::move(temps), 25.0, 1);
}

Outcome param_count_check() {
    const std::size_t got = param_count(init_model(100, 1));
    const std::size_t formula = 186u * 100 * 100 + 43u * 100;
    const double rel = std::abs(static_cast<double>(got) - 1.8635e6) / 1.8635e6;
    return {got == formula && rel <= 1e-3,
            "N=100 -> " + std::to_string(got) + " (formula " + std::to_string(formula) + ", " + fmt(rel * 100, 3) +
                "% from 1.8635M)"};
}

Outcome residual_identity() {
    std::mt19937_64 rng(2);
    const MappingFeatures f{20.5, 31.0, 52.8, 15.0};
    for (int n : {2, 10, 100}) {
        const Curve c = random_curve(rng, n);
        if (forward(zero_model(n), c, f).temps() != c.temps()) {
            return {false, "output differs from input at N=" + std::to_string(n)};
        }
    }
    return {true, "exact for N in {2, 10, 100}"};
}

Outcome gradient_check() {
    SynthParams p;
    p.seed = 3;
    const auto wall = generate_wall(ProcessSettings::simulation(8.0, 3.0, 1.5, 10), p, 3, 8, "grad");
    const auto all = extract_curve_pairs(wall, 1, 5);
    const std::vector<CurvePairSample> batch(all.begin(), all.begin() + 4);
    MappingModel m = init_model(8, 7);
    m.scaler = fit_scaler(all);
    const FlatGradient g = loss_gradient(m, batch);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    const double h = 1e-5;
    double worst = 0.0;
    int checked = 0;
    while (checked < 20) {
        const std::size_t i = pick(rng);
        const double w = m.parameter(i);
        m.parameter(i) = w + h;
        const double up = batch_loss(m, batch);
        m.parameter(i) = w - h;
        const double down = batch_loss(m, batch);
        m.parameter(i) = w;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max(std::abs(numeric), std::abs(g[i]));
        if (scale < 1e-9) {
            continue;
        }
        worst = std::max(worst, std::abs(numeric - g[i]) / scale);
        ++checked;
    }
    return {worst < 1e-4, "20 parameters, max relative error " + fmt(worst, 3)};
}

Outcome lr_schedule() {
    SynthParams p;
    p.seed = 4;
    const auto wall = generate_wall(ProcessSettings::simulation(8.0, 3.0, 1.5, 8), p, 2, 4, "lr");
    const auto pairs = extract_curve_pairs(wall, 1, 3);
    TrainConfig cfg;
    cfg.epochs = 401;
    const TrainResult r = train(init_model(4, 1), pairs, cfg);
    std::ostringstream os;
    bool ok = r.lr_history.size() == 401;
    for (int e : {99, 100, 199, 200, 399, 400}) {
        const double want = 0.001 * std::pow(0.5, e / 100);
        const double got = r.lr_history[static_cast<std::size_t>(e)];
        ok = ok && got == want;
        os << e << ":" << got << " ";
    }
    return {ok, os.str()};
}

Outcome pod_energy_bound() {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_margin = -1.0;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd s(500, 7);
        for (Eigen::Index c = 0; c < 7; ++c) {
            const double weight = std::pow(0.3, static_cast<double>(c));
            for (Eigen::Index r = 0; r < 500; ++r) {
                s(r, c) = 500.0 + 200.0 * normal(rng) * weight;
            }
        }
        const PodResult pod = pod_decompose(s, 0.99);
        const double rel = (s - pod.basis * pod.coefficients.transpose()).norm() / s.norm();
        const double bound = std::sqrt(1.0 - 0.99) + 1e-10;
        if (rel > bound) {
            return {false, "trial " + std::to_string(trial) + ": relative error " + fmt(rel) + " above bound"};
        }
        worst_margin = std::max(worst_margin, rel - bound);
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(s).singularValues();
        const double total = sv.squaredNorm();
        double prefix = 0.0;
        int minimal = 0;
        for (Eigen::Index k = 0; k < sv.size(); ++k) {
            prefix += sv(k) * sv(k);
            if (prefix / total >= 0.99) {
                minimal = static_cast<int>(k) + 1;
                break;
            }
        }
        if (pod.m_star != minimal) {
            return {false, "trial " + std::to_string(trial) + ": m_star " + std::to_string(pod.m_star) +
                               " but brute force gives " + std::to_string(minimal)};
        }
    }
    return {true, "50 matrices, m_star minimal, bound held (closest margin " + fmt(worst_margin, 3) + ")"};
}

Outcome elm_vs_pseudoinverse() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> delay(0.0, 20.0);
    std::uniform_real_distribution<double> coef(-500.0, 500.0);
    std::uniform_int_distribution<int> outputs(1, 7);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> delays(7);
        for (double& d : delays) {
            d = delay(rng);
        }
        std::sort(delays.begin(), delays.end());
        Eigen::MatrixXd y(7, outputs(rng));
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y.data()[i] = coef(rng);
        }
        const ElmModel elm = elm_train(delays, y, 128, static_cast<std::uint64_t>(trial) + 1);
        const Eigen::MatrixXd h = elm.hidden_matrix(delays);
        const Eigen::MatrixXd targets =
            (y.rowwise() - elm.output_mean.transpose()) * elm.output_scale.cwiseInverse().asDiagonal();
        const Eigen::MatrixXd oracle = h.completeOrthogonalDecomposition().pseudoInverse() * targets;
        const Eigen::MatrixXd r_elm = h * elm.output_weights - targets;
        const Eigen::MatrixXd r_oracle = h * oracle - targets;
        worst = std::max(worst, (r_elm - r_oracle).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-8, "20 problems, max residual difference " + fmt(worst, 3)};
}

Outcome schedule_oracle() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> dwell_dist(0.0, 120.0);
    std::uniform_real_distribution<double> dist_d(0.0, 160.0);
    std::uniform_int_distribution<int> layer_dist(1, 40);
    const ProcessSettings s = ProcessSettings::simulation(11.0, 4.5, 1.6, 40);
    std::vector<double> dwell(40);
    for (double& d : dwell) {
        d = dwell_dist(rng);
    }
    const DwellSchedule schedule(dwell);
    std::vector<double> cumulative(41, 0.0);
    for (int i = 1; i <= 40; ++i) {
        cumulative[static_cast<std::size_t>(i)] = cumulative[static_cast<std::size_t>(i - 1)] + s.layer_print_time +
                                                  dwell[static_cast<std::size_t>(i - 1)];
    }
    double worst = 0.0;
    for (int q = 0; q < 1000; ++q) {
        const int layer = layer_dist(rng);
        const double d = dist_d(rng);
        const double want = cumulative[static_cast<std::size_t>(layer - 1)] + d / s.travel_speed;
        worst = std::max(worst, std::abs(deposition_time(schedule, s, layer, d) - want));
    }

    // dyadic dwell values keep every sum exact
    const ProcessSettings exact = ProcessSettings::simulation(8.0, 3.0, 1.5, 40);
    std::vector<double> dyadic(40);
    for (std::size_t i = 0; i < dyadic.size(); ++i) {
        dyadic[i] = std::ldexp(std::floor(dwell[i] * 64.0), -6);
    }
    const DwellSchedule exact_schedule(dyadic);
    bool identity = true;
    for (int i = 1; i < 40; ++i) {
        for (double d : {0.0, 20.0, 84.0, 160.0}) {
            const double diff =
                deposition_time(exact_schedule, exact, i + 1, d) - deposition_time(exact_schedule, exact, i, d);
            identity = identity && diff == exact.layer_print_time + exact_schedule.dwell(i);
        }
    }
    return {worst <= 1e-9 && identity,
            "1000 queries, max deviation " + fmt(worst, 3) + " s; layer-difference identity " +
                (identity ? "exact" : "violated")};
}

Outcome reop_algebra() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> temp(30.0, 1500.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<Curve> curves;
        for (int k = 1; k <= kCurvesPerProfile; ++k) {
            std::vector<double> temps(50);
            for (double& v : temps) {
                v = temp(rng);
            }
            curves.emplace_back(std::move(temps), 20.0 + k, k);
        }
        const Profile truth(PointId::at(3, 40.0, 8.0, 1), curves);
        for (double alpha : {0.5, 1.0, 1.1, 2.0}) {
            std::vector<Curve> scaled;
            for (const auto& c : curves) {
                std::vector<double> temps = c.temps();
                for (double& v : temps) {
                    v *= alpha;
                }
                scaled.emplace_back(std::move(temps), c.duration(), c.index());
            }
            const Profile pred(truth.point(), std::move(scaled));
            worst = std::max(worst, std::abs(reop(pred, truth) - std::abs(alpha - 1.0)));
        }
    }
    return {worst <= 1e-12, "400 cases, max deviation " + fmt(worst, 3)};
}

BenchmarkOptions odd_even() {
    BenchmarkOptions o;
    o.measured_points = {1, 3, 5, 7};
    o.evaluated_points = {2, 4, 6};
    return o;
}

Outcome same_setting(const Options& opt) {
    std::ostringstream os;
    bool ok = true;
    const std::vector<int> layers{31, 32, 33, 34, 35};
    for (std::uint64_t seed : {1, 2, 3}) {
        SynthParams p;
        p.seed = derive_seed(seed, 1);
        const auto wall = generate_wall(simulation_presets(40)[0], p, 7, 100, "sim-1");
        TrainConfig cfg;
        cfg.epochs = opt.same_setting_epochs;
        cfg.seed = seed;
        const std::vector<WallDataset> walls{wall};
        const auto trained = train_on_walls(walls, 1, 30, cfg, seed);
        const auto report = run_benchmark(trained.model, wall, layers, odd_even());
        double worst_median = 0.0;
        for (const auto& l : report.eval.layers) {
            worst_median = std::max(worst_median, l.median);
        }
        ok = ok && report.eval.layers.size() == layers.size() && worst_median < opt.same_setting_median &&
             report.eval.overall.max <= 0.2;
        os << "seed " << seed << ": worst layer median " << fmt(worst_median) << ", max " << fmt(report.eval.overall.max)
           << "; ";
    }
    os << opt.same_setting_epochs << " epochs, median threshold " << opt.same_setting_median;
    return {ok, os.str()};
}

std::vector<WallDataset> simulation_walls(std::uint64_t seed) {
    std::vector<WallDataset> walls;
    const auto presets = simulation_presets(40);
    for (std::size_t w = 0; w < presets.size(); ++w) {
        SynthParams p;
        p.seed = derive_seed(seed, w + 1);
        walls.push_back(generate_wall(presets[w], p, 7, 100, "sim-" + std::to_string(w + 1)));
    }
    return walls;
}

constexpr std::size_t kHeldOutSimulation = 4;

Outcome cross_setting(const Options& opt, MappingModel& trained_out) {
    const auto walls = simulation_walls(1);
    std::vector<WallDataset> train_walls;
    for (std::size_t w = 0; w < walls.size(); ++w) {
        if (w != kHeldOutSimulation) {
            train_walls.push_back(walls[w]);
        }
    }
    TrainConfig cfg;
    cfg.epochs = opt.cross_setting_epochs;
    cfg.seed = 1;
    trained_out = train_on_walls(train_walls, 1, 40, cfg, 1).model;
    std::vector<int> layers;
    for (int i = 5; i <= 35; ++i) {
        layers.push_back(i);
    }
    const auto report = run_benchmark(trained_out, walls[kHeldOutSimulation], layers, odd_even());
    std::vector<double> x, y;
    for (const auto& l : report.eval.layers) {
        x.push_back(l.layer);
        y.push_back(l.median);
    }
    const double rho = spearman(x, y);
    return {rho < -0.5 && x.size() == layers.size(),
            "held-out " + walls[kHeldOutSimulation].wall_id() + ", Spearman(layer, median) over 5-35 = " + fmt(rho, 3) +
                ", median " + fmt(y.front()) + " -> " + fmt(y.back())};
}

Outcome finetune_benefit(const Options& opt, const MappingModel& base) {
    constexpr std::size_t kHeldOut = 7;
    const auto presets = experiment_presets(40);
    std::vector<int> layers;
    for (int i = 2; i <= 35; ++i) {
        layers.push_back(i);
    }
    std::ostringstream os;
    bool ok = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        std::vector<WallDataset> walls;
        for (std::size_t w = 0; w < presets.size(); ++w) {
            walls.push_back(generate_experiment_wall(presets[w], experiment_params(derive_seed(seed, 100 + w)), 7,
                                                     ExperimentStyle{}, 100, "exp-" + std::to_string(w + 1)));
        }
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> layer(1, 33);
        const std::vector<int> point{4};
        std::vector<CurvePairSample> pairs;
        for (std::size_t w = 0; w < walls.size(); ++w) {
            if (w == kHeldOut) {
                continue;
            }
            for (int rep = 0; rep < 2; ++rep) {
                const int i = layer(rng);
                const auto more = extract_curve_pairs(walls[w], i, i + 1, point);
                pairs.insert(pairs.end(), more.begin(), more.end());
            }
        }
        TrainConfig cfg;
        cfg.epochs = opt.finetune_epochs;
        cfg.seed = seed;
        const MappingModel tuned = finetune(base, pairs, cfg).model;
        const double before = run_benchmark(base, walls[kHeldOut], layers, odd_even()).eval.overall.median;
        const double after = run_benchmark(tuned, walls[kHeldOut], layers, odd_even()).eval.overall.median;
        ok = ok && pairs.size() <= 150 && after < before;
        os << "seed " << seed << ": " << pairs.size() << " pairs, median " << fmt(before) << " -> " << fmt(after)
           << "; ";
    }
    return {ok, os.str()};
}

Outcome latency() {
    SynthParams p;
    p.seed = 12;
    const auto wall = generate_wall(simulation_presets(12)[0], p, 7, 100, "latency");
    MappingModel model = init_model(100, 3);
    model.scaler = fit_scaler(extract_curve_pairs(wall, 1, 7));
    const auto measured = wall.layer(5);
    std::vector<double> total, map, recon;
    for (int run = 0; run < 26; ++run) {
        const auto start = std::chrono::steady_clock::now();
        const auto prediction = predict_next_layer(model, measured, wall.settings(), wall.schedule());
        const double elapsed = seconds_since(start);
        if (run > 0) {
            total.push_back(elapsed);
            map.push_back(prediction.map_seconds);
            recon.push_back(prediction.reconstruct_seconds);
        }
    }
    std::vector<Curve> inputs;
    std::vector<MappingFeatures> features;
    for (const auto& prof : measured) {
        for (const auto& c : prof.curves()) {
            inputs.push_back(c);
            features.push_back(mapping_features(wall.settings(), wall.schedule(), 5));
        }
    }
    std::vector<double> batch;
    for (int run = 0; run < 26; ++run) {
        const auto start = std::chrono::steady_clock::now();
        const auto out = forward_batch(model, inputs, features);
        if (run > 0 && out.size() == 35) {
            batch.push_back(seconds_since(start));
        }
    }
    const double t = median_of(total), m = median_of(map), r = median_of(recon), b = median_of(batch);
    return {t < 0.1 && m < 0.01 && b < 0.01 && r < 0.02,
            "median predict_next_layer " + fmt(t * 1e3, 3) + " ms, map " + fmt(m * 1e3, 3) + " ms, 35-curve batch " +
                fmt(b * 1e3, 3) + " ms, reconstruction " + fmt(r * 1e3, 3) + " ms"};
}

int cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) {
        std::cerr << "  cli " << args.front() << " failed: " << err.str();
    }
    return code;
}

std::vector<std::string> pipeline_outputs(const fs::path& dir) {
    const std::string d = dir.string();
    if (cli({"generate", "--seed", "21", "--out-dir", d, "--num-layers", "12", "--points", "7", "--name", "w"}) != 0 ||
        cli({"train", "--data", d + "/w-1.jsonl", "--out", d + "/model.json", "--epochs", "5", "--seed", "3"}) != 0 ||
        cli({"predict", "--checkpoint", d + "/model.json", "--data", d + "/w-1.jsonl", "--layer", "7", "--out",
             d + "/pred.jsonl"}) != 0 ||
        cli({"eval", "--pred", d + "/pred.jsonl", "--truth", d + "/w-1.jsonl", "--out", d + "/eval.json"}) != 0) {
        return {};
    }
    std::vector<std::string> files;
    for (const char* name : {"w-1.jsonl", "model.json", "model.json.loss.csv", "pred.jsonl", "eval.json",
                             "eval.json.csv"}) {
        files.push_back(read_file(d + "/" + name));
    }
    return files;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("thermoseer_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const char* saved = std::getenv("THERMOSEER_THREADS");
    const std::string restore = saved ? saved : "";
    const auto a = pipeline_outputs(root / "a");
    ::setenv("THERMOSEER_THREADS", "4", 1);
    const auto b = pipeline_outputs(root / "b");
    if (saved) {
        ::setenv("THERMOSEER_THREADS", restore.c_str(), 1);
    } else {
        ::unsetenv("THERMOSEER_THREADS");
    }
    fs::remove_all(root);
    if (a.empty() || b.empty()) {
        return {false, "pipeline run failed"};
    }
    return {a == b, a == b ? "dataset, checkpoint, loss, predictions and reports byte-identical across runs "
                             "(second run with THERMOSEER_THREADS=4)"
                           : "outputs differ between runs"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermoseer acceptance suite"};
    bool quick = false;
    app.add_flag("--quick", quick, "same-setting benchmark at 100 epochs with median threshold 0.10");
    CLI11_PARSE(app, argc, argv);

    Options opt;
    if (quick) {
        opt.same_setting_epochs = 100;
        opt.same_setting_median = 0.10;
    }

    MappingModel cross_model;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"parameter count", param_count_check},
        {"residual identity", residual_identity},
        {"gradient check", gradient_check},
        {"learning-rate schedule", lr_schedule},
        {"POD energy bound", pod_energy_bound},
        {"ELM vs pseudoinverse", elm_vs_pseudoinverse},
        {"schedule oracle", schedule_oracle},
        {"REOP algebra", reop_algebra},
        {"same-setting benchmark", [&] { return same_setting(opt); }},
        {"cross-setting benchmark", [&] { return cross_setting(opt, cross_model); }},
        {"fine-tuning benefit", [&] { return finetune_benefit(opt, cross_model); }},
        {"latency", latency},
        {"determinism", determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << "C" << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
                  << o.detail << " [" << fmt(seconds_since(start), 3) << " s]" << std::endl;
    }
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
