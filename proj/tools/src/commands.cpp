#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "thermoseer/io.hpp"
#include "thermoseer/mapping.hpp"
#include "thermoseer/pipeline.hpp"
#include "thermoseer/preprocess.hpp"
#include "thermoseer/synthgen.hpp"
#include "thermoseer/thermal.hpp"

namespace thermoseer::cli {

namespace {

struct Flag {
    const char* name;
    const char* help;
};

const std::map<std::string, std::vector<Flag>>& command_flags() {
    static const std::map<std::string, std::vector<Flag>> flags = {
        {"generate",
         {{"seed", "root RNG seed (required)"},
          {"out-dir", "directory for the generated dataset files"},
          {"preset", "table4, table1 or custom"},
          {"walls", "preset rows to generate, e.g. 1-4,6-9"},
          {"style", "simulation or experiment"},
          {"num-layers", "layers per wall"},
          {"points", "points per layer"},
          {"samples", "samples per curve (N)"},
          {"travel-speed", "custom walls: travel speed list, mm/s"},
          {"wire-feed-rate", "custom walls: wire feed rate list, m/min"},
          {"layer-thickness", "custom walls: layer thickness list, mm"},
          {"layer-print-time", "custom walls: layer print time list, s"},
          {"interpass-target", "interpass temperature, °C"},
          {"name", "wall id prefix"}}},
        {"train",
         {{"data", "comma-separated dataset files"},
          {"out", "output checkpoint"},
          {"loss-csv", "per-epoch loss CSV (default: <out>.loss.csv)"},
          {"epochs", "training epochs"},
          {"batch-size", "mini-batch size"},
          {"lr", "initial learning rate"},
          {"lr-decay-ratio", "learning-rate decay factor"},
          {"lr-decay-epochs", "epochs after which the rate decays"},
          {"seed", "shuffle and dropout seed"},
          {"init-seed", "weight initialization seed"},
          {"first-layer", "lowest layer used for curve pairs"},
          {"last-layer", "highest layer used for curve pairs"},
          {"points", "point indices used for curve pairs"}}},
        {"finetune",
         {{"checkpoint", "pretrained checkpoint"},
          {"data", "comma-separated dataset files"},
          {"out", "output checkpoint"},
          {"loss-csv", "per-epoch loss CSV (default: <out>.loss.csv)"},
          {"epochs", "training epochs"},
          {"batch-size", "mini-batch size"},
          {"lr", "initial learning rate"},
          {"lr-decay-ratio", "learning-rate decay factor"},
          {"lr-decay-epochs", "epochs after which the rate decays"},
          {"seed", "shuffle and dropout seed"},
          {"first-layer", "lowest layer used for curve pairs"},
          {"last-layer", "highest layer used for curve pairs"},
          {"points", "point indices used for curve pairs"}}},
        {"predict",
         {{"checkpoint", "trained checkpoint"},
          {"data", "dataset holding the measured layer"},
          {"layer", "layer to predict (>= 2)"},
          {"out", "predicted profiles (dataset format)"},
          {"timing", "timing JSON (default: <out>.timing.json)"},
          {"points", "measured point indices (default: all)"},
          {"elm-seed", "ELM hidden-layer seed"}}},
        {"eval",
         {{"pred", "predicted profiles file"},
          {"truth", "truth dataset"},
          {"out", "report JSON"},
          {"csv", "per-point CSV (default: <out>.csv)"}}},
        {"field",
         {{"checkpoint", "trained checkpoint"},
          {"data", "dataset holding the measured layer"},
          {"layer", "layer to predict (>= 2)"},
          {"times", "comma-separated local times, s"},
          {"out", "field CSV"},
          {"positions", "evenly spaced positions per frame"},
          {"points", "measured point indices (default: all)"},
          {"elm-seed", "ELM hidden-layer seed"}}},
        {"benchmark",
         {{"checkpoint", "trained checkpoint"},
          {"data", "test dataset"},
          {"layers", "predicted layers, e.g. 31-35"},
          {"measured", "measured point indices (default: odd)"},
          {"evaluated", "evaluated point indices (default: even)"},
          {"out", "report JSON"},
          {"csv", "per-point CSV (default: <out>.csv)"},
          {"timing", "timing JSON (default: <out>.timing.json)"},
          {"elm-seed", "ELM hidden-layer seed"}}},
    };
    return flags;
}

std::string key_of(const std::string& flag) {
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

std::vector<std::string> paths(const Config& config, const std::string& key) {
    std::vector<std::string> out;
    std::istringstream is(config.get(key));
    std::string item;
    while (std::getline(is, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    if (out.empty()) {
        fail(ErrorKind::Config, "config: " + key + " names no files");
    }
    return out;
}

std::vector<int> optional_ints(const Config& config, const std::string& key) {
    return config.has(key) ? config.get_ints(key) : std::vector<int>{};
}

TrainConfig train_config(const Config& config) {
    TrainConfig tc;
    tc.epochs = static_cast<int>(config.get_int_or("epochs", tc.epochs));
    tc.batch_size = static_cast<int>(config.get_int_or("batch_size", tc.batch_size));
    tc.initial_lr = config.get_double_or("lr", tc.initial_lr);
    tc.lr_decay_ratio = config.get_double_or("lr_decay_ratio", tc.lr_decay_ratio);
    if (config.has("lr_decay_epochs")) {
        tc.lr_decay_epochs = config.get_ints("lr_decay_epochs");
    }
    tc.seed = config.has("seed") ? config.get_seed("seed") : tc.seed;
    tc.validate();
    return tc;
}

std::vector<CurvePairSample> collect_pairs(const Config& config, int& n) {
    const int first = static_cast<int>(config.get_int_or("first_layer", 1));
    const int last = static_cast<int>(config.get_int_or("last_layer", 1 << 20));
    const std::vector<int> points = optional_ints(config, "points");
    std::vector<CurvePairSample> pairs;
    n = 0;
    for (const auto& path : paths(config, "data")) {
        const WallDataset wall = load_dataset(path);
        if (n != 0 && wall.samples() != n) {
            std::ostringstream os;
            os << "train: " << path << " has N=" << wall.samples() << " but earlier datasets have N=" << n;
            fail(ErrorKind::Data, os.str());
        }
        n = wall.samples();
        auto more = extract_curve_pairs(wall, first, last, points);
        pairs.insert(pairs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    if (pairs.empty()) {
        fail(ErrorKind::Data, "train: the datasets yield no curve pairs for the selected layers and points");
    }
    return pairs;
}

void write_training(const Config& config, const TrainResult& result, std::ostream& out) {
    const std::string ckpt = config.get("out");
    save_checkpoint(ckpt, result.model);
    const std::string loss_path = config.get_or("loss_csv", ckpt + ".loss.csv");
    write_file_atomic(loss_path, loss_csv(result.loss_history, result.lr_history));
    out << "checkpoint " << ckpt << " (" << param_count(result.model) << " parameters, "
        << result.model.meta.epochs_run << " epochs run)\n";
    if (!result.loss_history.empty()) {
        out << "loss " << format_double(result.loss_history.front()) << " -> "
            << format_double(result.loss_history.back()) << "\n";
    }
}

ReconstructOptions reconstruct_options(const Config& config) {
    ReconstructOptions options;
    if (config.has("elm_seed")) {
        options.elm_seed = config.get_seed("elm_seed");
    }
    return options;
}

int target_layer(const Config& config) {
    const auto layer = config.get_int("layer");
    if (layer <= 1) {
        fail(ErrorKind::Protocol, "predict: layer 1 has no printed layer below it to map from");
    }
    return static_cast<int>(layer);
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config:
            return kConfigError;
        case ErrorKind::Checkpoint:
            return kCheckpointError;
        case ErrorKind::Protocol:
            return kProtocolError;
        case ErrorKind::Horizon:
            return kHorizonError;
        default:
            return kDataError;
    }
}

int cmd_generate(const Config& config, std::ostream& out) {
    const auto specs = wall_specs(config);
    const std::filesystem::path dir = config.get_or("out_dir", ".");
    std::filesystem::create_directories(dir);
    std::size_t total_pairs = 0;
    for (const auto& spec : specs) {
        const WallDataset wall =
            spec.experiment ? generate_experiment_wall(spec.settings, spec.params, spec.points_per_layer, spec.style,
                                                       spec.samples, spec.wall_id)
                            : generate_wall(spec.settings, spec.params, spec.points_per_layer, spec.samples,
                                            spec.wall_id);
        const auto path = (dir / (spec.wall_id + ".jsonl")).string();
        save_dataset(path, wall);
        const std::size_t pairs = extract_curve_pairs(wall, 1, wall.settings().num_layers).size();
        total_pairs += pairs;
        const auto layers = wall.layers();
        out << path << ": layers " << layers.front() << "-" << layers.back() << ", " << wall.points_per_layer()
            << " points per layer, " << wall.profiles().size() << " profiles, " << pairs << " curve pairs\n";
    }
    out << specs.size() << " walls, " << total_pairs << " curve pairs\n";
    return kOk;
}

int cmd_train(const Config& config, std::ostream& out) {
    const TrainConfig tc = train_config(config);
    int n = 0;
    const auto pairs = collect_pairs(config, n);
    const std::uint64_t init_seed = config.has("init_seed") ? config.get_seed("init_seed") : 1;
    out << "training on " << pairs.size() << " curve pairs, N=" << n << ", " << tc.epochs << " epochs\n";
    write_training(config, train(init_model(n, init_seed), pairs, tc), out);
    return kOk;
}

int cmd_finetune(const Config& config, std::ostream& out) {
    const TrainConfig tc = train_config(config);
    const MappingModel pretrained = load_checkpoint(config.get("checkpoint"));
    int n = 0;
    const auto pairs = collect_pairs(config, n);
    if (n != pretrained.n) {
        std::ostringstream os;
        os << "finetune: datasets have N=" << n << ", checkpoint has N=" << pretrained.n;
        fail(ErrorKind::Data, os.str());
    }
    out << "fine-tuning on " << pairs.size() << " curve pairs, " << tc.epochs << " epochs\n";
    write_training(config, finetune(pretrained, pairs, tc), out);
    return kOk;
}

int cmd_predict(const Config& config, std::ostream& out) {
    const int layer = target_layer(config);
    const MappingModel model = load_checkpoint(config.get("checkpoint"));
    const WallDataset data = load_dataset(config.get("data"));
    const std::vector<int> points = optional_ints(config, "points");
    const LayerPrediction prediction = predict_layer(model, data, layer, points, reconstruct_options(config));

    WallDataset predicted(data.wall_id(), data.settings(), data.schedule(), data.samples());
    predicted.provenance()["kind"] = "prediction";
    predicted.provenance()["source_layer"] = std::to_string(layer - 1);
    predicted.provenance()["m_star"] = std::to_string(prediction.reconstruction.m_star);
    auto targets = data.layer(layer);
    if (targets.empty()) {
        targets = prediction.mapped_profiles;
    }
    for (const auto& t : targets) {
        predicted.add(predict_point(prediction, t.point().axial_distance, data.settings()).relabeled(t.point()));
    }
    const std::string path = config.get("out");
    save_dataset(path, predicted);
    const LayerTiming timing{layer, prediction.map_seconds, prediction.reconstruct_seconds, prediction.elapsed};
    const std::string timing_path = config.get_or("timing", path + ".timing.json");
    write_file_atomic(timing_path, timing_json(std::span<const LayerTiming>(&timing, 1)));
    out << "layer " << layer << ": " << targets.size() << " profiles, m* = " << prediction.reconstruction.m_star
        << ", " << format_double(prediction.elapsed) << " s\n";
    return kOk;
}

int cmd_eval(const Config& config, std::ostream& out) {
    const WallDataset pred = load_dataset(config.get("pred"));
    const WallDataset truth_data = load_dataset(config.get("truth"));
    const auto pred_layers = pred.layers();
    std::vector<Profile> truth;
    for (const auto& t : truth_data.profiles()) {
        if (!std::binary_search(pred_layers.begin(), pred_layers.end(), t.point().layer)) {
            continue;
        }
        const Profile* p = pred.find(t.point().layer, t.point().index);
        truth.push_back(p != nullptr ? truncate_profile(t, p->durations()) : t);
    }
    const EvalReport report = evaluate(pred.profiles(), truth);
    const std::string path = config.get("out");
    write_file_atomic(path, eval_report_json(report));
    write_file_atomic(config.get_or("csv", path + ".csv"), eval_report_csv(report));
    for (const auto& l : report.layers) {
        out << "layer " << l.layer << ": median " << format_double(l.median) << ", max " << format_double(l.max)
            << "\n";
    }
    return kOk;
}

int cmd_field(const Config& config, std::ostream& out) {
    const int layer = target_layer(config);
    const MappingModel model = load_checkpoint(config.get("checkpoint"));
    const WallDataset data = load_dataset(config.get("data"));
    const std::vector<double> times = config.get_doubles("times");
    const int positions = static_cast<int>(config.get_int_or("positions", kDefaultFieldPositions));
    if (positions < 2) {
        fail(ErrorKind::Config, "config: positions must be >= 2");
    }
    const LayerPrediction prediction =
        predict_layer(model, data, layer, optional_ints(config, "points"), reconstruct_options(config));
    std::vector<FieldFrame> frames;
    for (double t : times) {
        frames.push_back(render_field(prediction, data.settings(), t, positions));
    }
    write_file_atomic(config.get("out"), field_csv(frames));
    out << frames.size() << " frames of " << positions << " positions; horizon "
        << format_double(field_horizon(prediction)) << " s\n";
    return kOk;
}

int cmd_benchmark(const Config& config, std::ostream& out) {
    const MappingModel model = load_checkpoint(config.get("checkpoint"));
    const WallDataset data = load_dataset(config.get("data"));
    BenchmarkOptions options;
    options.measured_points = optional_ints(config, "measured");
    options.evaluated_points = optional_ints(config, "evaluated");
    options.reconstruct = reconstruct_options(config);
    const std::vector<int> layers = config.get_ints("layers");
    const BenchmarkReport report = run_benchmark(model, data, layers, options);
    const std::string path = config.get("out");
    write_file_atomic(path, eval_report_json(report.eval));
    write_file_atomic(config.get_or("csv", path + ".csv"), eval_report_csv(report.eval));
    write_file_atomic(config.get_or("timing", path + ".timing.json"), timing_json(report.timing));
    for (const auto& l : report.eval.layers) {
        out << "layer " << l.layer << ": median " << format_double(l.median) << ", max " << format_double(l.max)
            << "\n";
    }
    return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online thermal-field prediction for thin walls", "thermoseer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "thermoseer 0.1.0");

    using Handler = int (*)(const Config&, std::ostream&);
    const std::map<std::string, std::pair<Handler, const char*>> handlers = {
        {"generate", {cmd_generate, "Synthesize wall datasets"}},
        {"train", {cmd_train, "Train the mapping model"}},
        {"finetune", {cmd_finetune, "Fine-tune a checkpoint on a small dataset"}},
        {"predict", {cmd_predict, "Predict the profiles of a yet-to-print layer"}},
        {"eval", {cmd_eval, "Score predicted profiles against truth"}},
        {"field", {cmd_field, "Render temperature fields of a predicted layer"}},
        {"benchmark", {cmd_benchmark, "Predict and score held-out points over layers"}},
    };

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> options;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, std::vector<std::string>> overrides;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : handlers) {
        CLI::App* sub = app.add_subcommand(name, entry.second);
        subs[name] = sub;
        sub->add_option("--config", config_paths[name], "key=value configuration file");
        sub->add_option("--set", overrides[name], "extra key=value setting")->allow_extra_args(false);
        for (const auto& flag : command_flags().at(name)) {
            auto* opt = sub->add_option(std::string("--") + flag.name, values[name][flag.name], flag.help);
            options[name].emplace_back(flag.name, opt);
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << "thermoseer 0.1.0\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return e.get_exit_code() == 0 ? kOk : kConfigError;
    }

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) {
            continue;
        }
        try {
            Config config = config_paths[name].empty() ? Config{} : Config::load(config_paths[name]);
            for (const auto& kv : overrides[name]) {
                const Config one = Config::parse(kv, "--set");
                for (const auto& [k, v] : one.values()) {
                    config.set(k, v);
                }
            }
            for (const auto& [flag, opt] : options[name]) {
                if (opt->count() > 0) {
                    config.set(key_of(flag), values[name][flag]);
                }
            }
            return handlers.at(name).first(config, out);
        } catch (const Error& e) {
            err << "error: " << e.what() << "\n";
            return exit_code(e.kind());
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kDataError;
        }
    }
    return kUsage;
}

}  // namespace thermoseer::cli
