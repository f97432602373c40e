#include "thermoseer/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "thermoseer/thermal.hpp"

namespace thermoseer {

namespace {

using nlohmann::json;

// Minimal streaming JSON writer; numbers always go through format_double.
class Writer {
public:
    Writer& raw(std::string_view s) {
        out_.append(s);
        return *this;
    }
    Writer& num(double v) {
        out_.append(format_double(v));
        return *this;
    }
    Writer& num(long long v) {
        out_.append(std::to_string(v));
        return *this;
    }
    Writer& str(const std::string& s) {
        out_.append(json(s).dump());
        return *this;
    }
    Writer& key(std::string_view k) {
        out_.push_back('"');
        out_.append(k);
        out_.append("\":");
        return *this;
    }
    template <typename Range>
    Writer& nums(const Range& values) {
        out_.push_back('[');
        bool first = true;
        for (double v : values) {
            if (!first) {
                out_.push_back(',');
            }
            first = false;
            num(v);
        }
        out_.push_back(']');
        return *this;
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

[[noreturn]] void bad(ErrorKind kind, const std::string& origin, const std::string& what) {
    fail(kind, origin + ": " + what);
}

const json& field(const json& j, const char* name, ErrorKind kind, const std::string& origin) {
    if (!j.is_object() || !j.contains(name)) {
        bad(kind, origin, std::string("missing field '") + name + "'");
    }
    return j.at(name);
}

double as_double(const json& j, const char* name, ErrorKind kind, const std::string& origin) {
    const json& v = field(j, name, kind, origin);
    if (!v.is_number()) {
        bad(kind, origin, std::string("field '") + name + "' is not a number");
    }
    return v.get<double>();
}

long long as_int(const json& j, const char* name, ErrorKind kind, const std::string& origin) {
    const json& v = field(j, name, kind, origin);
    if (!v.is_number_integer()) {
        bad(kind, origin, std::string("field '") + name + "' is not an integer");
    }
    return v.get<long long>();
}

std::vector<double> as_doubles(const json& v, const std::string& what, ErrorKind kind, const std::string& origin) {
    if (!v.is_array()) {
        bad(kind, origin, what + " is not an array");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) {
            bad(kind, origin, what + " holds a non-number");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

json parse_json(const std::string& text, ErrorKind kind, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        bad(kind, origin, std::string("malformed JSON: ") + e.what());
    }
}

void write_settings(Writer& w, const ProcessSettings& s) {
    w.raw("{").key("travel_speed").num(s.travel_speed);
    w.raw(",").key("wire_feed_rate").num(s.wire_feed_rate);
    w.raw(",").key("wire_diameter").num(s.wire_diameter);
    w.raw(",").key("layer_length").num(s.layer_length);
    w.raw(",").key("layer_width").num(s.layer_width);
    w.raw(",").key("layer_thickness").num(s.layer_thickness);
    w.raw(",").key("layer_print_time").num(s.layer_print_time);
    w.raw(",").key("deposition_rate").num(s.deposition_rate);
    w.raw(",").key("interpass_target").num(s.interpass_target);
    w.raw(",").key("num_layers").num(static_cast<long long>(s.num_layers)).raw("}");
}

ProcessSettings read_settings(const json& j, const std::string& origin) {
    constexpr auto k = ErrorKind::Data;
    ProcessSettings s;
    s.travel_speed = as_double(j, "travel_speed", k, origin);
    s.wire_feed_rate = as_double(j, "wire_feed_rate", k, origin);
    s.wire_diameter = as_double(j, "wire_diameter", k, origin);
    s.layer_length = as_double(j, "layer_length", k, origin);
    s.layer_width = as_double(j, "layer_width", k, origin);
    s.layer_thickness = as_double(j, "layer_thickness", k, origin);
    s.layer_print_time = as_double(j, "layer_print_time", k, origin);
    s.deposition_rate = as_double(j, "deposition_rate", k, origin);
    s.interpass_target = as_double(j, "interpass_target", k, origin);
    s.num_layers = static_cast<int>(as_int(j, "num_layers", k, origin));
    try {
        s.validate();
    } catch (const Error& e) {
        bad(k, origin, e.what());
    }
    return s;
}

}  // namespace

std::string format_double(double v) {
    if (!std::isfinite(v)) {
        fail(ErrorKind::Data, "serialize: non-finite value");
    }
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    const std::filesystem::path tmp =
        target.parent_path() / ("." + target.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::Data, "write: cannot open " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            fail(ErrorKind::Data, "write: failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        fail(ErrorKind::Data, "write: cannot rename onto " + path + ": " + ec.message());
    }
}

std::string read_file(const std::string& path, ErrorKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(kind, "read: cannot open " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string dataset_to_jsonl(const WallDataset& dataset) {
    Writer w;
    w.raw("{").key("format").str("thermoseer-dataset");
    w.raw(",").key("version").num(static_cast<long long>(kDatasetVersion));
    w.raw(",").key("wall_id").str(dataset.wall_id());
    w.raw(",").key("n").num(static_cast<long long>(dataset.samples()));
    w.raw(",").key("settings");
    write_settings(w, dataset.settings());
    w.raw(",").key("schedule").nums(dataset.schedule().values());
    w.raw(",").key("provenance").raw("{");
    bool first = true;
    for (const auto& [k, v] : dataset.provenance()) {
        if (!first) {
            w.raw(",");
        }
        first = false;
        w.str(k).raw(":").str(v);
    }
    w.raw("}}\n");

    for (const auto& p : dataset.profiles()) {
        const PointId& pt = p.point();
        const MappingFeatures f = mapping_features(dataset.settings(), dataset.schedule(), pt.layer);
        w.raw("{").key("wall_id").str(dataset.wall_id());
        w.raw(",").key("layer").num(static_cast<long long>(pt.layer));
        w.raw(",").key("point_index").num(static_cast<long long>(pt.index));
        w.raw(",").key("d_mm").num(pt.axial_distance);
        w.raw(",").key("t_rd_s").num(pt.relative_delay);
        w.raw(",").key("n").num(static_cast<long long>(p.samples()));
        w.raw(",").key("durations_s").nums(p.durations());
        w.raw(",").key("curves").raw("[");
        for (std::size_t k = 0; k < p.curves().size(); ++k) {
            if (k > 0) {
                w.raw(",");
            }
            w.nums(p.curves()[k].temps());
        }
        w.raw("]");
        w.raw(",").key("features").raw("{").key("t_layer_s").num(f.layer_print_time);
        w.raw(",").key("dwell_s").num(f.dwell_of_source_layer);
        w.raw(",").key("dr_mm3s").num(f.deposition_rate);
        w.raw(",").key("h_mm").num(f.relative_height).raw("}}\n");
    }
    return w.take();
}

WallDataset dataset_from_jsonl(const std::string& text, const std::string& origin) {
    constexpr auto k = ErrorKind::Data;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) {
        bad(k, origin, "empty dataset");
    }
    const json header = parse_json(line, k, origin + ":1");
    if (!header.is_object() || header.value("format", std::string()) != "thermoseer-dataset") {
        bad(k, origin, "not a thermoseer dataset (format field)");
    }
    const long long version = as_int(header, "version", k, origin);
    if (version != kDatasetVersion) {
        bad(k, origin, "unsupported dataset version " + std::to_string(version));
    }
    const std::string wall_id = field(header, "wall_id", k, origin).get<std::string>();
    const int n = static_cast<int>(as_int(header, "n", k, origin));
    const ProcessSettings settings = read_settings(field(header, "settings", k, origin), origin);
    DwellSchedule schedule(as_doubles(field(header, "schedule", k, origin), "schedule", k, origin));
    WallDataset dataset(wall_id, settings, std::move(schedule), n);
    for (const auto& [key, value] : field(header, "provenance", k, origin).items()) {
        if (!value.is_string()) {
            bad(k, origin, "provenance values must be strings");
        }
        dataset.provenance()[key] = value.get<std::string>();
    }

    int number = 1;
    while (std::getline(is, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        const std::string where = origin + ":" + std::to_string(number);
        const json rec = parse_json(line, k, where);
        if (field(rec, "wall_id", k, where) != wall_id) {
            bad(k, where, "record wall_id differs from the header");
        }
        const int layer = static_cast<int>(as_int(rec, "layer", k, where));
        const int index = static_cast<int>(as_int(rec, "point_index", k, where));
        const int rec_n = static_cast<int>(as_int(rec, "n", k, where));
        if (rec_n != n) {
            bad(k, where, "record N=" + std::to_string(rec_n) + " differs from dataset N=" + std::to_string(n));
        }
        PointId pt;
        pt.layer = layer;
        pt.index = index;
        pt.axial_distance = as_double(rec, "d_mm", k, where);
        pt.relative_delay = as_double(rec, "t_rd_s", k, where);
        const auto durations = as_doubles(field(rec, "durations_s", k, where), "durations_s", k, where);
        const json& curves_json = field(rec, "curves", k, where);
        if (durations.size() != kCurvesPerProfile || !curves_json.is_array() ||
            curves_json.size() != kCurvesPerProfile) {
            bad(k, where, "a record needs 5 durations and 5 curves");
        }
        std::vector<Curve> curves;
        try {
            for (int c = 0; c < kCurvesPerProfile; ++c) {
                auto temps = as_doubles(curves_json[static_cast<std::size_t>(c)], "curve", k, where);
                if (static_cast<int>(temps.size()) != n) {
                    bad(k, where, "curve " + std::to_string(c + 1) + " has " + std::to_string(temps.size()) +
                                      " samples, expected " + std::to_string(n));
                }
                curves.emplace_back(std::move(temps), durations[static_cast<std::size_t>(c)], c + 1);
            }
            dataset.add(Profile(pt, std::move(curves)));
        } catch (const Error& e) {
            if (e.kind() == k) {
                throw;
            }
            bad(k, where, e.what());
        }
    }
    return dataset;
}

void save_dataset(const std::string& path, const WallDataset& dataset) {
    write_file_atomic(path, dataset_to_jsonl(dataset));
}

WallDataset load_dataset(const std::string& path) { return dataset_from_jsonl(read_file(path), path); }

std::string checkpoint_to_json(const MappingModel& model) {
    Writer w;
    w.raw("{").key("format").str("thermoseer-ckpt");
    w.raw(",").key("version").num(static_cast<long long>(kCheckpointVersion));
    w.raw(",").key("n").num(static_cast<long long>(model.n));
    w.raw(",").key("layer_widths").raw("[");
    const auto widths = model.layer_widths();
    for (std::size_t i = 0; i < widths.size(); ++i) {
        w.raw(i > 0 ? "," : "").num(static_cast<long long>(widths[i]));
    }
    w.raw("]");
    w.raw(",").key("dropout").num(model.dropout_rate);
    w.raw(",").key("weights").raw("[");
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = model.weights[l];
        w.raw(l > 0 ? "," : "").nums(std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
    }
    w.raw("]");
    w.raw(",").key("biases").raw("[");
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        const auto& b = model.biases[l];
        w.raw(l > 0 ? "," : "").nums(std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
    }
    w.raw("]");
    w.raw(",").key("scaler").raw("{").key("temp_scale").num(model.scaler.temp_scale);
    w.raw(",").key("feature_mean").nums(model.scaler.feature_mean);
    w.raw(",").key("feature_std").nums(model.scaler.feature_std);
    w.raw(",").key("fitted").raw(model.scaler.fitted ? "true" : "false").raw("}");
    w.raw(",").key("seeds").raw("{").key("init").str(std::to_string(model.seed)).raw("}");
    w.raw(",").key("training_meta").raw("{").key("epochs_run").num(static_cast<long long>(model.meta.epochs_run));
    w.raw(",").key("final_loss").num(model.meta.final_loss).raw("}}\n");
    return w.take();
}

MappingModel checkpoint_from_json(const std::string& text, const std::string& origin) {
    constexpr auto k = ErrorKind::Checkpoint;
    const json j = parse_json(text, k, origin);
    if (!j.is_object() || j.value("format", std::string()) != "thermoseer-ckpt") {
        bad(k, origin, "not a thermoseer checkpoint (format field)");
    }
    const long long version = as_int(j, "version", k, origin);
    if (version != kCheckpointVersion) {
        bad(k, origin,
            "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kCheckpointVersion) + ")");
    }
    MappingModel model;
    model.n = static_cast<int>(as_int(j, "n", k, origin));
    if (model.n < 2) {
        bad(k, origin, "n must be >= 2");
    }
    const auto widths = model.layer_widths();
    const json& stored_widths = field(j, "layer_widths", k, origin);
    if (!stored_widths.is_array() || stored_widths.size() != widths.size()) {
        bad(k, origin, "layer_widths do not describe six affine maps");
    }
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (stored_widths[i] != widths[i]) {
            bad(k, origin, "layer_widths do not match N=" + std::to_string(model.n));
        }
    }
    model.dropout_rate = as_double(j, "dropout", k, origin);
    const json& weights = field(j, "weights", k, origin);
    const json& biases = field(j, "biases", k, origin);
    if (!weights.is_array() || !biases.is_array() || weights.size() != widths.size() ||
        biases.size() != widths.size()) {
        bad(k, origin, "weights and biases need one entry per affine map");
    }
    int fan_in = model.n + 4;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const auto w = as_doubles(weights[l], "weights", k, origin);
        const auto b = as_doubles(biases[l], "biases", k, origin);
        if (w.size() != static_cast<std::size_t>(widths[l]) * static_cast<std::size_t>(fan_in) ||
            b.size() != static_cast<std::size_t>(widths[l])) {
            bad(k, origin, "affine map " + std::to_string(l + 1) + " has the wrong parameter count");
        }
        model.weights.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            w.data(), widths[l], fan_in));
        model.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), widths[l]));
        fan_in = widths[l];
    }
    const json& scaler = field(j, "scaler", k, origin);
    model.scaler.temp_scale = as_double(scaler, "temp_scale", k, origin);
    const auto mean = as_doubles(field(scaler, "feature_mean", k, origin), "feature_mean", k, origin);
    const auto sd = as_doubles(field(scaler, "feature_std", k, origin), "feature_std", k, origin);
    if (mean.size() != 4 || sd.size() != 4) {
        bad(k, origin, "scaler needs 4 feature means and deviations");
    }
    std::copy(mean.begin(), mean.end(), model.scaler.feature_mean.begin());
    std::copy(sd.begin(), sd.end(), model.scaler.feature_std.begin());
    const json& fitted = field(scaler, "fitted", k, origin);
    if (!fitted.is_boolean()) {
        bad(k, origin, "scaler.fitted must be a boolean");
    }
    model.scaler.fitted = fitted.get<bool>();
    const json& seed = field(field(j, "seeds", k, origin), "init", k, origin);
    if (!seed.is_string()) {
        bad(k, origin, "seeds.init must be a decimal string");
    }
    model.seed = std::stoull(seed.get<std::string>());
    const json& meta = field(j, "training_meta", k, origin);
    model.meta.epochs_run = static_cast<int>(as_int(meta, "epochs_run", k, origin));
    model.meta.final_loss = as_double(meta, "final_loss", k, origin);
    return model;
}

void save_checkpoint(const std::string& path, const MappingModel& model) {
    write_file_atomic(path, checkpoint_to_json(model));
}

MappingModel load_checkpoint(const std::string& path) {
    return checkpoint_from_json(read_file(path, ErrorKind::Checkpoint), path);
}

std::string eval_report_json(const EvalReport& report) {
    Writer w;
    auto summary = [&w](const LayerSummary& s) {
        w.raw("{").key("layer").num(static_cast<long long>(s.layer));
        w.raw(",").key("count").num(static_cast<long long>(s.count));
        w.raw(",").key("median").num(s.median);
        w.raw(",").key("q1").num(s.q1);
        w.raw(",").key("q3").num(s.q3);
        w.raw(",").key("max").num(s.max).raw("}");
    };
    w.raw("{").key("format").str("thermoseer-eval");
    w.raw(",").key("version").num(1LL);
    w.raw(",").key("overall");
    summary(report.overall);
    w.raw(",").key("layers").raw("[");
    for (std::size_t i = 0; i < report.layers.size(); ++i) {
        w.raw(i > 0 ? "," : "");
        summary(report.layers[i]);
    }
    w.raw("]");
    w.raw(",").key("points").raw("[");
    for (std::size_t i = 0; i < report.scores.size(); ++i) {
        const auto& s = report.scores[i];
        w.raw(i > 0 ? "," : "").raw("{").key("layer").num(static_cast<long long>(s.layer));
        w.raw(",").key("point").num(static_cast<long long>(s.index));
        w.raw(",").key("d_mm").num(s.axial_distance);
        w.raw(",").key("reop").num(s.reop).raw("}");
    }
    w.raw("]}\n");
    return w.take();
}

std::string eval_report_csv(const EvalReport& report) {
    std::string out = "layer,point,reop\n";
    for (const auto& s : report.scores) {
        out += std::to_string(s.layer) + "," + std::to_string(s.index) + "," + format_double(s.reop) + "\n";
    }
    return out;
}

std::string timing_json(std::span<const LayerTiming> timing) {
    Writer w;
    w.raw("{").key("layers").raw("[");
    double map = 0.0;
    double recon = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < timing.size(); ++i) {
        const auto& t = timing[i];
        w.raw(i > 0 ? "," : "").raw("{").key("layer").num(static_cast<long long>(t.layer));
        w.raw(",").key("map_seconds").num(t.map_seconds);
        w.raw(",").key("reconstruct_seconds").num(t.reconstruct_seconds);
        w.raw(",").key("total_seconds").num(t.total_seconds).raw("}");
        map += t.map_seconds;
        recon += t.reconstruct_seconds;
        total += t.total_seconds;
    }
    w.raw("]");
    w.raw(",").key("map_seconds").num(map);
    w.raw(",").key("reconstruct_seconds").num(recon);
    w.raw(",").key("total_seconds").num(total).raw("}\n");
    return w.take();
}

std::string loss_csv(std::span<const double> loss, std::span<const double> lr) {
    require(loss.size() == lr.size(), ErrorKind::Shape, "loss_csv: loss and lr histories differ in length");
    std::string out = "epoch,loss,lr\n";
    for (std::size_t e = 0; e < loss.size(); ++e) {
        out += std::to_string(e + 1) + "," + format_double(loss[e]) + "," + format_double(lr[e]) + "\n";
    }
    return out;
}

std::string field_csv(std::span<const FieldFrame> frames) {
    std::string out = "local_time_s,position_mm,temp_c,extrapolated\n";
    for (const auto& f : frames) {
        for (std::size_t p = 0; p < f.positions.size(); ++p) {
            out += format_double(f.local_time) + "," + format_double(f.positions[p]) + "," +
                   format_double(f.temps[p]) + "," + (f.extrapolated[p] ? "1" : "0") + "\n";
        }
    }
    return out;
}

}  // namespace thermoseer
