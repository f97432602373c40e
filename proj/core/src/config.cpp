#include "thermoseer/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "thermoseer/errors.hpp"

namespace thermoseer {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, sep)) {
        out.push_back(trim(item));
    }
    return out;
}

double to_double(const std::string& text, const std::string& key) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        fail(ErrorKind::Config, "config: " + key + " = '" + text + "' is not a number");
    }
    return v;
}

long long to_int(const std::string& text, const std::string& key) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        fail(ErrorKind::Config, "config: " + key + " = '" + text + "' is not an integer");
    }
    return v;
}

struct SimulationRow {
    double ts, wfr, t_layer, dr, lt;
};

constexpr SimulationRow kSimulationTable[] = {
    {8, 3, 20.5, 52.8, 1.5},     {8, 6, 20.5, 70.4, 2.0},     {15, 3, 11.17, 92.4, 1.4},
    {15, 6, 11.17, 105.6, 1.6},  {11, 4.5, 15.05, 77.44, 1.6}, {8, 4.5, 20.5, 63.36, 1.8},
    {15, 4.5, 11.17, 99, 1.5},   {11, 3, 15.05, 72.6, 1.5},    {11, 6, 15.05, 87.12, 1.8},
};

struct ExperimentRow {
    double ts, wfr, sh, t_layer;
};

constexpr ExperimentRow kExperimentTable[] = {
    {8, 3, 1.6, 20.2},   {8, 6, 1.6, 20.2},   {8, 6, 2, 20.2},     {8, 3, 2, 20.2},     {15, 3, 1.4, 10.9},
    {15, 3, 1.4, 10.9},  {15, 6, 1.6, 10.9},  {15, 6, 1.6, 10.9},  {11, 4.5, 1.5, 14.8}, {8, 4.5, 1.8, 20.2},
    {15, 4.5, 1.5, 10.9}, {11, 3, 1.5, 14.8}, {11, 6, 1.8, 14.8},  {11, 4.5, 1.6, 14.8}, {11, 4.5, 1.7, 14.8},
};

using ParamField = std::pair<const char*, double SynthParams::*>;

constexpr ParamField kParamFields[] = {
    {"ambient", &SynthParams::ambient},
    {"peak_base", &SynthParams::peak_base},
    {"cool_tau0", &SynthParams::cool_tau0},
    {"cool_height_gain", &SynthParams::cool_height_gain},
    {"reheat_tau", &SynthParams::reheat_tau},
    {"reheat_decay", &SynthParams::reheat_decay},
    {"reheat_gain", &SynthParams::reheat_gain},
    {"dr_gain", &SynthParams::dr_gain},
    {"position_gain", &SynthParams::position_gain},
    {"edge_gain", &SynthParams::edge_gain},
    {"edge_length", &SynthParams::edge_length},
    {"noise_sd", &SynthParams::noise_sd},
    {"sample_period", &SynthParams::sample_period},
};

// Value of a possibly list-valued key for wall w of `count`.
std::optional<double> per_wall(const Config& config, const std::string& key, std::size_t w, std::size_t count) {
    if (!config.has(key)) {
        return std::nullopt;
    }
    const auto values = config.get_doubles(key);
    if (values.size() == 1) {
        return values.front();
    }
    if (values.size() != count) {
        std::ostringstream os;
        os << "config: " << key << " lists " << values.size() << " values but " << count << " walls are defined";
        fail(ErrorKind::Config, os.str());
    }
    return values[w];
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
    Config config;
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
            std::ostringstream os;
            os << origin << ":" << number << ": expected key=value, got '" << t << "'";
            fail(ErrorKind::Config, os.str());
        }
        config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return config;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Config, "config: cannot read " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str(), path);
}

std::string Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        fail(ErrorKind::Config, "config: missing required key '" + key + "'");
    }
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const { return to_double(get(key), key); }

double Config::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const { return to_int(get(key), key); }

long long Config::get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_seed(const std::string& key) const {
    const long long v = get_int(key);
    if (v < 0) {
        fail(ErrorKind::Config, "config: " + key + " must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v);
}

std::vector<double> Config::get_doubles(const std::string& key) const { return parse_double_list(get(key), key); }

std::vector<int> Config::get_ints(const std::string& key) const { return parse_int_list(get(key), key); }

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    for (const auto& item : split(text, ',')) {
        const auto dash = item.find('-', 1);
        if (dash != std::string::npos) {
            const auto lo = to_int(trim(item.substr(0, dash)), key);
            const auto hi = to_int(trim(item.substr(dash + 1)), key);
            if (hi < lo) {
                fail(ErrorKind::Config, "config: " + key + " has a descending range '" + item + "'");
            }
            for (auto v = lo; v <= hi; ++v) {
                out.push_back(static_cast<int>(v));
            }
        } else {
            out.push_back(static_cast<int>(to_int(item, key)));
        }
    }
    if (out.empty()) {
        fail(ErrorKind::Config, "config: " + key + " is an empty list");
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        out.push_back(to_double(item, key));
    }
    if (out.empty()) {
        fail(ErrorKind::Config, "config: " + key + " is an empty list");
    }
    return out;
}

std::vector<ProcessSettings> simulation_presets(int num_layers) {
    std::vector<ProcessSettings> out;
    for (const auto& row : kSimulationTable) {
        ProcessSettings s = ProcessSettings::simulation(row.ts, row.wfr, row.lt, num_layers);
        s.layer_print_time = row.t_layer;
        s.deposition_rate = row.dr;
        out.push_back(s);
    }
    return out;
}

std::vector<ProcessSettings> experiment_presets(int num_layers) {
    std::vector<ProcessSettings> out;
    for (const auto& row : kExperimentTable) {
        out.push_back(ProcessSettings::experiment(row.ts, row.wfr, row.sh, row.t_layer, num_layers));
    }
    return out;
}

SynthParams experiment_params(std::uint64_t seed) {
    SynthParams p;
    p.cool_tau0 = 28.0;
    p.reheat_gain = 0.65;
    p.seed = seed;
    return p;
}

namespace {

std::vector<WallSpec> expand_wall_specs(const Config& config) {
    const std::uint64_t seed = config.get_seed("seed");
    const int num_layers = static_cast<int>(config.get_int_or("num_layers", 40));
    const std::string preset = config.get_or("preset", "custom");
    const std::string default_style = preset == "table1" ? "experiment" : "simulation";
    const std::string style = config.get_or("style", default_style);
    if (style != "simulation" && style != "experiment") {
        fail(ErrorKind::Config, "config: style must be 'simulation' or 'experiment', got '" + style + "'");
    }

    std::vector<ProcessSettings> settings;
    std::vector<int> rows;
    std::string prefix = config.get_or("name", "wall");
    if (preset == "table4" || preset == "table1") {
        settings = preset == "table4" ? simulation_presets(num_layers) : experiment_presets(num_layers);
        if (!config.has("name")) {
            prefix = preset == "table4" ? "sim" : "exp";
        }
        rows = config.has("walls") ? config.get_ints("walls") : std::vector<int>{};
        if (rows.empty()) {
            for (std::size_t r = 1; r <= settings.size(); ++r) {
                rows.push_back(static_cast<int>(r));
            }
        }
        for (int r : rows) {
            if (r < 1 || r > static_cast<int>(settings.size())) {
                std::ostringstream os;
                os << "config: walls entry " << r << " outside [1, " << settings.size() << "] of preset " << preset;
                fail(ErrorKind::Config, os.str());
            }
        }
    } else if (preset == "custom") {
        const std::size_t count = config.has("travel_speed") ? config.get_doubles("travel_speed").size() : 1;
        for (std::size_t w = 0; w < count; ++w) {
            const double ts = per_wall(config, "travel_speed", w, count).value_or(8.0);
            const double wfr = per_wall(config, "wire_feed_rate", w, count).value_or(3.0);
            const double lt = per_wall(config, "layer_thickness", w, count).value_or(1.5);
            ProcessSettings s = style == "experiment"
                                    ? ProcessSettings::experiment(ts, wfr, lt, 160.0 / ts + 0.5, num_layers)
                                    : ProcessSettings::simulation(ts, wfr, lt, num_layers);
            if (auto t = per_wall(config, "layer_print_time", w, count)) {
                s.layer_print_time = *t;
            }
            if (auto dr = per_wall(config, "deposition_rate", w, count)) {
                s.deposition_rate = *dr;
            }
            settings.push_back(s);
            rows.push_back(static_cast<int>(w + 1));
        }
    } else {
        fail(ErrorKind::Config, "config: preset must be 'table4', 'table1' or 'custom', got '" + preset + "'");
    }

    std::vector<WallSpec> specs;
    for (std::size_t w = 0; w < rows.size(); ++w) {
        WallSpec spec;
        spec.settings = settings[static_cast<std::size_t>(rows[w] - 1)];
        spec.settings.interpass_target = config.get_double_or("interpass_target", spec.settings.interpass_target);
        spec.experiment = style == "experiment";
        const std::uint64_t wall_seed = derive_seed(seed, static_cast<std::uint64_t>(rows[w]));
        spec.params = spec.experiment ? experiment_params(wall_seed) : SynthParams{};
        spec.params.seed = wall_seed;
        for (const auto& [name, field] : kParamFields) {
            spec.params.*field = config.get_double_or(std::string("oracle.") + name, spec.params.*field);
        }
        spec.style.clamp_low = config.get_double_or("clamp_low", spec.style.clamp_low);
        spec.style.clamp_high = config.get_double_or("clamp_high", spec.style.clamp_high);
        spec.style.noise_sd = config.get_double_or("pyrometer_noise_sd", spec.style.noise_sd);
        spec.style.jitter_mm = config.get_double_or("jitter_mm", spec.style.jitter_mm);
        spec.points_per_layer = static_cast<int>(config.get_int_or("points", 7));
        spec.samples = static_cast<int>(config.get_int_or("samples", kDefaultSamples));
        spec.wall_id = prefix + "-" + std::to_string(rows[w]);
        try {
            spec.settings.validate();
            spec.params.validate();
        } catch (const Error& e) {
            fail(ErrorKind::Config, std::string("config: wall ") + spec.wall_id + ": " + e.what());
        }
        if (spec.points_per_layer < 2 || spec.samples < 2) {
            fail(ErrorKind::Config, "config: points and samples must be >= 2");
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

}  // namespace

std::vector<WallSpec> wall_specs(const Config& config) {
    try {
        return expand_wall_specs(config);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) {
            throw;
        }
        fail(ErrorKind::Config, std::string("config: ") + e.what());
    }
}

}  // namespace thermoseer
