#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermoseer/synthgen.hpp"
#include "thermoseer/types.hpp"

namespace thermoseer {

/// Flat key=value configuration. Blank lines and lines starting with '#' are ignored.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.contains(key); }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long fallback) const;
    std::uint64_t get_seed(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

/// Comma-separated list of integers or inclusive ranges such as "1,3,5-7".
std::vector<int> parse_int_list(const std::string& text, const std::string& key = "list");
std::vector<double> parse_double_list(const std::string& text, const std::string& key = "list");

/// One wall to synthesize.
struct WallSpec {
    std::string wall_id;
    ProcessSettings settings;
    SynthParams params;
    bool experiment = false;
    ExperimentStyle style;
    int points_per_layer = 7;
    int samples = kDefaultSamples;
};

/// Simulation settings of the nine walls in the simulation design table.
std::vector<ProcessSettings> simulation_presets(int num_layers = 40);
/// Settings of the fifteen printed walls in the experiment design table.
std::vector<ProcessSettings> experiment_presets(int num_layers = 40);
/// Oracle constants used for experiment-style walls.
SynthParams experiment_params(std::uint64_t seed);

/// Expands a generate configuration into wall specs; list-valued process keys
/// produce one wall per entry.
std::vector<WallSpec> wall_specs(const Config& config);

}  // namespace thermoseer
