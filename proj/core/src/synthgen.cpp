#include "thermoseer/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thermoseer/errors.hpp"
#include "thermoseer/parallel.hpp"
#include "thermoseer/thermal.hpp"

namespace thermoseer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double tau_c(const SynthParams& p, const ProcessSettings& s, int layer, double d) {
    const double height = layer * s.layer_thickness;
    return p.cool_tau0 * (1.0 + p.cool_height_gain * height) *
           (1.0 - p.edge_gain * std::exp(-d / p.edge_length));
}

double amplitude_1(const SynthParams& p, const ProcessSettings& s, double d) {
    const double base = p.peak_base + p.dr_gain * s.deposition_rate - p.ambient;
    return base * (1.0 + p.position_gain * (d / s.layer_length - 0.5));
}

double end_of_print(const SynthParams& p, const ProcessSettings& s, int layer) {
    const double d = s.layer_length;
    const double since_deposit = s.layer_print_time - d / s.travel_speed;
    return p.ambient + amplitude_1(p, s, d) * std::exp(-since_deposit / tau_c(p, s, layer, d));
}

double peak(const SynthParams& p, const ProcessSettings& s) {
    return p.ambient + amplitude_1(p, s, s.layer_length);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void record_params(WallDataset& wall, const SynthParams& p) {
    auto& prov = wall.provenance();
    prov["generator"] = "thin-wall-oracle";
    prov["seed"] = std::to_string(p.seed);
    prov["ambient"] = fmt(p.ambient);
    prov["peak_base"] = fmt(p.peak_base);
    prov["cool_tau0"] = fmt(p.cool_tau0);
    prov["cool_height_gain"] = fmt(p.cool_height_gain);
    prov["reheat_tau"] = fmt(p.reheat_tau);
    prov["reheat_decay"] = fmt(p.reheat_decay);
    prov["reheat_gain"] = fmt(p.reheat_gain);
    prov["dr_gain"] = fmt(p.dr_gain);
    prov["position_gain"] = fmt(p.position_gain);
    prov["edge_gain"] = fmt(p.edge_gain);
    prov["edge_length"] = fmt(p.edge_length);
    prov["noise_sd"] = fmt(p.noise_sd);
    prov["noise_distribution"] = "gaussian";
    prov["sample_period"] = fmt(p.sample_period);
}

std::vector<double> add_noise_and_clamp(std::span<const double> temps, double low, double high,
                                        double noise_sd, std::mt19937_64& rng) {
    std::vector<double> out(temps.begin(), temps.end());
    if (noise_sd > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_sd);
        for (double& t : out) {
            t += noise(rng);
        }
    }
    for (double& t : out) {
        t = std::clamp(t, low, high);
    }
    return out;
}

}  // namespace

void SynthParams::validate() const {
    require(cool_tau0 > 0.0, ErrorKind::Domain, "synth params: cool_tau0 must be > 0");
    require(reheat_tau > 0.0, ErrorKind::Domain, "synth params: reheat_tau must be > 0");
    require(reheat_decay > 0.0 && reheat_decay < 1.0, ErrorKind::Domain,
            "synth params: reheat_decay must lie in (0, 1)");
    require(reheat_gain >= 0.0, ErrorKind::Domain, "synth params: reheat_gain must be >= 0");
    require(noise_sd >= 0.0, ErrorKind::Domain, "synth params: noise_sd must be >= 0");
    require(cool_height_gain >= 0.0, ErrorKind::Domain, "synth params: cool_height_gain must be >= 0");
    require(edge_gain >= 0.0 && edge_gain < 1.0, ErrorKind::Domain,
            "synth params: edge_gain must lie in [0, 1)");
    require(edge_length > 0.0, ErrorKind::Domain, "synth params: edge_length must be > 0");
    require(sample_period > 0.0, ErrorKind::Domain, "synth params: sample_period must be > 0");
    require(peak_base > ambient, ErrorKind::Domain, "synth params: peak_base must exceed ambient");
}

void RawTrace::validate() const {
    require(times.size() == temps.size(), ErrorKind::Shape, "trace: times and temps differ in length");
    require(sample_period > 0.0, ErrorKind::Domain, "trace: sample_period must be > 0");
    for (std::size_t i = 0; i < temps.size(); ++i) {
        require(std::isfinite(temps[i]), ErrorKind::Domain, "trace: non-finite temperature");
        if (i > 0) {
            require(times[i] > times[i - 1], ErrorKind::Domain, "trace: times must be strictly increasing");
        }
    }
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(root) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

double cooling_time(double tau, double t_end, double ambient, double target) {
    require(tau > 0.0, ErrorKind::Domain, "cooling_time: tau_c must be > 0");
    if (!(target > ambient)) {
        std::ostringstream os;
        os << "cooling_time: interpass target " << target << " °C must exceed ambient " << ambient << " °C";
        fail(ErrorKind::Domain, os.str());
    }
    if (t_end <= target) {
        return 0.0;
    }
    return tau * std::log((t_end - ambient) / (target - ambient));
}

double solve_dwell(const SynthParams& params, const ProcessSettings& settings, int layer) {
    params.validate();
    settings.validate();
    require(layer >= 1 && layer <= settings.num_layers, ErrorKind::Domain, "solve_dwell: layer out of range");
    if (!(settings.interpass_target > params.ambient) || !(settings.interpass_target < peak(params, settings))) {
        std::ostringstream os;
        os << "solve_dwell: interpass target " << settings.interpass_target
           << " °C must lie strictly between ambient " << params.ambient << " °C and the peak "
           << peak(params, settings) << " °C";
        fail(ErrorKind::Domain, os.str());
    }
    return cooling_time(tau_c(params, settings, layer, settings.layer_length),
                        end_of_print(params, settings, layer), params.ambient, settings.interpass_target);
}

ThinWallOracle::ThinWallOracle(const ProcessSettings& settings, const SynthParams& params)
    : settings_(settings), params_(params) {
    settings_.validate();
    params_.validate();
    std::vector<double> dwell(static_cast<std::size_t>(settings_.num_layers));
    const double dt = params_.sample_period;
    for (int i = 1; i <= settings_.num_layers; ++i) {
        const double analytic = solve_dwell(params_, settings_, i);
        // Whole cycle (print + dwell) lands on the output grid so curve
        // boundaries coincide with trace samples.
        const double cycles = std::ceil((settings_.layer_print_time + analytic) / dt - 1e-9);
        dwell[static_cast<std::size_t>(i - 1)] = std::max(0.0, cycles * dt - settings_.layer_print_time);
    }
    schedule_ = DwellSchedule(std::move(dwell));
}

double ThinWallOracle::cooling_tau(int layer, double axial_distance) const {
    return tau_c(params_, settings_, layer, axial_distance);
}

double ThinWallOracle::first_amplitude(double axial_distance) const {
    return amplitude_1(params_, settings_, axial_distance);
}

double ThinWallOracle::end_of_print_temperature(int layer) const {
    return end_of_print(params_, settings_, layer);
}

double ThinWallOracle::analytic_dwell(int layer) const { return solve_dwell(params_, settings_, layer); }

std::vector<ThinWallOracle::Cycle> ThinWallOracle::cycles(int layer, double d) const {
    const double tc = cooling_tau(layer, d);
    const double a1 = first_amplitude(d);
    std::vector<Cycle> out;
    out.reserve(kCurvesPerProfile);
    double amplitude = a1;
    double reheat = params_.reheat_gain * a1;
    for (int k = 1; k <= kCurvesPerProfile; ++k) {
        const double duration = curve_duration(schedule_, settings_, layer, k);
        out.push_back(Cycle{amplitude, reheat, duration});
        // next curve starts at this curve's re-heat peak
        amplitude = amplitude * std::exp(-duration / tc) + reheat;
        reheat *= params_.reheat_decay;
    }
    return out;
}

double ThinWallOracle::temperature(int layer, double d, int curve_index, double tau) const {
    require(layer >= 1 && layer <= last_profile_layer(), ErrorKind::Domain,
            "oracle: layer has no complete five-curve history");
    require(curve_index >= 1 && curve_index <= kCurvesPerProfile, ErrorKind::Domain,
            "oracle: curve index outside [1, 5]");
    const auto cyc = cycles(layer, d);
    const Cycle& c = cyc[static_cast<std::size_t>(curve_index - 1)];
    const double tc = cooling_tau(layer, d);
    return params_.ambient + c.amplitude * std::exp(-tau / tc) +
           c.reheat * std::exp((tau - c.duration) / params_.reheat_tau);
}

Curve ThinWallOracle::curve(int layer, double d, int curve_index, int n) const {
    require(n >= 2, ErrorKind::Shape, "oracle: N must be >= 2");
    require(layer >= 1 && layer <= last_profile_layer(), ErrorKind::Domain,
            "oracle: layer has no complete five-curve history");
    const auto cyc = cycles(layer, d);
    const Cycle& c = cyc[static_cast<std::size_t>(curve_index - 1)];
    const double tc = cooling_tau(layer, d);
    std::vector<double> temps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double tau = c.duration * i / (n - 1);
        temps[static_cast<std::size_t>(i)] = params_.ambient + c.amplitude * std::exp(-tau / tc) +
                                             c.reheat * std::exp((tau - c.duration) / params_.reheat_tau);
    }
    return Curve(std::move(temps), c.duration, curve_index);
}

Profile ThinWallOracle::profile(const PointId& point, int n) const {
    std::vector<Curve> curves;
    curves.reserve(kCurvesPerProfile);
    for (int k = 1; k <= kCurvesPerProfile; ++k) {
        curves.push_back(curve(point.layer, point.axial_distance, k, n));
    }
    return Profile(point, std::move(curves));
}

RawTrace ThinWallOracle::trace(int layer, double d, double sample_period) const {
    require(sample_period > 0.0, ErrorKind::Domain, "oracle: sample_period must be > 0");
    require(layer >= 1 && layer <= last_profile_layer(), ErrorKind::Domain,
            "oracle: layer has no complete five-curve history");
    const auto cyc = cycles(layer, d);
    const double tc = cooling_tau(layer, d);
    const double t0 = deposition_time(schedule_, settings_, layer, d);

    std::vector<double> bounds{0.0};
    for (const auto& c : cyc) {
        bounds.push_back(bounds.back() + c.duration);
    }
    const auto samples = static_cast<std::size_t>(std::floor(bounds.back() / sample_period + 1e-9)) + 1;

    RawTrace out;
    out.point = PointId::at(layer, d, settings_.travel_speed);
    out.sample_period = sample_period;
    out.times.resize(samples);
    out.temps.resize(samples);
    std::size_t k = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double local = static_cast<double>(s) * sample_period;
        // a sample on a boundary belongs to the later curve, except the final one
        while (k + 1 < cyc.size() && local >= bounds[k + 1] - 1e-9) {
            ++k;
        }
        const Cycle& c = cyc[k];
        const double tau = std::min(local - bounds[k], c.duration);
        out.times[s] = t0 + local;
        out.temps[s] = params_.ambient + c.amplitude * std::exp(-tau / tc) +
                       c.reheat * std::exp((tau - c.duration) / params_.reheat_tau);
    }
    if (params_.noise_sd > 0.0) {
        std::mt19937_64 rng(derive_seed(params_.seed, static_cast<std::uint64_t>(layer),
                                        static_cast<std::uint64_t>(std::llround(d * 1000.0)) + 1));
        std::normal_distribution<double> noise(0.0, params_.noise_sd);
        for (double& t : out.temps) {
            t += noise(rng);
        }
    }
    return out;
}

std::vector<double> point_positions(const ProcessSettings& settings, int points_per_layer) {
    require(points_per_layer >= 2, ErrorKind::Domain, "generate_wall: points_per_layer must be >= 2");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points_per_layer));
    const double spacing = settings.layer_length / (points_per_layer + 1);
    for (int j = 1; j <= points_per_layer; ++j) {
        out.push_back(spacing * j);
    }
    return out;
}

namespace {

WallDataset generate(const ProcessSettings& settings, const SynthParams& params, int points_per_layer,
                     const ExperimentStyle* style, int n, const std::string& wall_id) {
    settings.validate();
    params.validate();
    require(settings.num_layers >= kCurvesPerProfile + 1, ErrorKind::Domain,
            "generate_wall: num_layers must be >= 6 so at least one layer has five curves");
    require(n >= 2, ErrorKind::Shape, "generate_wall: N must be >= 2");
    const auto positions = point_positions(settings, points_per_layer);
    const double spacing = settings.layer_length / (points_per_layer + 1);
    if (spacing / settings.travel_speed < params.sample_period) {
        std::ostringstream os;
        os << "generate_wall: " << points_per_layer << " points on " << settings.layer_length
           << " mm are closer than one sample period of travel";
        fail(ErrorKind::Domain, os.str());
    }

    const ThinWallOracle oracle(settings, params);
    const int layers = oracle.last_profile_layer();
    const auto m = static_cast<std::size_t>(points_per_layer);
    std::vector<std::optional<Profile>> slots(static_cast<std::size_t>(layers) * m);

    parallel_for(slots.size(), [&](std::size_t slot) {
        const int layer = static_cast<int>(slot / m) + 1;
        const int index = static_cast<int>(slot % m) + 1;
        const double nominal = positions[slot % m];
        std::mt19937_64 rng(derive_seed(params.seed, static_cast<std::uint64_t>(layer),
                                        static_cast<std::uint64_t>(index)));
        double actual = nominal;
        if (style != nullptr && style->jitter_mm > 0.0) {
            std::uniform_real_distribution<double> jitter(-style->jitter_mm, style->jitter_mm);
            actual = std::clamp(nominal + jitter(rng), 0.0, settings.layer_length);
        }
        const PointId id = PointId::at(layer, nominal, settings.travel_speed, index);
        std::vector<Curve> curves;
        curves.reserve(kCurvesPerProfile);
        for (int k = 1; k <= kCurvesPerProfile; ++k) {
            Curve c = oracle.curve(layer, actual, k, n);
            if (style != nullptr) {
                const double sd = style->noise_sd + params.noise_sd;
                c = Curve(add_noise_and_clamp(c.view(), style->clamp_low, style->clamp_high, sd, rng),
                          c.duration(), k);
            } else if (params.noise_sd > 0.0) {
                std::vector<double> temps = c.temps();
                std::normal_distribution<double> noise(0.0, params.noise_sd);
                for (double& t : temps) {
                    t += noise(rng);
                }
                c = Curve(std::move(temps), c.duration(), k);
            }
            curves.push_back(std::move(c));
        }
        slots[slot].emplace(id, std::move(curves));
    });

    WallDataset wall(wall_id, settings, oracle.schedule(), n);
    record_params(wall, params);
    wall.provenance()["style"] = style != nullptr ? "experiment" : "simulation";
    wall.provenance()["points_per_layer"] = std::to_string(points_per_layer);
    if (style != nullptr) {
        wall.provenance()["clamp_low"] = fmt(style->clamp_low);
        wall.provenance()["clamp_high"] = fmt(style->clamp_high);
        wall.provenance()["pyrometer_noise_sd"] = fmt(style->noise_sd);
        wall.provenance()["jitter_mm"] = fmt(style->jitter_mm);
    }
    for (auto& slot : slots) {
        wall.add(std::move(*slot));
    }
    return wall;
}

}  // namespace

WallDataset generate_wall(const ProcessSettings& settings, const SynthParams& params, int points_per_layer,
                          int n, const std::string& wall_id) {
    return generate(settings, params, points_per_layer, nullptr, n, wall_id);
}

WallDataset generate_experiment_wall(const ProcessSettings& settings, const SynthParams& params,
                                     int points_per_layer, const ExperimentStyle& style, int n,
                                     const std::string& wall_id) {
    require(style.clamp_low < style.clamp_high, ErrorKind::Domain, "experiment style: clamp_low >= clamp_high");
    require(style.jitter_mm >= 0.0 && style.noise_sd >= 0.0, ErrorKind::Domain,
            "experiment style: jitter and noise must be >= 0");
    return generate(settings, params, points_per_layer, &style, n, wall_id);
}

RawTrace emulate_pyrometer(const RawTrace& trace, double clamp_low, double clamp_high, double noise_sd,
                           std::uint64_t seed) {
    require(clamp_low < clamp_high, ErrorKind::Domain, "emulate_pyrometer: clamp_low must be < clamp_high");
    require(noise_sd >= 0.0, ErrorKind::Domain, "emulate_pyrometer: noise_sd must be >= 0");
    std::mt19937_64 rng(seed);
    RawTrace out = trace;
    out.temps = add_noise_and_clamp(trace.temps, clamp_low, clamp_high, noise_sd, rng);
    return out;
}

Profile emulate_pyrometer(const Profile& profile, double clamp_low, double clamp_high, double noise_sd,
                          std::uint64_t seed) {
    require(clamp_low < clamp_high, ErrorKind::Domain, "emulate_pyrometer: clamp_low must be < clamp_high");
    require(noise_sd >= 0.0, ErrorKind::Domain, "emulate_pyrometer: noise_sd must be >= 0");
    std::mt19937_64 rng(seed);
    std::vector<Curve> curves;
    for (const auto& c : profile.curves()) {
        curves.emplace_back(add_noise_and_clamp(c.view(), clamp_low, clamp_high, noise_sd, rng), c.duration(),
                            c.index());
    }
    return Profile(profile.point(), std::move(curves));
}

}  // namespace thermoseer
