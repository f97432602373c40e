#include "thermoseer/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "thermoseer/errors.hpp"
#include "thermoseer/synthgen.hpp"

namespace thermoseer {

namespace {

constexpr int kFeatureCount = 4;

struct Pass {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] input, acts[l + 1] hidden ReLU outputs
    Eigen::MatrixXd mask;               // inverted-dropout mask, empty when disabled
    Eigen::MatrixXd out;                // scaled residual prediction, N x B
};

struct Grads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

std::size_t hidden_count(const MappingModel& model) { return model.weights.size() - 1; }

void check_model(const MappingModel& model) {
    require(model.n >= 2 && model.weights.size() == 6 && model.biases.size() == 6, ErrorKind::Shape,
            "mapping: model is not initialized");
}

void check_features(const MappingFeatures& f) {
    for (double v : f.to_array()) {
        require(std::isfinite(v), ErrorKind::Domain, "mapping: non-finite feature");
    }
}

void fill_column(const MappingModel& model, const Curve& curve, const MappingFeatures& features,
                 Eigen::Ref<Eigen::VectorXd> column) {
    const auto n = static_cast<Eigen::Index>(model.n);
    if (curve.size() != static_cast<std::size_t>(model.n)) {
        std::ostringstream os;
        os << "mapping: curve has " << curve.size() << " samples, model expects N=" << model.n;
        fail(ErrorKind::Shape, os.str());
    }
    check_features(features);
    const double inv_scale = 1.0 / model.scaler.temp_scale;
    for (Eigen::Index i = 0; i < n; ++i) {
        column(i) = curve.temps()[static_cast<std::size_t>(i)] * inv_scale;
    }
    const auto f = features.to_array();
    for (int j = 0; j < kFeatureCount; ++j) {
        column(n + j) = (f[static_cast<std::size_t>(j)] - model.scaler.feature_mean[static_cast<std::size_t>(j)]) /
                        model.scaler.feature_std[static_cast<std::size_t>(j)];
    }
}

// Model outputs are unconstrained; report unphysical ones as numerical failures.
Curve output_curve(std::vector<double> temps, const Curve& input) {
    for (std::size_t i = 0; i < temps.size(); ++i) {
        if (!std::isfinite(temps[i]) || !(temps[i] > kAbsoluteZero)) {
            std::ostringstream os;
            os << "forward: predicted curve " << input.index() << " sample " << i << " is " << temps[i]
               << " °C, outside the physical range";
            fail(ErrorKind::Numerical, os.str());
        }
    }
    return Curve(std::move(temps), input.duration(), input.index());
}

void run_forward(const MappingModel& model, Pass& pass, std::mt19937_64* dropout_rng) {
    const std::size_t hidden = hidden_count(model);
    pass.acts.resize(hidden + 1);
    for (std::size_t l = 0; l < hidden; ++l) {
        pass.acts[l + 1].noalias() = model.weights[l] * pass.acts[l];
        pass.acts[l + 1].colwise() += model.biases[l];
        pass.acts[l + 1] = pass.acts[l + 1].cwiseMax(0.0);
    }
    const Eigen::MatrixXd& last = pass.acts[hidden];
    if (dropout_rng != nullptr && model.dropout_rate > 0.0) {
        const double keep = 1.0 - model.dropout_rate;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        pass.mask.resize(last.rows(), last.cols());
        for (Eigen::Index c = 0; c < last.cols(); ++c) {
            for (Eigen::Index r = 0; r < last.rows(); ++r) {
                pass.mask(r, c) = u(*dropout_rng) < keep ? 1.0 / keep : 0.0;
            }
        }
        pass.out.noalias() = model.weights[hidden] * last.cwiseProduct(pass.mask);
    } else {
        pass.mask.resize(0, 0);
        pass.out.noalias() = model.weights[hidden] * last;
    }
    pass.out.colwise() += model.biases[hidden];
}

// Returns the MSE and fills gradients of it with respect to every parameter.
double run_backward(const MappingModel& model, const Pass& pass, const Eigen::MatrixXd& target, Grads& grads) {
    const std::size_t hidden = hidden_count(model);
    const double count = static_cast<double>(pass.out.size());
    const Eigen::MatrixXd diff = pass.out - target;
    const double loss = diff.squaredNorm() / count;

    grads.w.resize(hidden + 1);
    grads.b.resize(hidden + 1);
    Eigen::MatrixXd delta = (2.0 / count) * diff;
    if (pass.mask.size() > 0) {
        grads.w[hidden].noalias() = delta * pass.acts[hidden].cwiseProduct(pass.mask).transpose();
    } else {
        grads.w[hidden].noalias() = delta * pass.acts[hidden].transpose();
    }
    grads.b[hidden] = delta.rowwise().sum();
    Eigen::MatrixXd upstream;
    upstream.noalias() = model.weights[hidden].transpose() * delta;
    if (pass.mask.size() > 0) {
        upstream.array() *= pass.mask.array();
    }
    for (std::size_t l = hidden; l-- > 0;) {
        delta = (pass.acts[l + 1].array() > 0.0).select(upstream, 0.0);
        grads.w[l].noalias() = delta * pass.acts[l].transpose();
        grads.b[l] = delta.rowwise().sum();
        if (l > 0) {
            upstream.noalias() = model.weights[l].transpose() * delta;
        }
    }
    return loss;
}

void check_samples(const MappingModel& model, std::span<const CurvePairSample> samples) {
    require(!samples.empty(), ErrorKind::Domain, "train: no samples");
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (samples[s].input.size() != static_cast<std::size_t>(model.n) ||
            samples[s].target.size() != static_cast<std::size_t>(model.n)) {
            std::ostringstream os;
            os << "train: sample " << s << " has N=" << samples[s].input.size() << "/" << samples[s].target.size()
               << ", model N=" << model.n;
            fail(ErrorKind::Shape, os.str());
        }
    }
}

void assemble(const MappingModel& model, std::span<const CurvePairSample> samples, Eigen::MatrixXd& inputs,
              Eigen::MatrixXd& targets) {
    const auto n = static_cast<Eigen::Index>(model.n);
    const auto count = static_cast<Eigen::Index>(samples.size());
    inputs.resize(n + kFeatureCount, count);
    targets.resize(n, count);
    const double inv_scale = 1.0 / model.scaler.temp_scale;
    for (Eigen::Index s = 0; s < count; ++s) {
        const auto& sample = samples[static_cast<std::size_t>(s)];
        fill_column(model, sample.input, sample.features, inputs.col(s));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            targets(i, s) = (sample.target.temps()[u] - sample.input.temps()[u]) * inv_scale;
        }
    }
}

FlatGradient flatten(const Grads& grads) {
    FlatGradient out;
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
        const auto& w = grads.w[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                out.push_back(w(r, c));
            }
        }
        for (Eigen::Index i = 0; i < grads.b[l].size(); ++i) {
            out.push_back(grads.b[l](i));
        }
    }
    return out;
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;

    explicit AdamState(const MappingModel& model) {
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            mw.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
            vw.push_back(mw.back());
            mb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
            vb.push_back(mb.back());
        }
    }
};

template <typename Param, typename Grad>
void adam_update(Param& theta, Param& m, Param& v, const Grad& g, const TrainConfig& cfg, double step_size,
                 double bias2_sqrt) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    theta.array() -= step_size * m.array() / (v.array().sqrt() / bias2_sqrt + cfg.epsilon);
}

void adam_step(MappingModel& model, AdamState& state, const Grads& grads, const TrainConfig& cfg, double lr) {
    ++state.step;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    const double step_size = lr / bias1;
    const double bias2_sqrt = std::sqrt(bias2);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        adam_update(model.weights[l], state.mw[l], state.vw[l], grads.w[l], cfg, step_size, bias2_sqrt);
        adam_update(model.biases[l], state.mb[l], state.vb[l], grads.b[l], cfg, step_size, bias2_sqrt);
    }
}

}  // namespace

void TrainConfig::validate() const {
    require(epochs >= 0, ErrorKind::Config, "train config: epochs must be >= 0");
    require(batch_size >= 1, ErrorKind::Config, "train config: batch_size must be >= 1");
    require(initial_lr > 0.0, ErrorKind::Config, "train config: initial_lr must be > 0");
    require(lr_decay_ratio > 0.0, ErrorKind::Config, "train config: lr_decay_ratio must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::Config,
            "train config: Adam betas must lie in [0, 1)");
    require(epsilon > 0.0, ErrorKind::Config, "train config: epsilon must be > 0");
}

double TrainConfig::lr_at(int epoch) const {
    double lr = initial_lr;
    for (int decay : lr_decay_epochs) {
        if (decay <= epoch) {
            lr *= lr_decay_ratio;
        }
    }
    return lr;
}

std::vector<int> MappingModel::layer_widths() const {
    return {3 * n, 6 * n, 12 * n, 6 * n, 3 * n, n};
}

double& MappingModel::parameter(std::size_t flat) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto wsize = static_cast<std::size_t>(weights[l].size());
        if (flat < wsize) {
            const auto cols = static_cast<std::size_t>(weights[l].cols());
            return weights[l](static_cast<Eigen::Index>(flat / cols), static_cast<Eigen::Index>(flat % cols));
        }
        flat -= wsize;
        const auto bsize = static_cast<std::size_t>(biases[l].size());
        if (flat < bsize) {
            return biases[l](static_cast<Eigen::Index>(flat));
        }
        flat -= bsize;
    }
    fail(ErrorKind::Domain, "mapping: parameter index out of range");
}

double MappingModel::parameter(std::size_t flat) const {
    return const_cast<MappingModel&>(*this).parameter(flat);
}

MappingModel init_model(int n, std::uint64_t seed) {
    require(n >= 2, ErrorKind::Domain, "init_model: N must be >= 2");
    MappingModel model;
    model.n = n;
    model.seed = seed;
    std::mt19937_64 rng(seed);
    int fan_in = n + kFeatureCount;
    for (int width : model.layer_widths()) {
        const double bound = std::sqrt(1.0 / fan_in);
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(width, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = u(rng);
            }
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(Eigen::VectorXd::Zero(width));
        fan_in = width;
    }
    return model;
}

std::size_t param_count(const MappingModel& model) {
    std::size_t count = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        count += static_cast<std::size_t>(model.weights[l].size() + model.biases[l].size());
    }
    return count;
}

Curve forward(const MappingModel& model, const Curve& input_curve, const MappingFeatures& features,
              bool train_mode, std::mt19937_64* rng) {
    check_model(model);
    require(!train_mode || rng != nullptr, ErrorKind::Domain, "forward: train mode needs an RNG");
    Pass pass;
    pass.acts.resize(1);
    pass.acts[0].resize(model.n + kFeatureCount, 1);
    fill_column(model, input_curve, features, pass.acts[0].col(0));
    run_forward(model, pass, train_mode ? rng : nullptr);
    std::vector<double> temps(input_curve.temps());
    for (std::size_t i = 0; i < temps.size(); ++i) {
        temps[i] += model.scaler.temp_scale * pass.out(static_cast<Eigen::Index>(i), 0);
    }
    return output_curve(std::move(temps), input_curve);
}

std::vector<Curve> forward_batch(const MappingModel& model, std::span<const Curve> inputs,
                                 std::span<const MappingFeatures> features) {
    check_model(model);
    require(inputs.size() == features.size(), ErrorKind::Shape, "forward_batch: inputs and features differ in count");
    std::vector<Curve> out;
    if (inputs.empty()) {
        return out;
    }
    Pass pass;
    pass.acts.resize(1);
    pass.acts[0].resize(model.n + kFeatureCount, static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        fill_column(model, inputs[s], features[s], pass.acts[0].col(static_cast<Eigen::Index>(s)));
    }
    run_forward(model, pass, nullptr);
    out.reserve(inputs.size());
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        std::vector<double> temps(inputs[s].temps());
        for (std::size_t i = 0; i < temps.size(); ++i) {
            temps[i] += model.scaler.temp_scale *
                        pass.out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
        }
        out.push_back(output_curve(std::move(temps), inputs[s]));
    }
    return out;
}

FeatureScaler fit_scaler(std::span<const CurvePairSample> samples, double temp_scale) {
    require(!samples.empty(), ErrorKind::Domain, "fit_scaler: no samples");
    FeatureScaler scaler;
    scaler.temp_scale = temp_scale;
    const double count = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        const auto f = s.features.to_array();
        for (std::size_t j = 0; j < f.size(); ++j) {
            scaler.feature_mean[j] += f[j];
        }
    }
    for (double& m : scaler.feature_mean) {
        m /= count;
    }
    std::array<double, 4> var{};
    for (const auto& s : samples) {
        const auto f = s.features.to_array();
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double d = f[j] - scaler.feature_mean[j];
            var[j] += d * d / count;
        }
    }
    for (std::size_t j = 0; j < var.size(); ++j) {
        const double sd = std::sqrt(var[j]);
        scaler.feature_std[j] = sd > 1e-12 ? sd : 1.0;
    }
    scaler.fitted = true;
    return scaler;
}

double batch_loss(const MappingModel& model, std::span<const CurvePairSample> samples) {
    check_model(model);
    check_samples(model, samples);
    Pass pass;
    pass.acts.resize(1);
    Eigen::MatrixXd targets;
    assemble(model, samples, pass.acts[0], targets);
    run_forward(model, pass, nullptr);
    return (pass.out - targets).squaredNorm() / static_cast<double>(targets.size());
}

FlatGradient loss_gradient(const MappingModel& model, std::span<const CurvePairSample> samples) {
    check_model(model);
    check_samples(model, samples);
    Pass pass;
    pass.acts.resize(1);
    Eigen::MatrixXd targets;
    assemble(model, samples, pass.acts[0], targets);
    run_forward(model, pass, nullptr);
    Grads grads;
    run_backward(model, pass, targets, grads);
    return flatten(grads);
}

TrainResult train(MappingModel model, std::span<const CurvePairSample> samples, const TrainConfig& config) {
    config.validate();
    check_model(model);
    check_samples(model, samples);
    TrainResult result;
    if (config.epochs == 0) {
        result.model = std::move(model);
        return result;
    }
    if (!model.scaler.fitted) {
        model.scaler = fit_scaler(samples, model.scaler.temp_scale);
    }

    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
    assemble(model, samples, inputs, targets);

    const auto total = static_cast<Eigen::Index>(samples.size());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 shuffle_rng(config.seed);
    std::mt19937_64 dropout_rng(derive_seed(config.seed, 0xd5));
    AdamState adam(model);
    Pass pass;
    Grads grads;
    Eigen::MatrixXd batch_targets;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.lr_at(epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < total; start += config.batch_size) {
            const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, total - start);
            const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + size);
            pass.acts.resize(1);
            pass.acts[0] = inputs(Eigen::all, idx);
            batch_targets = targets(Eigen::all, idx);
            run_forward(model, pass, &dropout_rng);
            const double loss = run_backward(model, pass, batch_targets, grads);
            adam_step(model, adam, grads, config, lr);
            epoch_loss += loss * static_cast<double>(size);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(total));
        result.lr_history.push_back(lr);
    }
    model.meta.epochs_run += config.epochs;
    model.meta.final_loss = result.loss_history.back();
    result.model = std::move(model);
    return result;
}

TrainResult finetune(const MappingModel& pretrained, std::span<const CurvePairSample> samples,
                     const TrainConfig& config) {
    return train(pretrained, samples, config);
}

Curve recursive_predict(const MappingModel& model, const Curve& start_curve,
                        std::span<const MappingFeatures> feature_sequence) {
    require(!feature_sequence.empty(), ErrorKind::Domain, "recursive_predict: empty feature sequence");
    Curve current = start_curve;
    for (const auto& features : feature_sequence) {
        current = forward(model, current, features);
    }
    return current;
}

}  // namespace thermoseer
