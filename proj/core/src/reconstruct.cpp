#include "thermoseer/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "thermoseer/errors.hpp"

namespace thermoseer {

namespace {

constexpr double kDurationTolerance = 1e-6;  // s
constexpr double kSigmaFloor = 1e-8;

}  // namespace

ProfileMatrix build_profile_matrix(std::span<const Profile> profiles) {
    const auto m = static_cast<Eigen::Index>(profiles.size());
    require(m >= 2, ErrorKind::Shape, "build_profile_matrix: needs at least 2 profiles");
    const auto n = static_cast<int>(profiles.front().samples());
    const int layer = profiles.front().point().layer;
    for (const auto& p : profiles) {
        if (static_cast<int>(p.samples()) != n || p.point().layer != layer) {
            std::ostringstream os;
            os << "build_profile_matrix: profile at layer " << p.point().layer << " with N=" << p.samples()
               << " does not match layer " << layer << " with N=" << n;
            fail(ErrorKind::Shape, os.str());
        }
        const auto d = p.durations();
        const auto d0 = profiles.front().durations();
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (std::abs(d[k] - d0[k]) > kDurationTolerance) {
                fail(ErrorKind::Shape, "build_profile_matrix: curve durations differ between points");
            }
        }
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(kCurvesPerProfile) * n;
    require(rows > m, ErrorKind::Shape, "build_profile_matrix: needs 5N > M");

    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return profiles[a].point().relative_delay < profiles[b].point().relative_delay;
    });

    ProfileMatrix out;
    out.n = n;
    out.layer = layer;
    out.durations = profiles.front().durations();
    out.s.resize(rows, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& p = profiles[order[static_cast<std::size_t>(j)]];
        for (int k = 0; k < kCurvesPerProfile; ++k) {
            const auto& temps = p.curves()[static_cast<std::size_t>(k)].temps();
            for (int i = 0; i < n; ++i) {
                out.s(k * n + i, j) = temps[static_cast<std::size_t>(i)];
            }
        }
        out.delays.push_back(p.point().relative_delay);
        out.points.push_back(p.point());
    }
    return out;
}

std::vector<Curve> unstack(const Eigen::Ref<const Eigen::VectorXd>& column, int n,
                           const std::array<double, kCurvesPerProfile>& durations) {
    require(column.size() == static_cast<Eigen::Index>(kCurvesPerProfile) * n, ErrorKind::Shape,
            "unstack: column length is not 5N");
    std::vector<Curve> curves;
    curves.reserve(kCurvesPerProfile);
    for (int k = 0; k < kCurvesPerProfile; ++k) {
        std::vector<double> temps(column.data() + static_cast<std::ptrdiff_t>(k) * n,
                                  column.data() + static_cast<std::ptrdiff_t>(k + 1) * n);
        curves.emplace_back(std::move(temps), durations[static_cast<std::size_t>(k)], k + 1);
    }
    return curves;
}

int select_rank(const Eigen::VectorXd& singular_values, double energy_threshold) {
    require(energy_threshold > 0.0 && energy_threshold <= 1.0, ErrorKind::Domain,
            "pod: energy threshold must lie in (0, 1]");
    const double total = singular_values.squaredNorm();
    if (!(total > 0.0)) {
        return 1;
    }
    double prefix = 0.0;
    for (Eigen::Index m = 0; m < singular_values.size(); ++m) {
        prefix += singular_values(m) * singular_values(m);
        if (prefix / total >= energy_threshold) {
            return static_cast<int>(m + 1);
        }
    }
    return static_cast<int>(singular_values.size());
}

PodResult pod_decompose(const Eigen::MatrixXd& s, double energy_threshold) {
    require(s.cols() >= 1 && s.rows() >= s.cols(), ErrorKind::Shape, "pod: expected a tall snapshot matrix");
    require(s.allFinite(), ErrorKind::Domain, "pod: snapshot matrix has non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        std::ostringstream os;
        os << "pod: SVD did not converge on a " << s.rows() << "x" << s.cols() << " matrix (Frobenius norm "
           << s.norm() << ")";
        fail(ErrorKind::Numerical, os.str());
    }
    PodResult out;
    out.singular_values = svd.singularValues();
    out.m_star = select_rank(out.singular_values, energy_threshold);
    const double total = out.singular_values.squaredNorm();
    double prefix = 0.0;
    for (Eigen::Index m = 0; m < out.singular_values.size(); ++m) {
        prefix += out.singular_values(m) * out.singular_values(m);
        out.energy.push_back(total > 0.0 ? prefix / total : 1.0);
    }
    out.basis = svd.matrixU().leftCols(out.m_star);
    out.coefficients = svd.matrixV().leftCols(out.m_star) * out.singular_values.head(out.m_star).asDiagonal();
    return out;
}

Eigen::MatrixXd ElmModel::hidden_matrix(std::span<const double> delays) const {
    Eigen::MatrixXd h(static_cast<Eigen::Index>(delays.size()), hidden_weights.size());
    for (std::size_t r = 0; r < delays.size(); ++r) {
        const double x = (delays[r] - input_mean) / input_std;
        h.row(static_cast<Eigen::Index>(r)) = (hidden_weights * x + hidden_biases).cwiseMax(0.0).transpose();
    }
    return h;
}

ElmModel elm_train(std::span<const double> delays, const Eigen::MatrixXd& coefficients, int n_hidden,
                   std::uint64_t seed) {
    const auto m = static_cast<Eigen::Index>(delays.size());
    require(m >= 2, ErrorKind::Shape, "elm_train: needs at least 2 samples");
    require(coefficients.rows() == m, ErrorKind::Shape, "elm_train: coefficient rows must match delay count");
    require(coefficients.cols() >= 1, ErrorKind::Shape, "elm_train: needs at least one output");
    require(n_hidden >= 1, ErrorKind::Domain, "elm_train: n_hidden must be >= 1");
    require(coefficients.allFinite(), ErrorKind::Domain, "elm_train: non-finite coefficients");
    for (double d : delays) {
        require(std::isfinite(d), ErrorKind::Domain, "elm_train: non-finite delay");
    }

    ElmModel elm;
    elm.seed = seed;
    const double mean = std::accumulate(delays.begin(), delays.end(), 0.0) / static_cast<double>(m);
    double var = 0.0;
    for (double d : delays) {
        var += (d - mean) * (d - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(m));
    elm.input_mean = mean;
    elm.input_std = sd > 1e-12 ? sd : 1.0;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    elm.hidden_weights.resize(n_hidden);
    elm.hidden_biases.resize(n_hidden);
    for (int i = 0; i < n_hidden; ++i) {
        elm.hidden_weights(i) = u(rng);
        elm.hidden_biases(i) = u(rng);
    }

    // Targets are standardized per column so the minimum-norm fit interpolates
    // the variation between points rather than their large common level.
    elm.output_mean = coefficients.colwise().mean().transpose();
    elm.output_scale.resize(coefficients.cols());
    for (Eigen::Index c = 0; c < coefficients.cols(); ++c) {
        const double spread = std::sqrt((coefficients.col(c).array() - elm.output_mean(c)).square().mean());
        elm.output_scale(c) = spread > 1e-12 ? spread : 1.0;
    }
    const Eigen::MatrixXd targets =
        (coefficients.rowwise() - elm.output_mean.transpose()) * elm.output_scale.cwiseInverse().asDiagonal();

    const Eigen::MatrixXd h = elm.hidden_matrix(delays);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sigma = svd.singularValues();
    Eigen::VectorXd inv(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        inv(i) = sigma(i) / std::max(sigma(i) * sigma(i), kSigmaFloor);
    }
    elm.output_weights = svd.matrixV() * inv.asDiagonal() * (svd.matrixU().transpose() * targets);
    return elm;
}

Eigen::VectorXd elm_predict(const ElmModel& elm, double delay) {
    const double x = (delay - elm.input_mean) / elm.input_std;
    const Eigen::VectorXd h = (elm.hidden_weights * x + elm.hidden_biases).cwiseMax(0.0);
    Eigen::VectorXd out = elm.output_weights.transpose() * h;
    if (elm.output_scale.size() == out.size()) {
        out.array() *= elm.output_scale.array();
    }
    if (elm.output_mean.size() == out.size()) {
        out += elm.output_mean;
    }
    return out;
}

LayerReconstruction build_layer_reconstruction(std::span<const Profile> profiles, double travel_speed,
                                               double energy_threshold, int n_hidden, std::uint64_t seed) {
    require(travel_speed > 0.0, ErrorKind::Domain, "build_layer_reconstruction: travel_speed must be > 0");
    const ProfileMatrix matrix = build_profile_matrix(profiles);
    PodResult pod = pod_decompose(matrix.s, energy_threshold);
    LayerReconstruction recon;
    recon.layer = matrix.layer;
    recon.n = matrix.n;
    recon.travel_speed = travel_speed;
    recon.durations = matrix.durations;
    recon.elm = elm_train(matrix.delays, pod.coefficients, n_hidden, seed);
    recon.basis = std::move(pod.basis);
    recon.coefficients = std::move(pod.coefficients);
    recon.m_star = pod.m_star;
    recon.singular_values = std::move(pod.singular_values);
    return recon;
}

Profile reconstruct_profile(const LayerReconstruction& recon, double delay) {
    require(std::isfinite(delay), ErrorKind::Domain, "reconstruct_profile: non-finite delay");
    const Eigen::VectorXd column = recon.basis * elm_predict(recon.elm, delay);
    PointId point;
    point.layer = recon.layer;
    point.relative_delay = delay;
    point.axial_distance = delay * recon.travel_speed;
    return Profile(point, unstack(column, recon.n, recon.durations));
}

}  // namespace thermoseer
