#include "uvt/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "uvt/rng.hpp"

namespace uvt {

PointSourceModel::PointSourceModel(Eigen::Matrix2Xd points, Eigen::VectorXd weights, double radius_bound)
    : points_(std::move(points)), weights_(std::move(weights)), radius_bound_(radius_bound) {
    if (points_.cols() < 1) throw std::invalid_argument("PointSourceModel: need at least one point");
    if (weights_.size() != points_.cols())
        throw std::invalid_argument("PointSourceModel: weights/points size mismatch");
    if (!points_.allFinite()) throw std::invalid_argument("PointSourceModel: non-finite coordinate");
    if (!(weights_.array() > 0.0).all()) throw std::invalid_argument("PointSourceModel: weights must be positive");
    if (!(radius_bound_ > 0.0) || !std::isfinite(radius_bound_))
        throw std::invalid_argument("PointSourceModel: radius bound must be positive");
}

PointSourceModel::PointSourceModel(Eigen::Matrix2Xd points, double radius_bound)
    : PointSourceModel(points, Eigen::VectorXd::Ones(points.cols()), radius_bound) {}

bool PointSourceModel::within_radius_bound() const {
    return radial_distances(*this).maxCoeff() < radius_bound_ &&
           pairwise_distances(*this).maxCoeff() < radius_bound_;
}

Eigen::VectorXd DistanceAxis::centers() const {
    return Eigen::VectorXd::LinSpaced(count, start, start + width * static_cast<double>(count - 1));
}

Eigen::Index DistanceAxis::bin_of(double value) const noexcept {
    const double pos = std::floor((value - start) / width + 0.5);
    if (!(pos >= 0.0) || pos >= static_cast<double>(count)) return -1;
    return static_cast<Eigen::Index>(pos);
}

DistanceAxis DistanceAxis::from_zero(double max_value, Eigen::Index count) {
    if (count < 2 || !(max_value > 0.0)) throw std::invalid_argument("DistanceAxis: need count >= 2 and max > 0");
    return {0.0, max_value / static_cast<double>(count - 1), count};
}

DistanceDistribution DistanceDistribution::normalized(const DistanceAxis& axis, Eigen::VectorXd weights) {
    if (weights.size() != axis.count) throw std::invalid_argument("DistanceDistribution: size mismatch");
    if ((weights.array() < 0.0).any()) throw std::domain_error("DistanceDistribution: negative mass");
    const double total = weights.sum();
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::domain_error("DistanceDistribution: cannot normalize zero or non-finite mass");
    weights /= total;
    return {axis, std::move(weights)};
}

PointSourceModel generate_model(Eigen::Index count, std::uint64_t seed, double domain_half_width) {
    if (count < 1) throw std::invalid_argument("generate_model: K must be >= 1");
    if (!(domain_half_width > 0.0)) throw std::invalid_argument("generate_model: domain half width must be > 0");
    Rng rng(seed);
    Eigen::Matrix2Xd points(2, count);
    for (Eigen::Index k = 0; k < count; ++k) {
        points(0, k) = rng.uniform(-domain_half_width, domain_half_width);
        points(1, k) = rng.uniform(-domain_half_width, domain_half_width);
    }
    return {std::move(points), default_radius_bound(domain_half_width)};
}

Eigen::VectorXd radial_distances(const PointSourceModel& model) {
    return model.points().colwise().norm().transpose();
}

Eigen::MatrixXd pairwise_distances(const PointSourceModel& model) {
    const auto& p = model.points();
    const Eigen::Index k = p.cols();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index m = 0; m < k; ++m)
        for (Eigen::Index n = m + 1; n < k; ++n) d(m, n) = d(n, m) = (p.col(n) - p.col(m)).norm();
    return d;
}

Eigen::VectorXd unique_pairwise_distances(const PointSourceModel& model) {
    const Eigen::MatrixXd d = pairwise_distances(model);
    const Eigen::Index k = d.rows();
    Eigen::VectorXd out(k * (k - 1) / 2);
    Eigen::Index idx = 0;
    for (Eigen::Index m = 0; m < k; ++m)
        for (Eigen::Index n = m + 1; n < k; ++n) out(idx++) = d(m, n);
    return out;
}

DistanceDistribution true_distance_distribution(std::span<const double> values, const DistanceAxis& axis) {
    if (values.empty()) throw std::invalid_argument("true_distance_distribution: no values");
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(axis.count);
    for (const double v : values) {
        const Eigen::Index j = axis.bin_of(v);
        if (j < 0) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "true_distance_distribution: value " << v << " outside axis";
            throw std::out_of_range(msg.str());
        }
        counts(j) += 1.0;
    }
    return DistanceDistribution::normalized(axis, std::move(counts));
}

DistanceDistribution true_distance_distribution(const Eigen::VectorXd& values, const DistanceAxis& axis) {
    return true_distance_distribution(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())),
                                      axis);
}

PointSourceModel rotated(const PointSourceModel& model, double angle) {
    const Eigen::Matrix2d rot = Eigen::Rotation2Dd(angle).toRotationMatrix();
    return {rot * model.points(), model.weights(), model.radius_bound()};
}

PointSourceModel translated(const PointSourceModel& model, const Eigen::Vector2d& offset) {
    return {model.points().colwise() + offset, model.weights(), model.radius_bound()};
}

PointSourceModel recentered(const PointSourceModel& model) {
    const Eigen::Vector2d centroid = model.points() * model.weights() / model.weights().sum();
    return translated(model, -centroid);
}

std::string model_to_json(const PointSourceModel& model) {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (Eigen::Index k = 0; k < model.size(); ++k)
        j["points"].push_back({model.points()(0, k), model.points()(1, k)});
    j["weights"] = std::vector<double>(model.weights().begin(), model.weights().end());
    j["radius_bound"] = model.radius_bound();
    return j.dump(2);
}

PointSourceModel model_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const auto& pts = j.at("points");
    Eigen::Matrix2Xd points(2, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        points(0, static_cast<Eigen::Index>(k)) = pts[k].at(0).get<double>();
        points(1, static_cast<Eigen::Index>(k)) = pts[k].at(1).get<double>();
    }
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(points.cols());
    if (j.contains("weights")) {
        const auto w = j["weights"].get<std::vector<double>>();
        weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    }
    return {std::move(points), std::move(weights), j.at("radius_bound").get<double>()};
}

}  // namespace uvt
