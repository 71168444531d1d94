#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace uvt {

/// K weighted planar Dirac locations. Columns of `points` are (x_k, y_k).
class PointSourceModel {
public:
    PointSourceModel(Eigen::Matrix2Xd points, Eigen::VectorXd weights, double radius_bound);
    PointSourceModel(Eigen::Matrix2Xd points, double radius_bound);

    Eigen::Index size() const noexcept { return points_.cols(); }
    const Eigen::Matrix2Xd& points() const noexcept { return points_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double radius_bound() const noexcept { return radius_bound_; }

    /// True when every radial and pairwise distance is strictly below R.
    bool within_radius_bound() const;

    friend bool operator==(const PointSourceModel&, const PointSourceModel&) = default;

private:
    Eigen::Matrix2Xd points_;
    Eigen::VectorXd weights_;
    double radius_bound_;
};

/// Equally spaced distance bin centers start, start + width, ...
struct DistanceAxis {
    double start = 0.0;
    double width = 1.0;
    Eigen::Index count = 0;

    double center(Eigen::Index j) const noexcept { return start + width * static_cast<double>(j); }
    Eigen::VectorXd centers() const;
    /// Nearest bin with half-open cells [c - w/2, c + w/2); -1 when outside.
    Eigen::Index bin_of(double value) const noexcept;

    /// `count` centers from 0 to `max_value` inclusive.
    static DistanceAxis from_zero(double max_value, Eigen::Index count);

    friend bool operator==(const DistanceAxis&, const DistanceAxis&) = default;
};

/// Probability mass over a DistanceAxis.
struct DistanceDistribution {
    DistanceAxis axis;
    Eigen::VectorXd mass;

    /// Normalizes nonnegative `weights` to unit sum. Throws std::domain_error
    /// when the total is zero or not finite.
    static DistanceDistribution normalized(const DistanceAxis& axis, Eigen::VectorXd weights);
};

/// Default radius bound: the diameter of the sampling square.
inline double default_radius_bound(double domain_half_width) {
    return 2.0 * std::sqrt(2.0) * domain_half_width;
}

PointSourceModel generate_model(Eigen::Index count, std::uint64_t seed, double domain_half_width = 1.0);

Eigen::VectorXd radial_distances(const PointSourceModel& model);
Eigen::MatrixXd pairwise_distances(const PointSourceModel& model);
/// Upper-triangle entries d_{m,n}, m < n, row-major order.
Eigen::VectorXd unique_pairwise_distances(const PointSourceModel& model);

/// Nearest-bin histogram of `values`, normalized to unit mass. Throws
/// std::out_of_range naming the first value outside the axis and
/// std::invalid_argument when `values` is empty.
DistanceDistribution true_distance_distribution(std::span<const double> values, const DistanceAxis& axis);
DistanceDistribution true_distance_distribution(const Eigen::VectorXd& values, const DistanceAxis& axis);

PointSourceModel rotated(const PointSourceModel& model, double angle);
PointSourceModel translated(const PointSourceModel& model, const Eigen::Vector2d& offset);
/// Subtracts the weighted centroid.
PointSourceModel recentered(const PointSourceModel& model);

std::string model_to_json(const PointSourceModel& model);
PointSourceModel model_from_json(const std::string& text);

}  // namespace uvt
