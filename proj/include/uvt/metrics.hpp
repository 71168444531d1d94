#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "uvt/geometry.hpp"

namespace uvt {

/// Wasserstein-1 distance between two distributions on the same axis:
/// sum_j |CDF_p(j) - CDF_q(j)| * width.
double emd_1d(const DistanceDistribution& p, const DistanceDistribution& q);

/// Fraction of entries with emd <= threshold.
double success_rate(std::span<const double> emds, double threshold);

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method). Entry i of the result is the column assigned to row i.
std::vector<Eigen::Index> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Largest |estimate - truth| under the min-sum assignment of |.| costs.
/// Requires equal sizes; returns +inf when sizes differ.
double max_matched_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

}  // namespace uvt
