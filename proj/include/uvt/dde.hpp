#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Core>

#include "uvt/features.hpp"
#include "uvt/geometry.hpp"
#include "uvt/projector.hpp"
#include "uvt/specfun.hpp"

namespace uvt {

/// Truncated Hankel inversion settings. `cutoff` is in frequency-index
/// units (the nu of the line DFT) and fixed, i.e. the same physical
/// frequency for every detector resolution M. Nodes beyond M see aliased
/// transforms; from about 2M on they pick up the mirrored low-frequency
/// peak and the distributions break down.
struct HankelConfig {
    double cutoff = 200.0;
    Eigen::Index quad_points = 800;
    Eigen::Index axis_points = 256;
    double axis_max = 0.0;  // 0 means R
    /// Square u*f(u) instead of f(u). The orthogonality relation carries a
    /// factor u, so f alone weights a peak at distance a by 1/a^2.
    bool radial_weight = true;

    void validate(double radius_bound) const;
};

/// Quadrature size that resolves the Bessel oscillations up to `cutoff`
/// (doubling it changes the distributions by < 1e-6 in total variation).
Eigen::Index default_quad_points(double cutoff);

/// f(a_j) = sum_i w_i t_i feature(t_i) J0(a_j t_i).
Eigen::VectorXd hankel_transform(const Eigen::VectorXd& feature_at_nodes, const QuadratureRuled& rule,
                                 const Eigen::VectorXd& axis);

struct DistributionEstimate {
    DistanceDistribution p_mu;
    /// Absent for single-point models (no pairs).
    std::optional<DistanceDistribution> p_c;
    Eigen::VectorXd f_mu;
    Eigen::VectorXd f_c;
    InvariantFeatures features_at_nodes;
};

/// p(u_j) = |g(u_j)|^2 / sum_j |g(u_j)|^2 for the radial (mu) and pairwise
/// (C) features, g = u*f (or f with radial_weight off). Throws
/// std::domain_error when a transform vanishes.
DistributionEstimate estimate_distributions(const ProjectionSet& data, Eigen::Index k, const HankelConfig& config,
                                            std::optional<double> sigma2_override = std::nullopt);

/// Same pipeline on features already evaluated at the rule's nodes.
DistributionEstimate distributions_from_features(const InvariantFeatures& at_nodes, const QuadratureRuled& rule,
                                                 const DistanceAxis& axis, double radius_bound,
                                                 bool radial_weight = true);

/// CSV: u, p_mu, p_c[, true_radial, true_pairwise].
void write_distributions_csv(const DistributionEstimate& estimate, const PointSourceModel* truth,
                             const std::filesystem::path& path);

}  // namespace uvt
