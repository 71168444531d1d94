#include "uvt/dde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

namespace uvt {

void HankelConfig::validate(double radius_bound) const {
    if (!(cutoff > 0.0)) throw std::invalid_argument("HankelConfig: cutoff must be positive");
    if (quad_points < 8) throw std::invalid_argument("HankelConfig: need at least 8 quadrature points");
    if (axis_points < 16) throw std::invalid_argument("HankelConfig: need at least 16 axis points");
    if (axis_max < 0.0 || axis_max > radius_bound) throw std::invalid_argument("HankelConfig: axis_max must be <= R");
}

Eigen::Index default_quad_points(double cutoff) {
    return std::max<Eigen::Index>(128, static_cast<Eigen::Index>(std::ceil(4.0 * cutoff)));
}

Eigen::VectorXd hankel_transform(const Eigen::VectorXd& feature_at_nodes, const QuadratureRuled& rule,
                                 const Eigen::VectorXd& axis) {
    if (feature_at_nodes.size() != rule.size())
        throw std::invalid_argument("hankel_transform: feature/node count mismatch");
    const Eigen::VectorXd weighted = rule.weights.cwiseProduct(rule.nodes).cwiseProduct(feature_at_nodes);
    Eigen::VectorXd out(axis.size());
    for (Eigen::Index j = 0; j < axis.size(); ++j) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < rule.size(); ++i) acc += weighted(i) * bessel_j0(axis(j) * rule.nodes(i));
        out(j) = acc;
    }
    return out;
}

DistributionEstimate distributions_from_features(const InvariantFeatures& at_nodes, const QuadratureRuled& rule,
                                                 const DistanceAxis& axis, double radius_bound,
                                                 bool radial_weight) {
    // Features oscillate as J0(pi d nu / R): map distances to that argument scale.
    const Eigen::VectorXd args = axis.centers() * (std::numbers::pi / radius_bound);
    DistributionEstimate out;
    // mu is real in expectation; its imaginary part carries only sampling noise.
    out.f_mu = hankel_transform(at_nodes.mu.real(), rule, args);
    out.f_c = hankel_transform(at_nodes.c2, rule, args);
    const Eigen::VectorXd weight = radial_weight ? args : Eigen::VectorXd::Ones(args.size());
    out.p_mu = DistanceDistribution::normalized(axis, out.f_mu.cwiseProduct(weight).cwiseAbs2());
    if (at_nodes.k_assumed > 1)
        out.p_c = DistanceDistribution::normalized(axis, out.f_c.cwiseProduct(weight).cwiseAbs2());
    out.features_at_nodes = at_nodes;
    return out;
}

DistributionEstimate estimate_distributions(const ProjectionSet& data, Eigen::Index k, const HankelConfig& config,
                                            std::optional<double> sigma2_override) {
    config.validate(data.radius_bound);
    const double axis_max = config.axis_max > 0.0 ? config.axis_max : data.radius_bound;
    const auto rule = gauss_legendre<double>(config.quad_points, config.cutoff);
    const auto at_nodes = estimate_features(data, k, rule.nodes, sigma2_override);
    return distributions_from_features(at_nodes, rule, DistanceAxis::from_zero(axis_max, config.axis_points),
                                       data.radius_bound, config.radial_weight);
}

void write_distributions_csv(const DistributionEstimate& estimate, const PointSourceModel* truth,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto& axis = estimate.p_mu.axis;
    std::optional<DistanceDistribution> radial, pairwise;
    if (truth) {
        radial = true_distance_distribution(radial_distances(*truth), axis);
        if (truth->size() > 1) pairwise = true_distance_distribution(unique_pairwise_distances(*truth), axis);
    }
    out << std::setprecision(17) << "u,p_mu,p_c";
    if (truth) out << ",true_radial,true_pairwise";
    out << '\n';
    for (Eigen::Index j = 0; j < axis.count; ++j) {
        out << axis.center(j) << ',' << estimate.p_mu.mass(j) << ',' << (estimate.p_c ? estimate.p_c->mass(j) : 0.0);
        if (truth) out << ',' << radial->mass(j) << ',' << (pairwise ? pairwise->mass(j) : 0.0);
        out << '\n';
    }
}

}  // namespace uvt
