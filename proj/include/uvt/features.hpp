#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "uvt/geometry.hpp"
#include "uvt/projector.hpp"

namespace uvt {

/// Rotation-invariant features over a frequency axis: mean transform mu[nu]
/// and debiased second-order feature C[nu].
struct InvariantFeatures {
    Eigen::VectorXd freq_axis;
    Eigen::VectorXcd mu;
    Eigen::VectorXd c2;
    Eigen::Index k_assumed = 0;
    double noise_variance_used = 0.0;
    Eigen::Index line_count = 0;
    /// Frequencies with |nu| > M (aliased); reported, not rejected.
    Eigen::Index aliased_frequencies = 0;
};

/// sum_u line[u] exp(+i 2 pi nu u / (2M+1)), u = -M..M; nu may be fractional.
std::complex<double> line_dft(std::span<const double> line, double nu);

/// Everything the invariant features need from a projection set: the mean
/// line and the mean aperiodic autocorrelation over lags 0..2M. Both are
/// exact, so features can then be evaluated at any frequency without
/// revisiting the lines.
struct LineMoments {
    Eigen::Index half_bins = 0;
    Eigen::Index line_count = 0;
    Eigen::VectorXd mean_line;
    Eigen::VectorXd autocorrelation;

    /// mean_l s_l[nu].
    std::complex<double> mean_transform(double nu) const;
    /// mean_l |s_l[nu]|^2.
    double mean_power(double nu) const;
};

/// Sparse lines are correlated pair by pair, dense ones through a padded FFT.
LineMoments line_moments(const ProjectionSet& data);

/// mu_hat = mean of line transforms; C_hat = (mean |s|^2 - (2M+1) sigma^2 - K)/2.
/// sigma^2 comes from `data.noise_variance` unless overridden.
InvariantFeatures estimate_features(const ProjectionSet& data, Eigen::Index k, const Eigen::VectorXd& freq_axis,
                                    std::optional<double> sigma2_override = std::nullopt);
InvariantFeatures estimate_features(const LineMoments& moments, double noise_variance, Eigen::Index k,
                                    const Eigen::VectorXd& freq_axis);

/// Exact Bessel sums: mu = sum_k a_k J0(pi r_k nu / R),
/// C = sum_{m<n} a_m a_n J0(pi d_mn nu / R).
InvariantFeatures analytic_features(const PointSourceModel& model, const Eigen::VectorXd& freq_axis);

/// Integer axis lo, lo+1, ..., hi.
Eigen::VectorXd integer_axis(Eigen::Index lo, Eigen::Index hi);

/// CSV: nu, re_mu, im_mu, c2[, analytic_mu, analytic_c].
void write_features_csv(const InvariantFeatures& estimated, const InvariantFeatures* analytic,
                        const std::filesystem::path& path);

}  // namespace uvt
