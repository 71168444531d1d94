#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "uvt/features.hpp"

namespace uvt {

/// Result of annihilating-filter spectral estimation.
struct PronyEstimate {
    /// Recovered distances (or raw frequencies when no scale was given), ascending.
    Eigen::VectorXd distances;
    /// Recovered angular frequencies a in (0, pi), ascending.
    Eigen::VectorXd frequencies;
    std::vector<std::complex<double>> filter_roots;
    /// Smallest singular value of the annihilation system.
    double residual = 0.0;
    /// Second-smallest singular value is also ~0: the filter is not unique.
    bool rank_deficient = false;
    /// Roots rejected as DC/Nyquist leakage (near-real, unit modulus).
    Eigen::Index degenerate_roots = 0;
    /// Requested pairs minus recovered pairs.
    Eigen::Index missing = 0;
    /// Least-squares amplitudes of each recovered frequency (ascending order).
    Eigen::VectorXd amplitudes;
    /// Points (or pairs) attributed to each recovered frequency; empty when
    /// multiplicity resolution is off.
    Eigen::VectorXi multiplicities;
    Eigen::Index nu_min = 0;
    Eigen::Index nu_max = 0;
};

struct PronyOptions {
    /// Roots kept when | |root| - 1 | is below this.
    double modulus_tolerance = 0.2;
    /// Roots with |arg| (or pi - |arg|) below this are treated as real.
    double real_angle_tolerance = 0.0;
    /// Multiplies each frequency to produce `distances`.
    double distance_per_radian = 1.0;
    /// Cadzow iterations (rank-2K Hankel projection) applied before the fit.
    int denoise_iterations = 0;
};

/// Alternating projection onto rank-`rank` Hankel sequences.
Eigen::VectorXd cadzow_denoise(const Eigen::VectorXd& signal, Eigen::Index rank, int iterations);

/// Fits a length 2*order+1 annihilating filter to a real sequence by total
/// least squares and returns the arguments of its conjugate root pairs.
PronyEstimate prony_frequencies(const Eigen::VectorXd& signal, Eigen::Index order, const PronyOptions& options = {});

struct PbdeOptions {
    Eigen::Index nu_min = 10;
    /// 0 selects the default min(M, 120) when M is known, else the largest
    /// integer frequency available.
    Eigen::Index nu_max = 0;
    double modulus_tolerance = 0.2;
    int denoise_iterations = 20;
    /// Apportion the K (or K(K-1)/2) unit-weight sources among recovered
    /// frequencies by their fitted amplitude relative to sqrt(2 / (pi a)).
    bool resolve_multiplicity = true;
};

/// Least-squares amplitudes |c_j| of s[i] ~ sum_j Re(c_j exp(i a_j (nu_0 + i))).
Eigen::VectorXd fit_amplitudes(const Eigen::VectorXd& signal, const Eigen::VectorXd& frequencies, double nu_0);

/// Largest-remainder apportionment of `total` units proportional to `weights`.
Eigen::VectorXi apportion(const Eigen::VectorXd& weights, Eigen::Index total);

inline Eigen::Index default_pbde_nu_max(Eigen::Index half_bins) { return std::min<Eigen::Index>(half_bins, 120); }

/// Radial distances from sqrt(nu) * Re mu_hat[nu] over integer nu in [nu_min, nu_max].
PronyEstimate estimate_radial_distances(const InvariantFeatures& features, Eigen::Index k, double radius_bound,
                                        const PbdeOptions& options = {});

/// Pairwise distances from sqrt(nu) * C_hat[nu] with K(K-1)/2 exponential pairs.
PronyEstimate estimate_pairwise_distances(const InvariantFeatures& features, Eigen::Index k, double radius_bound,
                                          const PbdeOptions& options = {});

}  // namespace uvt
