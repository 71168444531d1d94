#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uvt/geometry.hpp"

namespace uvt {

/// Regular grid of cell centers origin + cell_size * (ix, iy); cell index
/// i = iy * cols + ix.
struct GridSpec {
    Eigen::Index cols = 33;
    Eigen::Index rows = 33;
    double cell_size = 1.0 / 16.0;
    Eigen::Vector2d origin{-1.0, -1.0};
    DistanceAxis distance_bins;

    Eigen::Index cells() const noexcept { return cols * rows; }
    Eigen::Vector2d center(Eigen::Index i) const noexcept {
        return origin + cell_size * Eigen::Vector2d(static_cast<double>(i % cols), static_cast<double>(i / cols));
    }
    double diameter() const noexcept {
        return cell_size * std::hypot(static_cast<double>(cols - 1), static_cast<double>(rows - 1));
    }
    void validate() const;

    /// side x side cells with centers spanning [-half_width, half_width]^2.
    static GridSpec square(Eigen::Index side, double half_width, const DistanceAxis& bins);
};

/// Grid default: 33 x 33 over [-1, 1]^2, distance bins one cell wide out to R.
GridSpec default_grid(double radius_bound, Eigen::Index side = 33, double half_width = 1.0);

/// Relaxed or binary cell-occupancy vector z.
using Indicator = Eigen::VectorXd;

/// Distance-bin operators A_d held as offset classes: A_d(i, j) = 1 iff the
/// center offset of cells i, j falls in bin d. Also the radial selector R.
class DistanceOperators {
public:
    explicit DistanceOperators(GridSpec grid);

    const GridSpec& grid() const noexcept { return grid_; }
    Eigen::Index bins() const noexcept { return grid_.distance_bins.count; }
    Eigen::Index cells() const noexcept { return grid_.cells(); }

    /// Bin of the offset (dx, dy) in cells.
    int offset_bin(Eigen::Index dx, Eigen::Index dy) const noexcept {
        return offset_bin_[static_cast<std::size_t>((dy + grid_.rows - 1) * span_x_ + (dx + grid_.cols - 1))];
    }
    int pair_bin(Eigen::Index i, Eigen::Index j) const noexcept {
        return offset_bin(j % grid_.cols - i % grid_.cols, j / grid_.cols - i / grid_.cols);
    }
    int radial_bin(Eigen::Index i) const noexcept { return radial_bin_[static_cast<std::size_t>(i)]; }
    /// Offset classes (dx, dy) belonging to bin d.
    const std::vector<std::pair<int, int>>& offsets_in_bin(Eigen::Index d) const {
        return bin_offsets_[static_cast<std::size_t>(d)];
    }

    Eigen::VectorXd apply(Eigen::Index d, const Eigen::VectorXd& z) const;
    Eigen::MatrixXd dense(Eigen::Index d) const;
    Eigen::MatrixXd radial_matrix() const;

private:
    GridSpec grid_;
    Eigen::Index span_x_;
    std::vector<int> offset_bin_;
    std::vector<std::vector<std::pair<int, int>>> bin_offsets_;
    std::vector<int> radial_bin_;
};

DistanceOperators build_operators(const GridSpec& grid);

/// Q(d) = z^T A_d z / m^2 for every bin.
Eigen::VectorXd q_of_d(const Indicator& z, const DistanceOperators& ops);

struct ObjectiveValue {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

/// Cross entropy -sum_d p(d) log(Q(d) + eps) and its gradient
/// -sum_d p(d) (2 A_d z / m^2) / (Q(d) + eps).
ObjectiveValue objective_and_gradient(const Indicator& z, const DistanceOperators& ops,
                                      const Eigen::VectorXd& pair_target, double epsilon);

/// Euclidean projection onto {z : sum z = K, 0 <= z_i <= 1}. Throws
/// std::domain_error when K exceeds the length of v.
Indicator project_constraints(const Eigen::VectorXd& v, double k);

/// Linear mass-conserving resampling of a distribution onto another axis.
Eigen::VectorXd rebin(const DistanceDistribution& source, const DistanceAxis& target);

/// One observed line with its angle, for the diagnostic P z = s penalty.
struct ProjectionConstraint {
    double angle = 0.0;
    Eigen::Index half_bins = 0;
    double radius_bound = 0.0;
    Eigen::VectorXd line;
};

struct RecoveryOptions {
    Eigen::Index restarts = 10;
    Eigen::Index max_iters = 2000;
    double epsilon = 1e-12;
    double lambda_radial = 1.0;
    double lambda_projection = 0.0;
    /// Gaussian width (in distance bins) applied to Q before the cross
    /// entropy; absorbs the distance error of snapping points to cells.
    double pair_blur = 0.0;
    std::optional<ProjectionConstraint> projection;
    std::uint64_t seed = 0;
    /// Stop once the relative objective decrease stays below this.
    double tolerance = 1e-10;
};

struct RestartSummary {
    double objective = 0.0;          // penalized objective at the binarized z
    double relaxed_objective = 0.0;  // at the final relaxed iterate
    Eigen::Index iterations = 0;
    bool converged = false;
};

struct RecoveryResult {
    Indicator z;        // binary, exactly K ones
    Indicator relaxed;  // final relaxed iterate of the winning restart
    Eigen::Matrix2Xd locations;
    std::vector<double> objective_trace;
    std::vector<RestartSummary> restarts;
    Eigen::Index best_restart = 0;
    bool converged = false;
    /// Largest box/sum violation seen over all iterates of all restarts.
    double max_feasibility_violation = 0.0;
    /// Largest objective increase between consecutive iterates.
    double max_objective_increase = 0.0;
};

/// Penalized objective: cross entropy on pair bins plus
/// lambda_R ||R z / K - r||^2 and lambda_P ||P z - s||^2.
class RecoveryObjective {
public:
    RecoveryObjective(const DistanceOperators& ops, Eigen::VectorXd pair_target, Eigen::VectorXd radial_target,
                      double k, const RecoveryOptions& options);

    ObjectiveValue operator()(const Indicator& z) const;
    double value(const Indicator& z) const;

private:
    const DistanceOperators& ops_;
    Eigen::VectorXd pair_target_;
    Eigen::VectorXd radial_target_;
    double k_;
    double epsilon_;
    double lambda_radial_;
    double lambda_projection_;
    std::vector<double> kernel_;
    std::vector<int> projection_bin_;
    Eigen::VectorXd projection_target_;
};

/// Top-K binarization (ties broken by lowest index).
Indicator binarize(const Indicator& z, Eigen::Index k);

/// Projected gradient descent with backtracking from random feasible starts.
RecoveryResult recover(const DistanceDistribution& p_c, const DistanceDistribution& p_mu, const GridSpec& grid,
                       Eigen::Index k, const RecoveryOptions& options = {});
RecoveryResult recover(const DistanceDistribution& p_c, const DistanceDistribution& p_mu,
                       const DistanceOperators& ops, Eigen::Index k, const RecoveryOptions& options = {});

/// Pairwise-distance histogram of recovered locations on `axis`.
DistanceDistribution location_pair_distribution(const Eigen::Matrix2Xd& locations, const DistanceAxis& axis);
DistanceDistribution location_radial_distribution(const Eigen::Matrix2Xd& locations, const DistanceAxis& axis);

std::string recovery_report_json(const RecoveryResult& result, double emd_pairwise, double emd_radial);

}  // namespace uvt
