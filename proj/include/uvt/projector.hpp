#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "uvt/geometry.hpp"

namespace uvt {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// L binned projection lines s_l[u], u = -M..M stored at column u + M.
struct ProjectionSet {
    RowMatrixXd lines;
    Eigen::Index half_bins = 0;
    double radius_bound = 0.0;
    double noise_variance = 0.0;
    /// Diagnostics only; empty when loaded from disk. Estimators never read it.
    Eigen::VectorXd angles;
    /// Points that fell outside +-(M + 1/2) bins and were clamped.
    Eigen::Index clamped_points = 0;

    Eigen::Index line_count() const noexcept { return lines.rows(); }
    Eigen::Index bin_count() const noexcept { return 2 * half_bins + 1; }
    double bin_width() const noexcept { return 2.0 * radius_bound / static_cast<double>(bin_count()); }
};

inline double bin_width(double radius_bound, Eigen::Index half_bins) {
    return 2.0 * radius_bound / static_cast<double>(2 * half_bins + 1);
}

/// Noiseless binned projection at angle theta. Point k contributes its
/// weight to bin u with (y cos theta - x sin theta)/delta in [u - 1/2, u + 1/2).
/// `clamped`, when given, is incremented per point clamped to an edge bin.
Eigen::VectorXd project_line(const PointSourceModel& model, double theta, Eigen::Index half_bins,
                             Eigen::Index* clamped = nullptr);

struct SimulationConfig {
    Eigen::Index lines = 10000;
    Eigen::Index half_bins = 100;
    /// Ratio of mean clean bin power to noise variance; +inf is noiseless.
    double snr = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    /// Noise substream seed; defaults to `seed`. Varying it alone gives noise
    /// replicates over identical angles.
    std::optional<std::uint64_t> noise_seed;
};

/// Projects at i.i.d. uniform angles on [0, 2 pi) and adds white Gaussian
/// noise. Line l draws from substreams of (seed, l), so output does not
/// depend on evaluation order.
ProjectionSet simulate(const PointSourceModel& model, const SimulationConfig& config);

void write_projection_binary(const ProjectionSet& data, const std::filesystem::path& path);
ProjectionSet read_projection_binary(const std::filesystem::path& path);
void write_projection_csv(const ProjectionSet& data, const std::filesystem::path& path);

}  // namespace uvt
