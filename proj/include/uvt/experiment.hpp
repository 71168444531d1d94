#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uvt/dde.hpp"
#include "uvt/pbde.hpp"
#include "uvt/udgp.hpp"

namespace uvt {

/// Invalid configuration value; `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message);
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Failure of a numerical stage (unnormalizable distribution, singular fit, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TableKind { pbde, recovery };

/// Every knob of the trial pipelines. JSON keys match the member names.
struct ExperimentConfig {
    std::vector<Eigen::Index> k_values{5, 10};
    std::vector<Eigen::Index> m_values{100, 500, 1000, 1500};
    /// Empty selects the table's default SNR list.
    std::vector<double> snr_values;
    Eigen::Index trials = 100;
    Eigen::Index lines = 10000;
    std::uint64_t seed = 1;
    double half_width = 1.0;
    bool recenter = false;
    /// Overrides the simulator's recorded noise variance in the debiasing.
    std::optional<double> sigma2;
    unsigned jobs = 1;

    // PBDE
    Eigen::Index nu_min = 10;
    Eigen::Index nu_max = 0;  // 0: min(M, 120)
    double pbde_threshold = 0.05;  // fraction of R
    int denoise_iterations = 20;
    bool resolve_multiplicity = true;

    // DDE
    double cutoff = 200.0;
    Eigen::Index quad_points = 0;  // 0: 4 * cutoff
    Eigen::Index axis_points = 256;

    // Recovery
    Eigen::Index grid = 33;
    Eigen::Index restarts = 10;
    Eigen::Index max_iters = 2000;
    double lambda_radial = 1.0;
    double pair_blur = 0.5;
    double emd_threshold = 0.1;
};

/// Reads keys present in `text` on top of `base`; unknown keys and bad
/// values raise ConfigError. "inf" (string) is accepted for SNR entries.
ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& base = {});
std::string config_to_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config, TableKind kind);

std::vector<double> default_snrs(TableKind kind);
double parse_snr(const std::string& text);
std::string format_snr(double snr);

struct CellKey {
    Eigen::Index k = 5;
    Eigen::Index m = 100;
    double snr = std::numeric_limits<double>::infinity();
};

std::string cell_name(TableKind kind, const CellKey& key);

/// Depends only on (base seed, K, M, SNR, trial).
std::uint64_t trial_seed(std::uint64_t base, const CellKey& key, Eigen::Index trial);

HankelConfig hankel_config(const ExperimentConfig& config, double radius_bound);
PbdeOptions pbde_options(const ExperimentConfig& config, Eigen::Index half_bins);
RecoveryOptions recovery_options(const ExperimentConfig& config, std::uint64_t seed);
/// Simulated model for one trial (recentered when configured).
PointSourceModel trial_model(const ExperimentConfig& config, Eigen::Index k, std::uint64_t seed);
ProjectionSet trial_projections(const ExperimentConfig& config, const PointSourceModel& model, const CellKey& key,
                                std::uint64_t seed);

struct PbdeTrial {
    Eigen::Index trial = 0;
    std::uint64_t seed = 0;
    double radius_bound = 0.0;
    /// Largest matched |r_hat - r|; +inf when the count is wrong.
    double max_error = 0.0;
    Eigen::Index recovered = 0;
    bool success = false;
};

struct RecoveryTrial {
    Eigen::Index trial = 0;
    std::uint64_t seed = 0;
    /// Recovered-location pair histogram vs the true one (the success metric).
    double emd_pairwise = 0.0;
    double emd_radial = 0.0;
    /// Estimated p_C vs the true pair histogram.
    double emd_distribution = 0.0;
    bool converged = false;
    bool success = false;
};

PbdeTrial run_pbde_trial(const ExperimentConfig& config, const CellKey& key, Eigen::Index trial);
RecoveryTrial run_recovery_trial(const ExperimentConfig& config, const CellKey& key, Eigen::Index trial);

/// PBDE thresholds reported next to the configured one (fractions of R).
inline const std::vector<double>& threshold_sweep() {
    static const std::vector<double> values{0.03, 0.04, 0.05, 0.06, 0.07};
    return values;
}

struct CellSummary {
    TableKind kind = TableKind::pbde;
    CellKey key;
    Eigen::Index trials = 0;
    Eigen::Index successes = 0;
    /// PBDE only: success rate at each threshold_sweep() entry.
    std::vector<double> sweep_rates;
    bool resumed = false;

    double rate() const { return trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

/// Called after each finished cell.
using ProgressFn = std::function<void(const CellSummary&)>;

/// Runs `fn(i)` for i in [0, n) on `jobs` threads. Exceptions are rethrown
/// on the caller's thread (the first by index).
void parallel_for(Eigen::Index n, unsigned jobs, const std::function<void(Eigen::Index)>& fn);

/// Trials of one cell, in trial order whatever `config.jobs` is.
std::vector<PbdeTrial> run_pbde_cell(const ExperimentConfig& config, const CellKey& key);
std::vector<RecoveryTrial> run_recovery_cell(const ExperimentConfig& config, const CellKey& key);

CellSummary summarize(const ExperimentConfig& config, const CellKey& key, const std::vector<PbdeTrial>& trials);
CellSummary summarize(const ExperimentConfig& config, const CellKey& key, const std::vector<RecoveryTrial>& trials);

/// Runs every (K, M, SNR) cell into `run_dir`:
///   config.json, cells/<cell>.csv (one row per trial, "# complete" footer),
///   summary.csv.
/// Cells whose file is already complete are read back instead of rerun. A
/// run directory holding a different config is rejected.
std::vector<CellSummary> run_table(TableKind kind, const ExperimentConfig& config,
                                   const std::filesystem::path& run_dir, const ProgressFn& progress = {});

std::vector<CellSummary> run_pbde_table(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                        const ProgressFn& progress = {});
std::vector<CellSummary> run_recovery_table(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                            const ProgressFn& progress = {});

struct SingleRun {
    std::filesystem::path model;
    std::filesystem::path projections;
    std::filesystem::path features;
    std::filesystem::path distributions;
    std::filesystem::path recovery;
    double emd_distribution = 0.0;
    double emd_pairwise = 0.0;
    double emd_radial = 0.0;
};

/// One full pipeline run with every intermediate written to `out_dir`:
/// model.json, projections.bin, features.csv, distributions.csv, recovery.json.
SingleRun run_single(const ExperimentConfig& config, const CellKey& key, std::uint64_t seed,
                     const std::filesystem::path& out_dir);

}  // namespace uvt
