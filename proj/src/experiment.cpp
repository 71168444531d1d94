#include "uvt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "uvt/metrics.hpp"
#include "uvt/rng.hpp"

namespace uvt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCompleteMarker = "# complete";

// Tags separating the per-trial random streams.
constexpr std::uint64_t kModelTag = 1;
constexpr std::uint64_t kProjectionTag = 2;
constexpr std::uint64_t kRecoveryTag = 3;

double snr_from_json(const json& value, const std::string& field) {
    if (value.is_string()) {
        try {
            return parse_snr(value.get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(field, e.what());
        }
    }
    if (!value.is_number()) throw ConfigError(field, "expected a number or \"inf\"");
    return value.get<double>();
}

json snr_to_json(double snr) { return std::isinf(snr) ? json("inf") : json(snr); }

template <typename T>
T read_value(const json& value, const std::string& field) {
    try {
        return value.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(field, e.what());
    }
}

void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Data rows of a finished cell file, or nothing when the file is absent or
// was cut short.
std::optional<std::vector<std::vector<std::string>>> read_complete_cell(const fs::path& path, Eigen::Index trials) {
    if (!fs::exists(path)) return std::nullopt;
    std::ifstream in(path);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool header = true, complete = false;
    while (std::getline(in, line)) {
        if (line.rfind(kCompleteMarker, 0) == 0) {
            complete = true;
            break;
        }
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    if (!complete || static_cast<Eigen::Index>(rows.size()) != trials) return std::nullopt;
    return rows;
}

std::string pbde_cell_csv(const std::vector<PbdeTrial>& trials) {
    std::ostringstream out;
    out << std::setprecision(17) << "trial,seed,radius_bound,max_error,recovered,success\n";
    for (const auto& t : trials)
        out << t.trial << ',' << t.seed << ',' << t.radius_bound << ',' << t.max_error << ',' << t.recovered << ','
            << (t.success ? 1 : 0) << '\n';
    out << kCompleteMarker << " trials=" << trials.size() << '\n';
    return out.str();
}

std::string recovery_cell_csv(const std::vector<RecoveryTrial>& trials) {
    std::ostringstream out;
    out << std::setprecision(17) << "trial,seed,emd_pairwise,emd_radial,emd_distribution,converged,success\n";
    for (const auto& t : trials)
        out << t.trial << ',' << t.seed << ',' << t.emd_pairwise << ',' << t.emd_radial << ',' << t.emd_distribution
            << ',' << (t.converged ? 1 : 0) << ',' << (t.success ? 1 : 0) << '\n';
    out << kCompleteMarker << " trials=" << trials.size() << '\n';
    return out.str();
}

std::vector<PbdeTrial> parse_pbde_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<PbdeTrial> out;
    for (const auto& r : rows) {
        if (r.size() != 6) throw std::runtime_error("malformed PBDE cell row");
        PbdeTrial t;
        t.trial = std::stol(r[0]);
        t.seed = std::stoull(r[1]);
        t.radius_bound = std::stod(r[2]);
        t.max_error = std::stod(r[3]);
        t.recovered = std::stol(r[4]);
        t.success = r[5] == "1";
        out.push_back(t);
    }
    return out;
}

std::vector<RecoveryTrial> parse_recovery_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<RecoveryTrial> out;
    for (const auto& r : rows) {
        if (r.size() != 7) throw std::runtime_error("malformed recovery cell row");
        RecoveryTrial t;
        t.trial = std::stol(r[0]);
        t.seed = std::stoull(r[1]);
        t.emd_pairwise = std::stod(r[2]);
        t.emd_radial = std::stod(r[3]);
        t.emd_distribution = std::stod(r[4]);
        t.converged = r[5] == "1";
        t.success = r[6] == "1";
        out.push_back(t);
    }
    return out;
}

std::string summary_csv(TableKind kind, const std::vector<CellSummary>& cells) {
    std::ostringstream out;
    out << "table,k,m_bins,snr,trials,successes,rate_percent";
    if (kind == TableKind::pbde)
        for (const double t : threshold_sweep()) out << ",rate_at_" << t << "R";
    out << '\n' << std::fixed << std::setprecision(2);
    for (const auto& c : cells) {
        out << (kind == TableKind::pbde ? "pbde" : "recovery") << ',' << c.key.k << ',' << c.key.m << ','
            << format_snr(c.key.snr) << ',' << c.trials << ',' << c.successes << ',' << 100.0 * c.rate();
        for (const double r : c.sweep_rates) out << ',' << 100.0 * r;
        out << '\n';
    }
    return out.str();
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

double parse_snr(const std::string& text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "inf" || lower == "infinity") return std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ConfigError("snr", "cannot parse '" + text + "'");
    if (!(value > 0.0)) throw ConfigError("snr", "must be positive");
    return value;
}

std::string format_snr(double snr) {
    if (std::isinf(snr)) return "inf";
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, snr);
    return std::string(buffer, end);
}

ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& base) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config", e.what());
    }
    if (!root.is_object()) throw ConfigError("config", "expected a JSON object");
    ExperimentConfig c = base;
    for (const auto& [key, value] : root.items()) {
        if (key == "k_values") {
            c.k_values = read_value<std::vector<Eigen::Index>>(value, key);
        } else if (key == "m_values") {
            c.m_values = read_value<std::vector<Eigen::Index>>(value, key);
        } else if (key == "snr_values") {
            if (!value.is_array()) throw ConfigError(key, "expected an array");
            c.snr_values.clear();
            for (const auto& v : value) c.snr_values.push_back(snr_from_json(v, key));
        } else if (key == "trials") {
            c.trials = read_value<Eigen::Index>(value, key);
        } else if (key == "lines") {
            c.lines = read_value<Eigen::Index>(value, key);
        } else if (key == "seed") {
            c.seed = read_value<std::uint64_t>(value, key);
        } else if (key == "half_width") {
            c.half_width = read_value<double>(value, key);
        } else if (key == "recenter") {
            c.recenter = read_value<bool>(value, key);
        } else if (key == "sigma2") {
            if (value.is_null())
                c.sigma2.reset();
            else
                c.sigma2 = read_value<double>(value, key);
        } else if (key == "jobs") {
            c.jobs = read_value<unsigned>(value, key);
        } else if (key == "nu_min") {
            c.nu_min = read_value<Eigen::Index>(value, key);
        } else if (key == "nu_max") {
            c.nu_max = read_value<Eigen::Index>(value, key);
        } else if (key == "pbde_threshold") {
            c.pbde_threshold = read_value<double>(value, key);
        } else if (key == "denoise_iterations") {
            c.denoise_iterations = read_value<int>(value, key);
        } else if (key == "resolve_multiplicity") {
            c.resolve_multiplicity = read_value<bool>(value, key);
        } else if (key == "cutoff") {
            c.cutoff = read_value<double>(value, key);
        } else if (key == "quad_points") {
            c.quad_points = read_value<Eigen::Index>(value, key);
        } else if (key == "axis_points") {
            c.axis_points = read_value<Eigen::Index>(value, key);
        } else if (key == "grid") {
            c.grid = read_value<Eigen::Index>(value, key);
        } else if (key == "restarts") {
            c.restarts = read_value<Eigen::Index>(value, key);
        } else if (key == "max_iters") {
            c.max_iters = read_value<Eigen::Index>(value, key);
        } else if (key == "lambda_radial") {
            c.lambda_radial = read_value<double>(value, key);
        } else if (key == "pair_blur") {
            c.pair_blur = read_value<double>(value, key);
        } else if (key == "emd_threshold") {
            c.emd_threshold = read_value<double>(value, key);
        } else {
            throw ConfigError(key, "unknown configuration key");
        }
    }
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    // `jobs` is deliberately left out: it never changes results.
    json j;
    j["k_values"] = c.k_values;
    j["m_values"] = c.m_values;
    j["snr_values"] = json::array();
    for (const double s : c.snr_values) j["snr_values"].push_back(snr_to_json(s));
    j["trials"] = c.trials;
    j["lines"] = c.lines;
    j["seed"] = c.seed;
    j["half_width"] = c.half_width;
    j["recenter"] = c.recenter;
    j["sigma2"] = c.sigma2 ? json(*c.sigma2) : json(nullptr);
    j["nu_min"] = c.nu_min;
    j["nu_max"] = c.nu_max;
    j["pbde_threshold"] = c.pbde_threshold;
    j["denoise_iterations"] = c.denoise_iterations;
    j["resolve_multiplicity"] = c.resolve_multiplicity;
    j["cutoff"] = c.cutoff;
    j["quad_points"] = c.quad_points;
    j["axis_points"] = c.axis_points;
    j["grid"] = c.grid;
    j["restarts"] = c.restarts;
    j["max_iters"] = c.max_iters;
    j["lambda_radial"] = c.lambda_radial;
    j["pair_blur"] = c.pair_blur;
    j["emd_threshold"] = c.emd_threshold;
    return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& c, TableKind kind) {
    const Eigen::Index min_k = kind == TableKind::recovery ? 2 : 1;
    if (c.k_values.empty()) throw ConfigError("k_values", "must not be empty");
    for (const auto k : c.k_values)
        if (k < min_k) throw ConfigError("k_values", "K must be >= " + std::to_string(min_k));
    if (c.m_values.empty()) throw ConfigError("m_values", "must not be empty");
    for (const auto m : c.m_values)
        if (m < 1) throw ConfigError("m_values", "M must be >= 1");
    for (const double s : c.snr_values)
        if (!(s > 0.0)) throw ConfigError("snr_values", "SNR must be positive (use \"inf\" for noiseless)");
    if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
    if (c.lines < 1) throw ConfigError("lines", "must be >= 1");
    if (!(c.half_width > 0.0)) throw ConfigError("half_width", "must be positive");
    if (c.sigma2 && !(*c.sigma2 >= 0.0)) throw ConfigError("sigma2", "must be nonnegative");
    if (c.jobs < 1) throw ConfigError("jobs", "must be >= 1");
    if (c.nu_min < 1) throw ConfigError("nu_min", "must be >= 1");
    if (c.nu_max < 0 || (c.nu_max > 0 && c.nu_max <= c.nu_min))
        throw ConfigError("nu_max", "must be 0 (automatic) or greater than nu_min");
    if (!(c.pbde_threshold > 0.0)) throw ConfigError("pbde_threshold", "must be positive");
    if (c.denoise_iterations < 0) throw ConfigError("denoise_iterations", "must be >= 0");
    if (!(c.cutoff > 0.0)) throw ConfigError("cutoff", "must be positive");
    if (c.quad_points != 0 && c.quad_points < 8) throw ConfigError("quad_points", "must be 0 (automatic) or >= 8");
    if (c.axis_points < 16) throw ConfigError("axis_points", "must be >= 16");
    if (c.grid < 2) throw ConfigError("grid", "must be >= 2");
    if (c.restarts < 1) throw ConfigError("restarts", "must be >= 1");
    if (c.max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
    if (!(c.lambda_radial >= 0.0)) throw ConfigError("lambda_radial", "must be nonnegative");
    if (!(c.pair_blur >= 0.0)) throw ConfigError("pair_blur", "must be nonnegative");
    if (!(c.emd_threshold > 0.0)) throw ConfigError("emd_threshold", "must be positive");
}

std::vector<double> default_snrs(TableKind kind) {
    const double inf = std::numeric_limits<double>::infinity();
    if (kind == TableKind::pbde) return {inf, 100.0, 10.0, 1.0};
    return {inf, 100.0, 10.0, 1.0, 0.5};
}

std::string cell_name(TableKind kind, const CellKey& key) {
    return std::string(kind == TableKind::pbde ? "pbde" : "recovery") + "_k" + std::to_string(key.k) + "_m" +
           std::to_string(key.m) + "_snr" + format_snr(key.snr);
}

std::uint64_t trial_seed(std::uint64_t base, const CellKey& key, Eigen::Index trial) {
    std::uint64_t s = mix_key(base, static_cast<std::uint64_t>(key.k));
    s = mix_key(s, static_cast<std::uint64_t>(key.m));
    s = mix_key(s, std::bit_cast<std::uint64_t>(key.snr));
    return mix_key(s, static_cast<std::uint64_t>(trial));
}

HankelConfig hankel_config(const ExperimentConfig& config, double radius_bound) {
    HankelConfig h;
    h.cutoff = config.cutoff;
    h.quad_points = config.quad_points > 0 ? config.quad_points : default_quad_points(config.cutoff);
    h.axis_points = config.axis_points;
    h.axis_max = radius_bound;
    return h;
}

PbdeOptions pbde_options(const ExperimentConfig& config, Eigen::Index half_bins) {
    PbdeOptions o;
    o.nu_min = config.nu_min;
    o.nu_max = config.nu_max > 0 ? config.nu_max : default_pbde_nu_max(half_bins);
    o.denoise_iterations = config.denoise_iterations;
    o.resolve_multiplicity = config.resolve_multiplicity;
    return o;
}

RecoveryOptions recovery_options(const ExperimentConfig& config, std::uint64_t seed) {
    RecoveryOptions o;
    o.restarts = config.restarts;
    o.max_iters = config.max_iters;
    o.lambda_radial = config.lambda_radial;
    o.pair_blur = config.pair_blur;
    o.seed = seed;
    return o;
}

PointSourceModel trial_model(const ExperimentConfig& config, Eigen::Index k, std::uint64_t seed) {
    PointSourceModel model = generate_model(k, mix_key(seed, kModelTag), config.half_width);
    return config.recenter ? recentered(model) : model;
}

ProjectionSet trial_projections(const ExperimentConfig& config, const PointSourceModel& model, const CellKey& key,
                                std::uint64_t seed) {
    SimulationConfig sc;
    sc.lines = config.lines;
    sc.half_bins = key.m;
    sc.snr = key.snr;
    sc.seed = mix_key(seed, kProjectionTag);
    return simulate(model, sc);
}

PbdeTrial run_pbde_trial(const ExperimentConfig& config, const CellKey& key, Eigen::Index trial) {
    PbdeTrial out;
    out.trial = trial;
    out.seed = trial_seed(config.seed, key, trial);
    const PointSourceModel model = trial_model(config, key.k, out.seed);
    out.radius_bound = model.radius_bound();
    const PbdeOptions options = pbde_options(config, key.m);
    try {
        const ProjectionSet data = trial_projections(config, model, key, out.seed);
        const InvariantFeatures features =
            estimate_features(data, key.k, integer_axis(0, options.nu_max), config.sigma2);
        const PronyEstimate estimate = estimate_radial_distances(features, key.k, model.radius_bound(), options);
        out.recovered = estimate.distances.size();
        out.max_error = max_matched_error(estimate.distances, radial_distances(model));
    } catch (const std::domain_error&) {
        out.max_error = std::numeric_limits<double>::infinity();
    }
    out.success = out.max_error < config.pbde_threshold * out.radius_bound;
    return out;
}

RecoveryTrial run_recovery_trial(const ExperimentConfig& config, const CellKey& key, Eigen::Index trial) {
    RecoveryTrial out;
    out.trial = trial;
    out.seed = trial_seed(config.seed, key, trial);
    const PointSourceModel model = trial_model(config, key.k, out.seed);
    const double inf = std::numeric_limits<double>::infinity();
    out.emd_pairwise = out.emd_radial = out.emd_distribution = inf;
    try {
        const ProjectionSet data = trial_projections(config, model, key, out.seed);
        const DistributionEstimate est =
            estimate_distributions(data, key.k, hankel_config(config, model.radius_bound()), config.sigma2);
        const DistanceOperators ops(default_grid(model.radius_bound(), config.grid, config.half_width));
        const RecoveryResult rec =
            recover(*est.p_c, est.p_mu, ops, key.k, recovery_options(config, mix_key(out.seed, kRecoveryTag)));
        const DistanceAxis& axis = est.p_mu.axis;
        const auto true_pairs = true_distance_distribution(unique_pairwise_distances(model), axis);
        out.emd_pairwise = emd_1d(location_pair_distribution(rec.locations, axis), true_pairs);
        out.emd_radial = emd_1d(location_radial_distribution(rec.locations, axis),
                                true_distance_distribution(radial_distances(model), axis));
        out.emd_distribution = emd_1d(*est.p_c, true_pairs);
        out.converged = rec.converged;
    } catch (const std::domain_error&) {
        // Unnormalizable distribution: counted as a failed trial.
    }
    out.success = out.emd_pairwise <= config.emd_threshold;
    return out;
}

void parallel_for(Eigen::Index n, unsigned jobs, const std::function<void(Eigen::Index)>& fn) {
    if (n <= 0) return;
    const auto workers = static_cast<Eigen::Index>(std::max(1u, jobs));
    if (workers == 1 || n == 1) {
        for (Eigen::Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<Eigen::Index> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    auto work = [&] {
        for (Eigen::Index i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (Eigen::Index w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<PbdeTrial> run_pbde_cell(const ExperimentConfig& config, const CellKey& key) {
    std::vector<PbdeTrial> out(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, config.jobs,
                 [&](Eigen::Index t) { out[static_cast<std::size_t>(t)] = run_pbde_trial(config, key, t); });
    return out;
}

std::vector<RecoveryTrial> run_recovery_cell(const ExperimentConfig& config, const CellKey& key) {
    std::vector<RecoveryTrial> out(static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, config.jobs,
                 [&](Eigen::Index t) { out[static_cast<std::size_t>(t)] = run_recovery_trial(config, key, t); });
    return out;
}

CellSummary summarize(const ExperimentConfig&, const CellKey& key, const std::vector<PbdeTrial>& trials) {
    CellSummary s;
    s.kind = TableKind::pbde;
    s.key = key;
    s.trials = static_cast<Eigen::Index>(trials.size());
    for (const auto& t : trials) s.successes += t.success ? 1 : 0;
    for (const double th : threshold_sweep()) {
        const auto hits = std::count_if(trials.begin(), trials.end(),
                                        [&](const PbdeTrial& t) { return t.max_error < th * t.radius_bound; });
        s.sweep_rates.push_back(trials.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials.size()));
    }
    return s;
}

CellSummary summarize(const ExperimentConfig&, const CellKey& key, const std::vector<RecoveryTrial>& trials) {
    CellSummary s;
    s.kind = TableKind::recovery;
    s.key = key;
    s.trials = static_cast<Eigen::Index>(trials.size());
    for (const auto& t : trials) s.successes += t.success ? 1 : 0;
    return s;
}

std::vector<CellSummary> run_table(TableKind kind, const ExperimentConfig& config, const fs::path& run_dir,
                                   const ProgressFn& progress) {
    validate(config, kind);
    ExperimentConfig effective = config;
    if (effective.snr_values.empty()) effective.snr_values = default_snrs(kind);

    fs::create_directories(run_dir / "cells");
    const std::string config_text = config_to_json(effective);
    const fs::path config_path = run_dir / "config.json";
    if (fs::exists(config_path)) {
        if (read_file(config_path) != config_text)
            throw ConfigError("out", config_path.string() + " holds a different configuration; use a new run id");
    } else {
        write_atomically(config_path, config_text);
    }

    std::vector<CellSummary> cells;
    for (const auto k : effective.k_values) {
        for (const auto m : effective.m_values) {
            for (const double snr : effective.snr_values) {
                const CellKey key{k, m, snr};
                const fs::path path = run_dir / "cells" / (cell_name(kind, key) + ".csv");
                CellSummary summary;
                const auto rows = read_complete_cell(path, effective.trials);
                if (kind == TableKind::pbde) {
                    if (rows) {
                        summary = summarize(effective, key, parse_pbde_rows(*rows));
                        summary.resumed = true;
                    } else {
                        const auto trials = run_pbde_cell(effective, key);
                        write_atomically(path, pbde_cell_csv(trials));
                        summary = summarize(effective, key, trials);
                    }
                } else {
                    if (rows) {
                        summary = summarize(effective, key, parse_recovery_rows(*rows));
                        summary.resumed = true;
                    } else {
                        const auto trials = run_recovery_cell(effective, key);
                        write_atomically(path, recovery_cell_csv(trials));
                        summary = summarize(effective, key, trials);
                    }
                }
                if (progress) progress(summary);
                cells.push_back(std::move(summary));
            }
        }
    }
    write_atomically(run_dir / "summary.csv", summary_csv(kind, cells));
    return cells;
}

std::vector<CellSummary> run_pbde_table(const ExperimentConfig& config, const fs::path& run_dir,
                                        const ProgressFn& progress) {
    return run_table(TableKind::pbde, config, run_dir, progress);
}

std::vector<CellSummary> run_recovery_table(const ExperimentConfig& config, const fs::path& run_dir,
                                            const ProgressFn& progress) {
    return run_table(TableKind::recovery, config, run_dir, progress);
}

SingleRun run_single(const ExperimentConfig& config, const CellKey& key, std::uint64_t seed, const fs::path& out_dir) {
    ExperimentConfig c = config;
    c.k_values = {key.k};
    c.m_values = {key.m};
    c.snr_values = {key.snr};
    validate(c, TableKind::recovery);

    fs::create_directories(out_dir);
    SingleRun out;
    out.model = out_dir / "model.json";
    out.projections = out_dir / "projections.bin";
    out.features = out_dir / "features.csv";
    out.distributions = out_dir / "distributions.csv";
    out.recovery = out_dir / "recovery.json";

    const PointSourceModel model = trial_model(c, key.k, seed);
    write_atomically(out.model, model_to_json(model));
    const ProjectionSet data = trial_projections(c, model, key, seed);
    write_projection_binary(data, out.projections);

    const auto axis = integer_axis(0, c.nu_max > 0 ? c.nu_max : default_pbde_nu_max(key.m));
    const InvariantFeatures analytic = analytic_features(model, axis);
    write_features_csv(estimate_features(data, key.k, axis, c.sigma2), &analytic, out.features);

    const DistributionEstimate est =
        estimate_distributions(data, key.k, hankel_config(c, model.radius_bound()), c.sigma2);
    write_distributions_csv(est, &model, out.distributions);

    const DistanceOperators ops(default_grid(model.radius_bound(), c.grid, c.half_width));
    const RecoveryResult rec = recover(*est.p_c, est.p_mu, ops, key.k, recovery_options(c, mix_key(seed, kRecoveryTag)));
    const DistanceAxis& dist_axis = est.p_mu.axis;
    const auto true_pairs = true_distance_distribution(unique_pairwise_distances(model), dist_axis);
    out.emd_distribution = emd_1d(*est.p_c, true_pairs);
    out.emd_pairwise = emd_1d(location_pair_distribution(rec.locations, dist_axis), true_pairs);
    out.emd_radial = emd_1d(location_radial_distribution(rec.locations, dist_axis),
                            true_distance_distribution(radial_distances(model), dist_axis));
    write_atomically(out.recovery, recovery_report_json(rec, out.emd_pairwise, out.emd_radial) + "\n");
    return out;
}

}  // namespace uvt
