// Command-line front end: single pipeline stages on files, and seeded
// success-rate tables.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uvt/experiment.hpp"
#include "uvt/metrics.hpp"

namespace fs = std::filesystem;
using namespace uvt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

PointSourceModel load_model(const fs::path& path) {
    try {
        return model_from_json(slurp(path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("model", path.string() + ": " + e.what());
    }
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + out + " for writing");
    f << text;
}

// Flag values, applied over the config file only when given.
struct Flags {
    std::string config;
    std::vector<Eigen::Index> k;
    std::vector<Eigen::Index> m_bins;
    std::vector<std::string> snr;
    Eigen::Index lines = 0, trials = 0, grid = 0, nu_min = 0, nu_max = 0, restarts = 0, quad_points = 0;
    std::uint64_t seed = 0;
    double threshold = 0.0, sigma2 = 0.0, cutoff = 0.0;
    bool recenter = false;
    unsigned jobs = 1;
    std::string out, input, model, run_id;

    CLI::App* app = nullptr;
    bool given(const std::string& name) const {
        const CLI::Option* opt = app->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    }
};

void add_grid_flags(CLI::App* sub, Flags& f, bool tables) {
    sub->add_option("--config", f.config, "JSON configuration file (flags override it)");
    if (tables) {
        sub->add_option("--k", f.k, "Point counts K");
        sub->add_option("--m-bins", f.m_bins, "Detector half-widths M (2M+1 bins)");
        sub->add_option("--snr", f.snr, "SNR values; 'inf' is noiseless");
        sub->add_option("--trials", f.trials, "Trials per cell");
        sub->add_option("--jobs", f.jobs, "Worker threads (results do not depend on it)");
        sub->add_option("--run-id", f.run_id, "Run directory name under --out");
    } else {
        sub->add_option("--k", f.k, "Point count K")->expected(1);
        sub->add_option("--m-bins", f.m_bins, "Detector half-width M")->expected(1);
        sub->add_option("--snr", f.snr, "SNR; 'inf' is noiseless")->expected(1);
    }
    sub->add_option("--lines", f.lines, "Projection lines L");
    sub->add_option("--seed", f.seed, "Base seed");
    sub->add_option("--grid", f.grid, "Recovery grid side G");
    sub->add_option("--nu-min", f.nu_min, "Lowest frequency used by PBDE");
    sub->add_option("--nu-max", f.nu_max, "Highest frequency used by PBDE (0: min(M,120))");
    sub->add_option("--cutoff", f.cutoff, "Hankel frequency cutoff");
    sub->add_option("--threshold", f.threshold,
                    "Success threshold: fraction of R for PBDE, EMD for recovery");
    sub->add_option("--sigma2", f.sigma2, "Noise variance used for debiasing");
    sub->add_flag("--recenter", f.recenter, "Move each model's centroid to the origin");
}

ExperimentConfig build_config(const Flags& f, bool pbde_threshold) {
    ExperimentConfig c;
    if (!f.config.empty()) c = config_from_json(slurp(f.config), c);
    if (f.given("--k")) c.k_values = f.k;
    if (f.given("--m-bins")) c.m_values = f.m_bins;
    if (f.given("--snr")) {
        c.snr_values.clear();
        for (const auto& s : f.snr) c.snr_values.push_back(parse_snr(s));
    }
    if (f.given("--trials")) c.trials = f.trials;
    if (f.given("--jobs")) c.jobs = f.jobs;
    if (f.given("--lines")) c.lines = f.lines;
    if (f.given("--seed")) c.seed = f.seed;
    if (f.given("--grid")) c.grid = f.grid;
    if (f.given("--nu-min")) c.nu_min = f.nu_min;
    if (f.given("--nu-max")) c.nu_max = f.nu_max;
    if (f.given("--cutoff")) c.cutoff = f.cutoff;
    if (f.given("--sigma2")) c.sigma2 = f.sigma2;
    if (f.given("--recenter")) c.recenter = true;
    if (f.given("--threshold")) (pbde_threshold ? c.pbde_threshold : c.emd_threshold) = f.threshold;
    return c;
}

// First K, M and SNR of the config: the single cell a per-file verb acts on.
CellKey single_key(const ExperimentConfig& c, double default_snr = std::numeric_limits<double>::infinity()) {
    CellKey key;
    key.k = c.k_values.front();
    key.m = c.m_values.front();
    key.snr = c.snr_values.empty() ? default_snr : c.snr_values.front();
    return key;
}

int cmd_simulate(const Flags& f) {
    ExperimentConfig c = build_config(f, false);
    const CellKey key = single_key(c);
    validate(c, TableKind::pbde);
    const fs::path dir(f.out);
    fs::create_directories(dir);
    const PointSourceModel model = trial_model(c, key.k, c.seed);
    const ProjectionSet data = trial_projections(c, model, key, c.seed);
    emit(model_to_json(model), (dir / "model.json").string());
    write_projection_binary(data, dir / "projections.bin");
    std::cout << "wrote " << (dir / "model.json").string() << " and " << (dir / "projections.bin").string()
              << " (L=" << data.line_count() << ", M=" << data.half_bins << ", sigma2=" << data.noise_variance
              << ", clamped=" << data.clamped_points << ")\n";
    return 0;
}

ProjectionSet load_projections(const Flags& f) {
    if (f.input.empty()) throw ConfigError("input", "--input is required");
    return read_projection_binary(f.input);
}

Eigen::Index required_k(const Flags& f, const ExperimentConfig& c) {
    if (!f.given("--k") && f.config.empty()) throw ConfigError("k", "--k is required");
    return c.k_values.front();
}

int cmd_features(const Flags& f) {
    const ExperimentConfig c = build_config(f, false);
    const ProjectionSet data = load_projections(f);
    const Eigen::Index k = required_k(f, c);
    const Eigen::Index hi = c.nu_max > 0 ? c.nu_max : data.half_bins;
    const Eigen::Index lo = f.given("--nu-min") ? c.nu_min : 0;
    if (hi < lo) throw ConfigError("nu_max", "must not be below nu_min");
    const auto axis = integer_axis(lo, hi);
    const InvariantFeatures est = estimate_features(data, k, axis, c.sigma2);
    if (!f.model.empty()) {
        const InvariantFeatures analytic = analytic_features(load_model(f.model), axis);
        write_features_csv(est, &analytic, f.out);
    } else {
        write_features_csv(est, nullptr, f.out);
    }
    return 0;
}

int cmd_pbde(const Flags& f) {
    const ExperimentConfig c = build_config(f, true);
    const ProjectionSet data = load_projections(f);
    const Eigen::Index k = required_k(f, c);
    const PbdeOptions options = pbde_options(c, data.half_bins);
    const InvariantFeatures feats = estimate_features(data, k, integer_axis(0, options.nu_max), c.sigma2);
    const PronyEstimate est = estimate_radial_distances(feats, k, data.radius_bound, options);
    nlohmann::json j;
    j["distances"] = std::vector<double>(est.distances.begin(), est.distances.end());
    j["amplitudes"] = std::vector<double>(est.amplitudes.begin(), est.amplitudes.end());
    j["multiplicities"] = std::vector<int>(est.multiplicities.begin(), est.multiplicities.end());
    j["residual"] = est.residual;
    j["missing"] = est.missing;
    j["nu_min"] = est.nu_min;
    j["nu_max"] = est.nu_max;
    if (!f.model.empty()) {
        const PointSourceModel model = load_model(f.model);
        const double err = max_matched_error(est.distances, radial_distances(model));
        j["max_error"] = std::isfinite(err) ? nlohmann::json(err) : nlohmann::json(nullptr);
        j["success"] = err < c.pbde_threshold * model.radius_bound();
    }
    emit(j.dump(2) + "\n", f.out);
    return 0;
}

int cmd_dde(const Flags& f) {
    ExperimentConfig c = build_config(f, false);
    if (f.given("--quad-points")) c.quad_points = f.quad_points;
    const ProjectionSet data = load_projections(f);
    const Eigen::Index k = required_k(f, c);
    validate(c, TableKind::pbde);
    const DistributionEstimate est = estimate_distributions(data, k, hankel_config(c, data.radius_bound), c.sigma2);
    if (!f.model.empty()) {
        const PointSourceModel model = load_model(f.model);
        write_distributions_csv(est, &model, f.out);
    } else {
        write_distributions_csv(est, nullptr, f.out);
    }
    return 0;
}

int cmd_recover(const Flags& f) {
    ExperimentConfig c = build_config(f, false);
    if (f.given("--restarts")) c.restarts = f.restarts;
    const ProjectionSet data = load_projections(f);
    const Eigen::Index k = required_k(f, c);
    validate(c, TableKind::recovery);
    const DistributionEstimate est = estimate_distributions(data, k, hankel_config(c, data.radius_bound), c.sigma2);
    if (!est.p_c) throw ConfigError("k", "recovery needs K >= 2");
    const DistanceOperators ops(default_grid(data.radius_bound, c.grid, c.half_width));
    const RecoveryResult rec = recover(*est.p_c, est.p_mu, ops, k, recovery_options(c, c.seed));
    double emd_pair = std::nan(""), emd_radial = std::nan("");
    if (!f.model.empty()) {
        const PointSourceModel model = load_model(f.model);
        const DistanceAxis& axis = est.p_mu.axis;
        emd_pair = emd_1d(location_pair_distribution(rec.locations, axis),
                          true_distance_distribution(unique_pairwise_distances(model), axis));
        emd_radial = emd_1d(location_radial_distribution(rec.locations, axis),
                            true_distance_distribution(radial_distances(model), axis));
        std::cerr << "emd_pairwise " << emd_pair << (emd_pair <= c.emd_threshold ? " (success)" : " (failure)")
                  << '\n';
    }
    emit(recovery_report_json(rec, emd_pair, emd_radial) + "\n", f.out);
    return 0;
}

int cmd_table(const Flags& f, TableKind kind) {
    const ExperimentConfig c = build_config(f, kind == TableKind::pbde);
    const std::string run_id =
        f.run_id.empty() ? std::string(kind == TableKind::pbde ? "pbde" : "recovery") + "-seed" + std::to_string(c.seed)
                         : f.run_id;
    const fs::path dir = fs::path(f.out.empty() ? "runs" : f.out) / run_id;
    const auto cells = run_table(kind, c, dir, [](const CellSummary& s) {
        std::cout << "K=" << s.key.k << " M=" << s.key.m << " SNR=" << format_snr(s.key.snr) << "  " << s.successes
                  << '/' << s.trials << (s.resumed ? "  (resumed)" : "");
        if (!s.sweep_rates.empty()) {
            std::cout << "  sweep";
            for (std::size_t i = 0; i < s.sweep_rates.size(); ++i)
                std::cout << ' ' << threshold_sweep()[i] << "R:" << std::lround(100.0 * s.sweep_rates[i]) << '%';
        }
        std::cout << std::endl;
    });
    std::cout << "summary: " << (dir / "summary.csv").string() << '\n';
    return 0;
}

int cmd_single(const Flags& f) {
    const ExperimentConfig c = build_config(f, false);
    const CellKey key = single_key(c, 1.0);
    const SingleRun run = run_single(c, key, c.seed, f.out.empty() ? fs::path("single") : fs::path(f.out));
    std::cout << "emd(p_C, truth) " << run.emd_distribution << "\nemd_pairwise " << run.emd_pairwise
              << "\nemd_radial " << run.emd_radial << "\nfiles in " << run.model.parent_path().string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-source recovery from unknown-view tomographic projections"};
    app.require_subcommand(1);
    Flags flags;

    auto* simulate = app.add_subcommand("simulate", "Generate a random model and its projection lines");
    add_grid_flags(simulate, flags, false);
    simulate->add_option("--out", flags.out, "Output directory")->required();

    auto* features = app.add_subcommand("features", "Invariant features of a projection file");
    add_grid_flags(features, flags, false);
    features->add_option("--input", flags.input, "Projection file")->required();
    features->add_option("--model", flags.model, "Model JSON for analytic comparison columns");
    features->add_option("--out", flags.out, "Feature CSV")->required();

    auto* pbde = app.add_subcommand("pbde", "Radial distances by the Prony method");
    add_grid_flags(pbde, flags, false);
    pbde->add_option("--input", flags.input, "Projection file")->required();
    pbde->add_option("--model", flags.model, "Model JSON to score against");
    pbde->add_option("--out", flags.out, "Result JSON (stdout when omitted)");

    auto* dde = app.add_subcommand("dde", "Radial and pairwise distance distributions");
    add_grid_flags(dde, flags, false);
    dde->add_option("--input", flags.input, "Projection file")->required();
    dde->add_option("--model", flags.model, "Model JSON for truth columns");
    dde->add_option("--quad-points", flags.quad_points, "Gauss-Legendre nodes");
    dde->add_option("--out", flags.out, "Distribution CSV")->required();

    auto* rec = app.add_subcommand("recover", "Point locations from a projection file");
    add_grid_flags(rec, flags, false);
    rec->add_option("--input", flags.input, "Projection file")->required();
    rec->add_option("--model", flags.model, "Model JSON to score against");
    rec->add_option("--restarts", flags.restarts, "Gradient descent restarts");
    rec->add_option("--out", flags.out, "Recovery report JSON (stdout when omitted)");

    auto* table_pbde = app.add_subcommand("table-pbde", "Success rates of Prony distance estimation");
    add_grid_flags(table_pbde, flags, true);
    table_pbde->add_option("--out", flags.out, "Runs directory (default: runs)");

    auto* table_rec = app.add_subcommand("table-recovery", "Success rates of point-source recovery");
    add_grid_flags(table_rec, flags, true);
    table_rec->add_option("--out", flags.out, "Runs directory (default: runs)");

    auto* single = app.add_subcommand("single", "One full pipeline run with every intermediate file");
    add_grid_flags(single, flags, false);
    single->add_option("--out", flags.out, "Output directory (default: single)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        flags.app = chosen;
        if (chosen == simulate) return cmd_simulate(flags);
        if (chosen == features) return cmd_features(flags);
        if (chosen == pbde) return cmd_pbde(flags);
        if (chosen == dde) return cmd_dde(flags);
        if (chosen == rec) return cmd_recover(flags);
        if (chosen == table_pbde) return cmd_table(flags, TableKind::pbde);
        if (chosen == table_rec) return cmd_table(flags, TableKind::recovery);
        if (chosen == single) return cmd_single(flags);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
