#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uvt/experiment.hpp"

using namespace uvt;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig c;
    c.k_values = {3};
    c.m_values = {60, 130};
    c.snr_values = {std::numeric_limits<double>::infinity(), 10.0};
    c.trials = 3;
    c.lines = 300;
    c.grid = 9;
    c.restarts = 2;
    c.max_iters = 200;
    c.cutoff = 60.0;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("uvt_experiment_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config JSON round trip and overrides") {
    ExperimentConfig c = tiny_config();
    c.sigma2 = 0.25;
    const ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.snr_values.size() == 2);
    CHECK(std::isinf(back.snr_values[0]));

    const ExperimentConfig partial = config_from_json(R"({"trials": 7, "snr_values": ["inf", 1]})");
    CHECK(partial.trials == 7);
    CHECK(partial.lines == ExperimentConfig{}.lines);
}

TEST_CASE("config errors name the offending field") {
    auto field_of = [](const std::string& text) {
        try {
            config_from_json(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    CHECK(field_of(R"({"bogus": 1})") == "bogus");
    CHECK(field_of(R"({"trials": "many"})") == "trials");
    CHECK(field_of(R"({"snr_values": ["loud"]})") == "snr_values");
    CHECK(field_of("[1, 2]") == "config");
    CHECK(field_of("{") == "config");

    auto invalid = [](auto edit) {
        ExperimentConfig c;
        edit(c);
        try {
            validate(c, TableKind::recovery);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    CHECK(invalid([](ExperimentConfig&) {}) == "none");
    CHECK(invalid([](ExperimentConfig& c) { c.k_values = {0}; }) == "k_values");
    CHECK(invalid([](ExperimentConfig& c) { c.m_values = {}; }) == "m_values");
    CHECK(invalid([](ExperimentConfig& c) { c.snr_values = {-1.0}; }) == "snr_values");
    CHECK(invalid([](ExperimentConfig& c) { c.trials = 0; }) == "trials");
    CHECK(invalid([](ExperimentConfig& c) { c.grid = 1; }) == "grid");
    CHECK(invalid([](ExperimentConfig& c) { c.emd_threshold = 0.0; }) == "emd_threshold");
    CHECK(invalid([](ExperimentConfig& c) { c.sigma2 = -1.0; }) == "sigma2");
    CHECK(invalid([](ExperimentConfig& c) { c.cutoff = -5.0; }) == "cutoff");
}

TEST_CASE("SNR parsing and formatting") {
    CHECK(std::isinf(parse_snr("inf")));
    CHECK(parse_snr("0.5") == 0.5);
    CHECK_THROWS_AS(parse_snr("zero"), ConfigError);
    CHECK_THROWS_AS(parse_snr("0"), ConfigError);
    CHECK(format_snr(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(parse_snr(format_snr(0.5)) == 0.5);
    CHECK(default_snrs(TableKind::recovery).size() == 5);
}

TEST_CASE("trial seeds depend on every coordinate") {
    const CellKey a{5, 100, 1.0};
    const auto s = trial_seed(1, a, 0);
    CHECK(s == trial_seed(1, a, 0));
    CHECK(s != trial_seed(2, a, 0));
    CHECK(s != trial_seed(1, a, 1));
    CHECK(s != trial_seed(1, CellKey{10, 100, 1.0}, 0));
    CHECK(s != trial_seed(1, CellKey{5, 500, 1.0}, 0));
    CHECK(s != trial_seed(1, CellKey{5, 100, 10.0}, 0));
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](Eigen::Index i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](Eigen::Index i) {
                        if (i == 6) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("cells do not depend on the worker count") {
    ExperimentConfig c = tiny_config();
    const CellKey key{3, 130, 10.0};
    c.jobs = 1;
    const auto serial = run_recovery_cell(c, key);
    c.jobs = 3;
    const auto parallel = run_recovery_cell(c, key);
    REQUIRE(serial.size() == 3);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].seed == parallel[i].seed);
        CHECK(serial[i].emd_pairwise == parallel[i].emd_pairwise);
        CHECK(serial[i].success == parallel[i].success);
    }
    const auto pbde = run_pbde_cell(c, CellKey{3, 130, std::numeric_limits<double>::infinity()});
    CHECK(pbde.size() == 3);
    const CellSummary s = summarize(c, key, serial);
    CHECK(s.trials == 3);
    CHECK(s.rate() >= 0.0);
}

TEST_CASE("tables resume only missing cells and reject foreign configs") {
    const fs::path dir = fresh_dir("resume");
    ExperimentConfig c = tiny_config();
    c.jobs = 2;
    const auto first = run_pbde_table(c, dir);
    REQUIRE(first.size() == 4);
    for (const auto& s : first) CHECK_FALSE(s.resumed);
    const std::string summary = slurp(dir / "summary.csv");
    CHECK(fs::exists(dir / "config.json"));

    const fs::path victim = dir / "cells" / (cell_name(TableKind::pbde, CellKey{3, 130, 10.0}) + ".csv");
    REQUIRE(fs::exists(victim));
    fs::remove(victim);
    c.jobs = 1;  // the worker count is not part of the run identity
    const auto second = run_pbde_table(c, dir);
    int resumed = 0;
    for (const auto& s : second) resumed += s.resumed ? 1 : 0;
    CHECK(resumed == 3);
    CHECK(slurp(dir / "summary.csv") == summary);
    CHECK(first[0].sweep_rates.size() == threshold_sweep().size());

    // An incomplete file (no footer) is recomputed.
    {
        std::ofstream trunc(victim, std::ios::trunc);
        trunc << "trial,seed\n";
    }
    const auto third = run_pbde_table(c, dir);
    CHECK(slurp(dir / "summary.csv") == summary);

    c.lines = 301;
    CHECK_THROWS_AS(run_pbde_table(c, dir), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("single runs write a re-readable bundle") {
    const fs::path dir = fresh_dir("single");
    ExperimentConfig c = tiny_config();
    const SingleRun run = run_single(c, CellKey{3, 130, 1.0}, 5, dir);
    for (const auto& p : {run.model, run.projections, run.features, run.distributions, run.recovery})
        CHECK(fs::exists(p));
    CHECK(read_projection_binary(run.projections).line_count() == 300);
    CHECK(model_from_json(slurp(run.model)).size() == 3);
    const std::string features = slurp(run.features);
    fs::remove_all(dir);
    run_single(c, CellKey{3, 130, 1.0}, 5, dir);
    CHECK(slurp(run.features) == features);
    fs::remove_all(dir);
}
