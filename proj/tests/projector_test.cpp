#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "uvt/projector.hpp"

using namespace uvt;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("uvt_projector_" + name);
}

}  // namespace

TEST_CASE("a point at the origin lands in the center bin") {
    const PointSourceModel m(Eigen::Matrix2Xd::Zero(2, 1), 2.0);
    for (double theta : {0.0, 1.0, 4.0}) {
        const Eigen::VectorXd line = project_line(m, theta, 10);
        CHECK(line.size() == 21);
        CHECK(line(10) == 1.0);
        CHECK(line.sum() == 1.0);
    }
}

TEST_CASE("projection coordinate is y cos(theta) - x sin(theta)") {
    Eigen::Matrix2Xd p(2, 1);
    p << 0.0, 1.0;
    const PointSourceModel m(p, 2.0);
    const Eigen::Index half = 50;
    const double delta = bin_width(2.0, half);
    CHECK(delta == doctest::Approx(4.0 / 101.0));
    // theta = 0: coordinate y = 1, bin floor(1/delta + 1/2).
    const auto expect = static_cast<Eigen::Index>(std::floor(1.0 / delta + 0.5));
    CHECK(project_line(m, 0.0, half)(expect + half) == 1.0);
    CHECK(project_line(m, std::numbers::pi, half)(-expect + half) == 1.0);
    // theta = pi/2: coordinate -x = 0.
    CHECK(project_line(m, std::numbers::pi / 2, half)(half) == 1.0);
}

TEST_CASE("mass is conserved and out-of-range points are clamped") {
    Eigen::Matrix2Xd p(2, 2);
    p << 0.2, 3.0,
         0.1, 0.0;
    const PointSourceModel m(p, Eigen::Vector2d(1.5, 0.5), 1.0);
    Eigen::Index clamped = 0;
    const Eigen::VectorXd line = project_line(m, std::numbers::pi / 2, 8, &clamped);
    CHECK(line.sum() == doctest::Approx(2.0));
    CHECK(clamped == 1);
    CHECK(line(0) == 0.5);
    CHECK_THROWS_AS(project_line(m, 0.0, 0), std::invalid_argument);
}

TEST_CASE("simulation draws each line from its own substream") {
    const PointSourceModel m = generate_model(4, 3);
    SimulationConfig cfg;
    cfg.lines = 40;
    cfg.half_bins = 30;
    cfg.seed = 99;
    const ProjectionSet a = simulate(m, cfg);
    cfg.lines = 15;
    const ProjectionSet b = simulate(m, cfg);
    CHECK(a.lines.topRows(15) == b.lines);
    CHECK(a.angles.head(15) == b.angles);
    CHECK(a.noise_variance == 0.0);
    CHECK((a.angles.array() >= 0.0).all());
    CHECK((a.angles.array() < 2.0 * std::numbers::pi).all());
    for (Eigen::Index l = 0; l < a.line_count(); ++l)
        CHECK(a.lines.row(l).transpose() == project_line(m, a.angles(l), 30));
}

TEST_CASE("noise variance is mean clean power over SNR") {
    const PointSourceModel m = generate_model(5, 8);
    SimulationConfig cfg;
    cfg.lines = 2000;
    cfg.half_bins = 40;
    cfg.seed = 7;
    const ProjectionSet clean = simulate(m, cfg);
    cfg.snr = 2.0;
    const ProjectionSet noisy = simulate(m, cfg);
    const double power = clean.lines.squaredNorm() / static_cast<double>(clean.lines.size());
    CHECK(noisy.noise_variance == doctest::Approx(power / 2.0).epsilon(1e-14));
    CHECK(noisy.angles == clean.angles);
    const RowMatrixXd noise = noisy.lines - clean.lines;
    const double var = noise.squaredNorm() / static_cast<double>(noise.size());
    CHECK(var == doctest::Approx(noisy.noise_variance).epsilon(0.01));
    CHECK(std::fabs(noise.mean()) < 5.0 * std::sqrt(noisy.noise_variance / static_cast<double>(noise.size())));

    cfg.noise_seed = 1234;
    const ProjectionSet other = simulate(m, cfg);
    CHECK(other.angles == clean.angles);
    CHECK_FALSE(other.lines == noisy.lines);

    cfg.snr = 0.0;
    CHECK_THROWS_AS(simulate(m, cfg), std::invalid_argument);
}

TEST_CASE("binary projection files round trip") {
    const PointSourceModel m = generate_model(3, 1);
    SimulationConfig cfg;
    cfg.lines = 7;
    cfg.half_bins = 5;
    cfg.snr = 1.0;
    const ProjectionSet data = simulate(m, cfg);
    const auto path = temp_path("roundtrip.bin");
    write_projection_binary(data, path);
    const ProjectionSet back = read_projection_binary(path);
    CHECK(back.lines == data.lines);
    CHECK(back.half_bins == 5);
    CHECK(back.radius_bound == data.radius_bound);
    CHECK(back.noise_variance == data.noise_variance);
    CHECK(back.angles.size() == 0);

    const auto csv = temp_path("lines.csv");
    write_projection_csv(data, csv);
    std::ifstream in(csv);
    std::string first;
    std::getline(in, first);
    CHECK(std::count(first.begin(), first.end(), ',') == 10);

    const auto bad = temp_path("bad.bin");
    std::ofstream(bad) << "garbage!garbage!";
    CHECK_THROWS_AS(read_projection_binary(bad), std::runtime_error);
    CHECK_THROWS_AS(read_projection_binary(temp_path("missing.bin")), std::runtime_error);
    std::filesystem::remove(path);
    std::filesystem::remove(csv);
    std::filesystem::remove(bad);
}
