#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "uvt/features.hpp"
#include "uvt/rng.hpp"

using namespace uvt;

namespace {

ProjectionSet random_lines(Eigen::Index lines, Eigen::Index half, double density, std::uint64_t seed) {
    Rng rng(seed);
    ProjectionSet data;
    data.half_bins = half;
    data.radius_bound = 1.0;
    data.lines = RowMatrixXd::Zero(lines, 2 * half + 1);
    for (Eigen::Index i = 0; i < data.lines.size(); ++i)
        if (rng.uniform() < density) data.lines.data()[i] = rng.normal();
    return data;
}

}  // namespace

TEST_CASE("line DFT matches the direct sum") {
    Rng rng(1);
    Eigen::VectorXd line(21);
    for (auto& v : line) v = rng.normal();
    for (double nu : {0.0, 1.0, 3.5, -7.25, 30.0}) {
        const auto got = line_dft(std::span<const double>(line.data(), 21), nu);
        CHECK(std::abs(got - oracle::line_dft(line, nu)) < 1e-12);
    }
}

TEST_CASE("line moments reproduce the brute-force mean transform and power") {
    // Sparse lines take the pairwise path, dense ones the FFT path.
    for (double density : {0.01, 0.9}) {
        const ProjectionSet data = random_lines(30, 40, density, 5);
        const LineMoments mom = line_moments(data);
        CHECK(mom.line_count == 30);
        CHECK(mom.autocorrelation.size() == 81);
        for (double nu : {0.0, 2.0, 7.3, 40.0, 63.5}) {
            std::complex<double> mean = 0.0;
            double power = 0.0;
            for (Eigen::Index l = 0; l < 30; ++l) {
                const auto s = oracle::line_dft(data.lines.row(l).transpose(), nu);
                mean += s;
                power += std::norm(s);
            }
            mean /= 30.0;
            power /= 30.0;
            CHECK(std::abs(mom.mean_transform(nu) - mean) < 1e-12 * (1.0 + std::abs(mean)));
            CHECK(mom.mean_power(nu) == doctest::Approx(power).epsilon(1e-12));
        }
    }
}

TEST_CASE("continuous angular mean of the line phase is J0") {
    // 4096 equispaced angles integrate the periodic phase to rounding error.
    const double radius = 0.83, bound = 2.0;
    for (double nu : {1.0, 10.0, 55.0, 120.0}) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < 4096; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / 4096.0;
            acc += std::polar(1.0, std::numbers::pi * nu * radius * std::cos(theta) / bound);
        }
        acc /= 4096.0;
        const auto analytic = analytic_features(PointSourceModel(Eigen::Vector2d(radius, 0.0), bound),
                                                Eigen::VectorXd::Constant(1, nu));
        CHECK(std::fabs(acc.real() - analytic.mu(0).real()) < 1e-12);
        CHECK(std::fabs(acc.imag()) < 1e-12);
    }
}

TEST_CASE("binned features stay within the quantization bound of the analytic ones") {
    Eigen::Matrix2Xd p(2, 1);
    p << 0.4, -0.5;
    const PointSourceModel m(p, 2.0);
    const Eigen::Index half = 200;
    ProjectionSet data;
    data.half_bins = half;
    data.radius_bound = 2.0;
    data.lines = RowMatrixXd::Zero(4096, 2 * half + 1);
    for (Eigen::Index l = 0; l < 4096; ++l)
        data.lines.row(l) = project_line(m, 2.0 * std::numbers::pi * l / 4096.0, half).transpose();
    const Eigen::VectorXd axis = integer_axis(0, 100);
    const auto est = estimate_features(data, 1, axis);
    const auto exact = analytic_features(m, axis);
    for (Eigen::Index i = 0; i < axis.size(); ++i) {
        // Rounding to a bin moves the phase by at most pi nu / (2M+1).
        const double bound = std::numbers::pi * axis(i) / static_cast<double>(2 * half + 1) + 1e-12;
        CHECK(std::abs(est.mu(i) - exact.mu(i)) <= bound);
        CHECK(std::fabs(est.c2(i)) < 1e-9);
    }
}

TEST_CASE("noiseless centered point: mu = 1, C = 0") {
    const PointSourceModel m(Eigen::Matrix2Xd::Zero(2, 1), 1.0);
    SimulationConfig cfg;
    cfg.lines = 50;
    cfg.half_bins = 20;
    const auto f = estimate_features(simulate(m, cfg), 1, integer_axis(0, 30));
    CHECK(f.aliased_frequencies == 10);
    for (Eigen::Index i = 0; i < f.mu.size(); ++i) {
        CHECK(std::abs(f.mu(i) - 1.0) < 1e-12);
        CHECK(std::fabs(f.c2(i)) < 1e-12);
    }
}

TEST_CASE("debiasing removes the noise floor") {
    const PointSourceModel m = generate_model(3, 4);
    SimulationConfig cfg;
    cfg.lines = 4000;
    cfg.half_bins = 50;
    cfg.seed = 2;
    const Eigen::VectorXd axis = integer_axis(0, 50);
    const auto clean = estimate_features(simulate(m, cfg), 3, axis);
    cfg.snr = 1.0;
    const ProjectionSet noisy = simulate(m, cfg);
    const auto debiased = estimate_features(noisy, 3, axis);
    const auto raw = estimate_features(noisy, 3, axis, 0.0);
    const double floor = 101.0 * noisy.noise_variance / 2.0;
    CHECK((raw.c2 - debiased.c2).array().abs().maxCoeff() == doctest::Approx(floor).epsilon(1e-12));
    // Per-line noise power is 101 sigma^2; the mean over 4000 lines has std ~ 101 sigma^2 / sqrt(4000).
    CHECK((debiased.c2 - clean.c2).cwiseAbs().mean() < 0.5 * floor);
    CHECK(debiased.noise_variance_used == noisy.noise_variance);
}

TEST_CASE("analytic features are rotation and translation aware") {
    const PointSourceModel m = generate_model(5, 21);
    const Eigen::VectorXd axis = integer_axis(0, 200);
    const auto base = analytic_features(m, axis);
    const auto rot = analytic_features(rotated(m, 2.1), axis);
    CHECK((base.mu - rot.mu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((base.c2 - rot.c2).cwiseAbs().maxCoeff() < 1e-12);
    const auto shifted = analytic_features(translated(m, Eigen::Vector2d(0.1, 0.05)), axis);
    CHECK((base.c2 - shifted.c2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((base.mu - shifted.mu).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(base.mu(0).real() == 5.0);
    CHECK(base.c2(0) == 10.0);
}

TEST_CASE("feature inputs are validated") {
    const ProjectionSet data = random_lines(2, 3, 1.0, 1);
    CHECK_THROWS_AS(estimate_features(data, 0, integer_axis(0, 3)), std::invalid_argument);
    CHECK_THROWS_AS(integer_axis(3, 2), std::invalid_argument);
}
