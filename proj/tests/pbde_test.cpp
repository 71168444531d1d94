#include <doctest.h>

#include <cmath>
#include <numbers>

#include "uvt/metrics.hpp"
#include "uvt/pbde.hpp"
#include "uvt/rng.hpp"

using namespace uvt;

namespace {

Eigen::VectorXd cosine_sum(const Eigen::VectorXd& freq, const Eigen::VectorXd& amp, const Eigen::VectorXd& phase,
                           Eigen::Index n, double nu_0 = 0.0) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < freq.size(); ++j)
            s(i) += amp(j) * std::cos(freq(j) * (nu_0 + static_cast<double>(i)) + phase(j));
    return s;
}

PointSourceModel on_circles(const std::vector<double>& radii, const std::vector<double>& angles) {
    Eigen::Matrix2Xd p(2, static_cast<Eigen::Index>(radii.size()));
    for (std::size_t k = 0; k < radii.size(); ++k)
        p.col(static_cast<Eigen::Index>(k)) = radii[k] * Eigen::Vector2d(std::cos(angles[k]), std::sin(angles[k]));
    return {p, default_radius_bound(1.0)};
}

}  // namespace

TEST_CASE("annihilating filter recovers exact cosine frequencies") {
    const Eigen::Vector3d freq(0.3, 1.1, 2.4), amp(1.0, 0.5, 2.0), phase(0.2, -1.0, 0.7);
    const PronyEstimate est = prony_frequencies(cosine_sum(freq, amp, phase, 40), 3);
    REQUIRE(est.frequencies.size() == 3);
    CHECK((est.frequencies - freq).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(est.missing == 0);
    CHECK(est.residual < 1e-8);
    CHECK(est.filter_roots.size() == 6);
}

TEST_CASE("frequency recovery under noise degrades gracefully") {
    Rng rng(3);
    const Eigen::Vector2d freq(0.7, 1.9), amp(1.0, 1.0), phase(0.0, 0.4);
    Eigen::VectorXd s = cosine_sum(freq, amp, phase, 100);
    for (auto& v : s) v += 0.05 * rng.normal();
    PronyOptions opts;
    opts.denoise_iterations = 20;
    const PronyEstimate est = prony_frequencies(s, 2, opts);
    REQUIRE(est.frequencies.size() == 2);
    CHECK((est.frequencies - freq).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("Cadzow keeps an exact low-rank sequence") {
    const Eigen::Vector2d freq(0.5, 1.5), amp(1.0, 0.3), phase(0.1, 0.2);
    const Eigen::VectorXd s = cosine_sum(freq, amp, phase, 31);
    CHECK((cadzow_denoise(s, 4, 5) - s).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(cadzow_denoise(s, 40, 5) == s);
}

TEST_CASE("least-squares amplitudes and apportionment") {
    const Eigen::Vector2d freq(0.4, 1.3), amp(2.0, 0.5), phase(1.0, -0.5);
    const Eigen::VectorXd s = cosine_sum(freq, amp, phase, 50, 10.0);
    CHECK(fit_amplitudes(s, freq, 10.0).isApprox(amp, 1e-10));

    CHECK(apportion(Eigen::Vector3d(1, 2, 1), 4) == Eigen::Vector3i(1, 2, 1));
    CHECK(apportion(Eigen::Vector3d(0.9, 2.2, 1.0), 4).sum() == 4);
    CHECK(apportion(Eigen::Vector2d(0, 0), 1).sum() == 1);
    CHECK(apportion(Eigen::VectorXd(), 3).size() == 0);
}

TEST_CASE("prony argument checks") {
    CHECK_THROWS_AS(prony_frequencies(Eigen::VectorXd::Ones(10), 0), std::invalid_argument);
    CHECK_THROWS_AS(prony_frequencies(Eigen::VectorXd::Ones(4), 2), std::invalid_argument);
}

TEST_CASE("radial distances from exact features") {
    const PointSourceModel m = on_circles({0.35, 0.8, 1.25}, {0.1, 2.0, 4.0});
    const auto feats = analytic_features(m, integer_axis(0, 120));
    const PronyEstimate est = estimate_radial_distances(feats, 3, m.radius_bound());
    CHECK(est.nu_min == 10);
    CHECK(est.nu_max == 120);
    CHECK(max_matched_error(est.distances, radial_distances(m)) < 0.01 * m.radius_bound());
}

TEST_CASE("repeated radii are resolved by amplitude") {
    const PointSourceModel m = on_circles({0.5, 1.1, 1.1}, {0.0, 1.0, 3.0});
    const auto feats = analytic_features(m, integer_axis(0, 120));
    const PronyEstimate est = estimate_radial_distances(feats, 3, m.radius_bound());
    REQUIRE(est.distances.size() == 3);
    CHECK(max_matched_error(est.distances, radial_distances(m)) < 0.02 * m.radius_bound());
    CHECK(est.multiplicities.sum() == 3);

    PbdeOptions raw;
    raw.resolve_multiplicity = false;
    const PronyEstimate plain = estimate_radial_distances(feats, 3, m.radius_bound(), raw);
    CHECK(plain.multiplicities.size() == 0);
}

TEST_CASE("pairwise distances from exact features") {
    const PointSourceModel m = on_circles({0.2, 0.9, 0.6}, {0.0, 1.7, 3.9});
    const auto feats = analytic_features(m, integer_axis(0, 120));
    const PronyEstimate est = estimate_pairwise_distances(feats, 3, m.radius_bound());
    CHECK(max_matched_error(est.distances, unique_pairwise_distances(m)) < 0.02 * m.radius_bound());
    CHECK(estimate_pairwise_distances(feats, 1, m.radius_bound()).distances.size() == 0);
}

TEST_CASE("PBDE window validation") {
    const PointSourceModel m = on_circles({0.5}, {0.0});
    const auto short_axis = analytic_features(m, integer_axis(0, 20));
    CHECK_THROWS_AS(estimate_radial_distances(short_axis, 5, m.radius_bound()), std::invalid_argument);
    const auto offset_axis = analytic_features(m, integer_axis(20, 100));
    CHECK_THROWS_AS(estimate_radial_distances(offset_axis, 2, m.radius_bound()), std::invalid_argument);
    CHECK_THROWS_AS(estimate_radial_distances(short_axis, 0, m.radius_bound()), std::invalid_argument);
}
