#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "uvt/metrics.hpp"
#include "uvt/rng.hpp"

using namespace uvt;

namespace {

DistanceDistribution random_distribution(Rng& rng, const DistanceAxis& axis, double sparsity) {
    Eigen::VectorXd w(axis.count);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform() < sparsity ? 0.0 : rng.uniform();
    w(0) += 1e-3;
    return DistanceDistribution::normalized(axis, w);
}

}  // namespace

TEST_CASE("EMD equals the greedy transport cost") {
    Rng rng(5);
    const DistanceAxis axis = DistanceAxis::from_zero(2.0, 40);
    for (int t = 0; t < 100; ++t) {
        const auto p = random_distribution(rng, axis, 0.7);
        const auto q = random_distribution(rng, axis, 0.7);
        CHECK(emd_1d(p, q) == doctest::Approx(oracle::emd_greedy(p.mass, q.mass, axis.width)).epsilon(1e-12));
    }
}

TEST_CASE("EMD of two point masses is their distance") {
    const DistanceAxis axis = DistanceAxis::from_zero(1.0, 11);
    const auto p = true_distance_distribution(std::vector<double>{0.2}, axis);
    const auto q = true_distance_distribution(std::vector<double>{0.7}, axis);
    CHECK(emd_1d(p, q) == doctest::Approx(0.5));
    const auto other = DistanceAxis::from_zero(1.0, 12);
    CHECK_THROWS_AS(emd_1d(p, true_distance_distribution(std::vector<double>{0.2}, other)), std::invalid_argument);
}

TEST_CASE("success rate counts trials at or under the threshold") {
    const std::vector<double> emds{0.05, 0.1, 0.2, 0.0};
    CHECK(success_rate(emds, 0.1) == 0.75);
    CHECK_THROWS_AS(success_rate(std::vector<double>{}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(success_rate(emds, 0.0), std::invalid_argument);
}

TEST_CASE("Hungarian assignment is optimal against all permutations") {
    Rng rng(17);
    for (int n = 1; n <= 6; ++n) {
        for (int t = 0; t < 20; ++t) {
            Eigen::MatrixXd cost(n, n);
            for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = std::floor(rng.uniform(0.0, 10.0));
            const auto assign = min_cost_assignment(cost);
            double got = 0.0;
            for (int i = 0; i < n; ++i) got += cost(i, assign[static_cast<std::size_t>(i)]);
            std::vector<int> perm(static_cast<std::size_t>(n));
            std::iota(perm.begin(), perm.end(), 0);
            double best = INFINITY;
            do {
                double c = 0.0;
                for (int i = 0; i < n; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
                best = std::min(best, c);
            } while (std::next_permutation(perm.begin(), perm.end()));
            CHECK(got == best);
        }
    }
    CHECK_THROWS_AS(min_cost_assignment(Eigen::MatrixXd(2, 3)), std::invalid_argument);
}

TEST_CASE("max matched error") {
    CHECK(max_matched_error(Eigen::Vector3d(0.9, 0.1, 0.5), Eigen::Vector3d(0.1, 0.52, 1.0)) ==
          doctest::Approx(0.1));
    CHECK(std::isinf(max_matched_error(Eigen::Vector2d(0.1, 0.2), Eigen::Vector3d(0.1, 0.2, 0.3))));
}
