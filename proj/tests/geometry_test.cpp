#include <doctest.h>

#include <cmath>
#include <numbers>

#include "uvt/geometry.hpp"

using namespace uvt;

TEST_CASE("generated models stay inside the square and are seeded") {
    const PointSourceModel a = generate_model(10, 42);
    const PointSourceModel b = generate_model(10, 42);
    const PointSourceModel c = generate_model(10, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.size() == 10);
    CHECK(a.points().cwiseAbs().maxCoeff() <= 1.0);
    CHECK(a.radius_bound() == doctest::Approx(2.0 * std::sqrt(2.0)));
    CHECK(a.within_radius_bound());
    CHECK((a.weights().array() == 1.0).all());
    CHECK_THROWS_AS(generate_model(0, 1), std::invalid_argument);
}

TEST_CASE("model constructor validation") {
    Eigen::Matrix2Xd p(2, 2);
    p << 0, 1, 0, 1;
    CHECK_THROWS_AS(PointSourceModel(p, Eigen::Vector3d::Ones(), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PointSourceModel(p, Eigen::Vector2d(1.0, -1.0), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PointSourceModel(p, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(PointSourceModel(Eigen::Matrix2Xd(2, 0), 1.0), std::invalid_argument);
    p(0, 0) = NAN;
    CHECK_THROWS_AS(PointSourceModel(p, 1.0), std::invalid_argument);
}

TEST_CASE("radial and pairwise distances of a 3-4-5 triangle") {
    Eigen::Matrix2Xd p(2, 3);
    p << 0, 3, 0,
         0, 0, 4;
    const PointSourceModel m(p, 10.0);
    CHECK(radial_distances(m).isApprox(Eigen::Vector3d(0, 3, 4)));
    const Eigen::MatrixXd d = pairwise_distances(m);
    CHECK(d(0, 1) == 3.0);
    CHECK(d(2, 1) == 5.0);
    CHECK(d.diagonal().isZero());
    CHECK(unique_pairwise_distances(m).isApprox(Eigen::Vector3d(3, 4, 5)));
    CHECK_FALSE(PointSourceModel(p, 5.0).within_radius_bound());
}

TEST_CASE("rotation keeps distances, translation keeps pair distances") {
    const PointSourceModel m = generate_model(6, 9);
    const PointSourceModel r = rotated(m, 0.7);
    CHECK(radial_distances(r).isApprox(radial_distances(m), 1e-14));
    CHECK(pairwise_distances(r).isApprox(pairwise_distances(m), 1e-14));
    const PointSourceModel t = translated(m, Eigen::Vector2d(0.3, -0.2));
    CHECK(pairwise_distances(t).isApprox(pairwise_distances(m), 1e-14));
    const PointSourceModel c = recentered(m);
    CHECK(c.points().rowwise().sum().norm() < 1e-14);
}

TEST_CASE("distance axis binning") {
    const DistanceAxis axis = DistanceAxis::from_zero(1.0, 11);
    CHECK(axis.width == doctest::Approx(0.1));
    CHECK(axis.bin_of(0.0) == 0);
    CHECK(axis.bin_of(0.049) == 0);
    CHECK(axis.bin_of(0.051) == 1);
    CHECK(axis.bin_of(1.0) == 10);
    CHECK(axis.bin_of(1.06) == -1);
    CHECK(axis.bin_of(-0.06) == -1);
    CHECK(axis.bin_of(NAN) == -1);
    CHECK(axis.centers()(10) == doctest::Approx(1.0));
    CHECK_THROWS_AS(DistanceAxis::from_zero(1.0, 1), std::invalid_argument);
}

TEST_CASE("true distance histograms") {
    const DistanceAxis axis = DistanceAxis::from_zero(1.0, 11);
    const std::vector<double> values{0.1, 0.1, 0.52, 0.98};
    const DistanceDistribution h = true_distance_distribution(values, axis);
    CHECK(h.mass.sum() == doctest::Approx(1.0));
    CHECK(h.mass(1) == 0.5);
    CHECK(h.mass(5) == 0.25);
    CHECK(h.mass(10) == 0.25);
    CHECK_THROWS_AS(true_distance_distribution(std::vector<double>{2.0}, axis), std::out_of_range);
    CHECK_THROWS_AS(true_distance_distribution(std::vector<double>{}, axis), std::invalid_argument);
    CHECK_THROWS_AS(DistanceDistribution::normalized(axis, Eigen::VectorXd::Zero(11)), std::domain_error);
    CHECK_THROWS_AS(DistanceDistribution::normalized(axis, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST_CASE("model JSON round trip") {
    Eigen::Matrix2Xd p(2, 2);
    p << 0.125, -1.0 / 3.0, std::numbers::pi / 7, 0.0;
    const PointSourceModel m(p, Eigen::Vector2d(1.0, 2.5), 2.0);
    CHECK(model_from_json(model_to_json(m)) == m);
    CHECK_THROWS(model_from_json("{\"points\": [[0, 0]]}"));
    CHECK_THROWS(model_from_json("not json"));
}
