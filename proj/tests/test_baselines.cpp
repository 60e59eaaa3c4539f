#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jamloc/baselines.hpp"
#include "jamloc/scenario.hpp"
#include "support.hpp"

using namespace jamloc;
using support::make_measurements;
using support::stationary;
using support::uniform_emitter;

TEST_CASE("centroid of stationary receivers") {
  const auto m = make_measurements(uniform_emitter(Vec3d(1, 5, 0), 2, 1e8, 2.0),
                                   {stationary(Vec3d(0, 0, 0), 4), stationary(Vec3d(2, 0, 0), 4)});
  CHECK(centroid_estimate(m).isApprox(Vec3d(1, 0, 0)));
  CHECK(centroid_estimate(m, -5.0, CentroidAnchor::JammedMean).isApprox(Vec3d(1, 0, 0)));
}

TEST_CASE("centroid ignores receivers that are not jammed") {
  const auto m = make_measurements(
      uniform_emitter(Vec3d::Zero(), 3, 3e8, 2.0),
      {stationary(Vec3d(100, 0, 0), 4), stationary(Vec3d(0, 300, 0), 4), stationary(Vec3d(1e7, 0, 0), 4)});
  REQUIRE(jammed_receivers(m) == IndexSet{0, 1});
  CHECK(centroid_estimate(m).isApprox(Vec3d(50, 150, 0)));
}

TEST_CASE("centroid anchors of a moving receiver") {
  const auto m = make_measurements(uniform_emitter(Vec3d::Zero(), 1, 3e8, 2.0),
                                   {support::linear_track(Vec3d(100, 0, 0), Vec3d(1, 0, 0), 11, 1.0)});
  CHECK(centroid_estimate(m).isApprox(Vec3d(100, 0, 0)));
  CHECK(centroid_estimate(m, -5.0, CentroidAnchor::JammedMean).isApprox(Vec3d(105, 0, 0)));
}

TEST_CASE("centroid without detections is unavailable") {
  const auto m = make_measurements(uniform_emitter(Vec3d::Zero(), 1, 0.0, 2.0), {stationary(Vec3d(100, 0, 0), 4)});
  CHECK_THROWS_AS(centroid_estimate(m), EstimationUnavailable);
}

TEST_CASE("centroid depends on detection only") {
  ScenarioConfig c;
  c.rng_seed = 12;
  const ScenarioTruth t = generate_scenario(c);
  const MeasurementSet a = synthesize(t, c, MeasurementKind::Agc);
  MeasurementSet b = a;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> w(0.0, 0.05);
  for (Index i = 0; i < b.n_receivers(); ++i) {
    // Perturb everything except each receiver's deepest sample.
    Index deepest;
    b.values.col(i).minCoeff(&deepest);
    for (Index n = 0; n < b.n_samples(); ++n)
      if (n != deepest) b.values(n, i) = std::max(b.values(n, i) + w(rng), b.values(deepest, i));
  }
  REQUIRE(jammed_receivers(a) == jammed_receivers(b));
  CHECK(centroid_estimate(a) == centroid_estimate(b));
}

TEST_CASE("road centroid is always at least 500 m off horizontally") {
  ScenarioConfig c;
  c.geometry = Geometry::RoadLine;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    c.rng_seed = seed;
    const MeasurementSet m = synthesize(generate_scenario(c), c, MeasurementKind::Agc);
    CHECK(centroid_estimate(m).head<2>().norm() >= 500.0);
  }
}

TEST_CASE("range inversion examples") {
  CHECK(*ls_distance_from_drop(10.0 * std::log10(2.0), 100.0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(*ls_distance_from_drop(10.0 * std::log10(101.0), 100.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(ls_distance_from_drop(0.0, 100.0));
  CHECK_FALSE(ls_distance_from_drop(-1.0, 100.0));
  CHECK(*ls_distance_from_drop(1e-12, 100.0) > 1e6);
}

TEST_CASE("range inversion round-trips the free-space model") {
  for (double zeta : {1e2, 1e6, free_space_zeta(0.01)}) {
    for (double d = 1.0; d < 1e4; d *= 1.37) {
      const long double drop = -support::oracle_level(0.0L, zeta, 2.0L, d);
      const auto back = ls_distance_from_drop(static_cast<double>(drop), zeta);
      REQUIRE(back);
      CHECK(std::abs(*back - d) / d < 1e-9);
    }
  }
}

TEST_CASE("multilateration recovers the jammer from exact ranges") {
  const Vec3d p0(37.5, -12.25, 8.0);
  Positions3d anchors(3, 4);
  anchors << 0, 300, -150, 50, 0, 40, 260, -200, 0, -30, 90, 180;
  std::vector<double> ranges;
  for (Index i = 0; i < 4; ++i) ranges.push_back((anchors.col(i) - p0).norm());
  const LsResult r = multilaterate(anchors, ranges);
  REQUIRE(r.ok());
  CHECK((*r.position - p0).norm() < 1e-6);
  CHECK(r.receivers_used == 4);
}

TEST_CASE("ls estimate from four stationary receivers") {
  const Vec3d p0(-20, 35, 12);
  std::vector<Positions3d> tracks{stationary(Vec3d(150, 0, 0), 10), stationary(Vec3d(-100, 180, 20), 10),
                                  stationary(Vec3d(0, -120, 90), 10), stationary(Vec3d(60, 70, -160), 10)};
  const double zeta = free_space_zeta(0.01);
  const auto m = make_measurements(uniform_emitter(p0, 4, zeta, 2.0), tracks);
  const std::vector<double> cal(4, zeta);
  const LsResult r = ls_estimate(m, cal);
  REQUIRE(r.ok());
  CHECK((*r.position - p0).norm() < 1e-6);
}

TEST_CASE("ls failures") {
  const double zeta = free_space_zeta(0.01);
  SUBCASE("three receivers are too few") {
    std::vector<Positions3d> tracks{stationary(Vec3d(150, 0, 0), 4), stationary(Vec3d(0, 180, 0), 4),
                                    stationary(Vec3d(0, 0, 90), 4)};
    const auto m = make_measurements(uniform_emitter(Vec3d::Zero(), 3, zeta, 2.0), tracks);
    const LsResult r = ls_estimate(m, std::vector<double>(3, zeta));
    CHECK_FALSE(r.ok());
    CHECK(r.failure == LsFailure::TooFewReceivers);
  }
  SUBCASE("collinear receivers leave a mirror ambiguity") {
    std::vector<Positions3d> tracks;
    for (double y : {-300.0, -100.0, 50.0, 200.0, 400.0}) tracks.push_back(stationary(Vec3d(500, y, 0), 4));
    const auto m = make_measurements(uniform_emitter(Vec3d::Zero(), 5, zeta, 2.0), tracks);
    const LsResult r = ls_estimate(m, std::vector<double>(5, zeta));
    CHECK(r.failure == LsFailure::RankDeficient);
  }
  SUBCASE("calibration vector must match") {
    std::vector<Positions3d> tracks{stationary(Vec3d(150, 0, 0), 4)};
    const auto m = make_measurements(uniform_emitter(Vec3d::Zero(), 1, zeta, 2.0), tracks);
    CHECK_THROWS_AS(ls_estimate(m, std::vector<double>(2, zeta)), std::invalid_argument);
  }
  CHECK(to_string(LsFailure::RankDeficient) == "rank_deficient");
}

TEST_CASE("ls always fails on the road") {
  ScenarioConfig c;
  c.geometry = Geometry::RoadLine;
  c.n_receivers = 30;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.rng_seed = seed;
    const ScenarioTruth t = generate_scenario(c);
    const MeasurementSet m = synthesize(t, c, MeasurementKind::Agc);
    const std::vector<double> cal(t.zeta.data(), t.zeta.data() + t.zeta.size());
    CHECK_FALSE(ls_estimate(m, cal).ok());
  }
}
