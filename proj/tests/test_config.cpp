#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "jamloc/config.hpp"

using namespace jamloc;
using nlohmann::json;

TEST_CASE("empty config keeps defaults") {
  const RunConfig c = parse_run_config(json::object());
  CHECK(c.scenario.n_receivers == 10);
  CHECK(c.estimator.zeta_init == 1e8);
}

TEST_CASE("config fields are applied") {
  const json j = json::parse(R"({
    "scenario": {"n_receivers": 7, "geometry": "road_line", "agc_noise_var": 0.5, "rng_seed": 11},
    "estimator": {"alpha_grid": [2.0, 2.5], "zeta_init": 1e9, "direction": "steepest",
                  "alpha_continuation": false, "max_iters": 50,
                  "alpha_search_max_iters": 40}
  })");
  const RunConfig c = parse_run_config(j);
  CHECK(c.scenario.n_receivers == 7);
  CHECK(c.scenario.geometry == Geometry::RoadLine);
  CHECK(c.scenario.agc_noise_var == 0.5);
  CHECK(c.scenario.rng_seed == 11);
  CHECK(c.estimator.alpha_grid == std::vector<double>{2.0, 2.5});
  CHECK(c.estimator.zeta_init == 1e9);
  CHECK(c.estimator.direction == DescentDirection::Steepest);
  CHECK_FALSE(c.estimator.alpha_continuation);
  CHECK(c.estimator.max_iters == 50);
  CHECK(c.estimator.alpha_search_max_iters == 40);
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"scenaro": {}})")), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"scenario": {"n_recievers": 4}})")), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"scenario": {"geometry": "circle"}})")), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"scenario": {"n_receivers": "ten"}})")), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"scenario": {"n_receivers": 2}})")), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"estimator": {"armijo_c": 2}})")), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"estimator": {"direction": "newton"}})")), std::invalid_argument);
}

TEST_CASE("configs round-trip through json") {
  RunConfig c;
  c.scenario.geometry = Geometry::RoadLine;
  c.scenario.speed = 0.5;
  c.estimator.direction = DescentDirection::Steepest;
  c.estimator.alpha_grid = {1.9, 2.0};
  const json j = {{"scenario", to_json(c.scenario)}, {"estimator", to_json(c.estimator)}};
  const RunConfig back = parse_run_config(j);
  CHECK(back.scenario.geometry == Geometry::RoadLine);
  CHECK(back.scenario.speed == 0.5);
  CHECK(back.estimator.direction == DescentDirection::Steepest);
  CHECK(back.estimator.alpha_grid == c.estimator.alpha_grid);
  CHECK(to_json(back.estimator) == to_json(c.estimator));
  CHECK(to_json(back.scenario) == to_json(c.scenario));
}

TEST_CASE("config files") {
  const auto path = std::filesystem::temp_directory_path() / "jamloc_config_test.json";
  {
    std::ofstream out(path);
    out << "{ // comments allowed\n \"scenario\": {\"speed\": 2.5} }";
  }
  CHECK(load_run_config(path).scenario.speed == 2.5);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(path), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_run_config(path), std::runtime_error);
}

TEST_CASE("estimate json") {
  PositionEstimate est;
  est.p0_hat = Vec3d(1, 2, 3);
  est.selected = {0, 2};
  est.nuisance.alpha = Eigen::Vector2d(2.0, 2.1);
  est.nuisance.zeta = Eigen::Vector2d(1e8, 2e8);
  est.nuisance.sigma2 = Eigen::Vector2d(0.1, 0.2);
  est.nll = 12.5;
  est.iterations = 9;
  est.converged = true;
  est.receiver_fits.push_back({0, true, 2.0, 1e8, 3.0});
  est.receiver_fits.push_back({1, false, std::nan(""), std::nan(""), std::nan("")});
  const json j = estimate_to_json(est);
  CHECK(j["method"] == "proposed");
  CHECK(j["position"] == json::array({1.0, 2.0, 3.0}));
  CHECK(j["subset"] == json::array({0, 2}));
  CHECK(j["receivers"][1]["alpha"] == 2.1);
  CHECK(j["receivers"][1]["sigma2"] == 0.2);
  CHECK(j["alpha_search"][1]["alpha_hat"].is_null());
  CHECK(j["iterations"] == 9);
  CHECK(j["converged"] == true);

  LsResult failed;
  failed.failure = LsFailure::RankDeficient;
  const json f = estimate_to_json(failed);
  CHECK(f["position"].is_null());
  CHECK(f["failure"] == "rank_deficient");
  CHECK(estimate_to_json(Vec3d(0, 0, 1), "centroid")["method"] == "centroid");
}
