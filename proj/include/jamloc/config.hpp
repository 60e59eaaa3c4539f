#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "jamloc/baselines.hpp"
#include "jamloc/estimator.hpp"
#include "jamloc/scenario.hpp"

namespace jamloc {

// JSON config file:
//   { "scenario": { "n_receivers": 10, "geometry": "road_line", ... },
//     "estimator": { "zeta_init": 1e8, "alpha_grid": [2.0, 2.1], ... } }
// Both sections are optional; unknown keys are rejected.
struct RunConfig {
  ScenarioConfig scenario;
  EstimatorConfig estimator;
};

void apply_json(const nlohmann::json& j, ScenarioConfig& config);
void apply_json(const nlohmann::json& j, EstimatorConfig& config);
RunConfig parse_run_config(const nlohmann::json& j, RunConfig defaults = {});
// Throws std::runtime_error on I/O or parse errors, std::invalid_argument on bad values.
RunConfig load_run_config(const std::filesystem::path& path, RunConfig defaults = {});

nlohmann::json to_json(const ScenarioConfig& config);
nlohmann::json to_json(const EstimatorConfig& config);

// Estimate output, tagged with the method name.
nlohmann::json estimate_to_json(const PositionEstimate& est, std::string_view method = "proposed");
nlohmann::json estimate_to_json(const Vec3d& position, std::string_view method);
nlohmann::json estimate_to_json(const LsResult& result, std::string_view method = "ls");

}  // namespace jamloc
