#include "jamloc/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

namespace jamloc {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& known, std::string_view section) {
  if (!j.is_object()) throw std::invalid_argument(std::string(section) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.contains(key))
      throw std::invalid_argument("unknown key '" + key + "' in " + std::string(section));
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string_view geometry_name(Geometry g) {
  return g == Geometry::RoadLine ? "road_line" : "uniform_cube";
}

}  // namespace

void apply_json(const json& j, ScenarioConfig& c) {
  check_keys(j,
             {"n_receivers", "cube_side", "geometry", "road_offset_east", "speed", "duration",
              "samples_per_half", "jammer_power", "alpha_base", "alpha_halfnormal_scale",
              "agc_noise_var", "cnir_noise_var", "n_satellites", "rng_seed"},
             "scenario");
  read(j, "n_receivers", c.n_receivers);
  read(j, "cube_side", c.cube_side);
  if (j.contains("geometry")) {
    const std::string g = j.at("geometry").get<std::string>();
    if (g == "uniform_cube") c.geometry = Geometry::UniformCube;
    else if (g == "road_line") c.geometry = Geometry::RoadLine;
    else throw std::invalid_argument("geometry must be uniform_cube or road_line, got " + g);
  }
  read(j, "road_offset_east", c.road_offset_east);
  read(j, "speed", c.speed);
  read(j, "duration", c.duration);
  read(j, "samples_per_half", c.samples_per_half);
  read(j, "jammer_power", c.jammer_power);
  read(j, "alpha_base", c.alpha_base);
  read(j, "alpha_halfnormal_scale", c.alpha_halfnormal_scale);
  read(j, "agc_noise_var", c.agc_noise_var);
  read(j, "cnir_noise_var", c.cnir_noise_var);
  read(j, "n_satellites", c.n_satellites);
  read(j, "rng_seed", c.rng_seed);
}

void apply_json(const json& j, EstimatorConfig& c) {
  check_keys(j,
             {"direction", "alpha_grid", "alpha_subset_threshold", "zeta_init",
              "alpha_continuation", "max_iters", "alpha_search_max_iters", "grad_tolerance",
              "nll_tolerance", "armijo_c", "armijo_shrink", "step_init", "min_step", "damping_init",
              "sigma2_floor", "position_scale", "detection_threshold_db", "collinear_offset",
              "min_explained_drop_db"},
             "estimator");
  if (j.contains("direction")) {
    const std::string d = j.at("direction").get<std::string>();
    if (d == "gauss_newton") c.direction = DescentDirection::GaussNewton;
    else if (d == "steepest") c.direction = DescentDirection::Steepest;
    else throw std::invalid_argument("direction must be gauss_newton or steepest, got " + d);
  }
  read(j, "alpha_grid", c.alpha_grid);
  read(j, "alpha_subset_threshold", c.alpha_subset_threshold);
  read(j, "zeta_init", c.zeta_init);
  read(j, "alpha_continuation", c.alpha_continuation);
  read(j, "max_iters", c.max_iters);
  read(j, "alpha_search_max_iters", c.alpha_search_max_iters);
  read(j, "grad_tolerance", c.grad_tolerance);
  read(j, "nll_tolerance", c.nll_tolerance);
  read(j, "armijo_c", c.armijo_c);
  read(j, "armijo_shrink", c.armijo_shrink);
  read(j, "step_init", c.step_init);
  read(j, "min_step", c.min_step);
  read(j, "damping_init", c.damping_init);
  read(j, "sigma2_floor", c.sigma2_floor);
  read(j, "position_scale", c.position_scale);
  read(j, "detection_threshold_db", c.detection_threshold_db);
  read(j, "collinear_offset", c.collinear_offset);
  read(j, "min_explained_drop_db", c.min_explained_drop_db);
}

RunConfig parse_run_config(const json& j, RunConfig defaults) {
  check_keys(j, {"scenario", "estimator"}, "config");
  if (j.contains("scenario")) apply_json(j.at("scenario"), defaults.scenario);
  if (j.contains("estimator")) apply_json(j.at("estimator"), defaults.estimator);
  defaults.scenario.validate();
  defaults.estimator.validate();
  return defaults;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig defaults) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_run_config(j, std::move(defaults));
}

json to_json(const ScenarioConfig& c) {
  return {{"n_receivers", c.n_receivers},
          {"cube_side", c.cube_side},
          {"geometry", geometry_name(c.geometry)},
          {"road_offset_east", c.road_offset_east},
          {"speed", c.speed},
          {"duration", c.duration},
          {"samples_per_half", c.samples_per_half},
          {"jammer_power", c.jammer_power},
          {"alpha_base", c.alpha_base},
          {"alpha_halfnormal_scale", c.alpha_halfnormal_scale},
          {"agc_noise_var", c.agc_noise_var},
          {"cnir_noise_var", c.cnir_noise_var},
          {"n_satellites", c.n_satellites},
          {"rng_seed", c.rng_seed}};
}

json to_json(const EstimatorConfig& c) {
  return {{"direction", c.direction == DescentDirection::Steepest ? "steepest" : "gauss_newton"},
          {"alpha_grid", c.alpha_grid},
          {"alpha_subset_threshold", c.alpha_subset_threshold},
          {"zeta_init", c.zeta_init},
          {"alpha_continuation", c.alpha_continuation},
          {"max_iters", c.max_iters},
          {"alpha_search_max_iters", c.alpha_search_max_iters},
          {"grad_tolerance", c.grad_tolerance},
          {"nll_tolerance", c.nll_tolerance},
          {"armijo_c", c.armijo_c},
          {"armijo_shrink", c.armijo_shrink},
          {"step_init", c.step_init},
          {"min_step", c.min_step},
          {"damping_init", c.damping_init},
          {"sigma2_floor", c.sigma2_floor},
          {"position_scale", c.position_scale},
          {"detection_threshold_db", c.detection_threshold_db},
          {"collinear_offset", c.collinear_offset},
          {"min_explained_drop_db", c.min_explained_drop_db}};
}

namespace {

json position_json(const Vec3d& p) { return json::array({p.x(), p.y(), p.z()}); }

// nlohmann serialises NaN as null, which is what we want for missing values.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json estimate_to_json(const PositionEstimate& est, std::string_view method) {
  json receivers = json::array();
  for (std::size_t j = 0; j < est.selected.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    receivers.push_back({{"id", est.selected[j]},
                         {"alpha", number(est.nuisance.alpha[jj])},
                         {"zeta", number(est.nuisance.zeta[jj])},
                         {"sigma2", number(est.nuisance.sigma2[jj])}});
  }
  json fits = json::array();
  for (const auto& f : est.receiver_fits)
    fits.push_back({{"id", f.receiver},
                    {"usable", f.usable},
                    {"alpha_hat", number(f.alpha_hat)},
                    {"zeta_hat", number(f.zeta_hat)},
                    {"nll", number(f.nll)}});
  return {{"method", method},
          {"position", position_json(est.p0_hat)},
          {"subset", est.selected},
          {"receivers", receivers},
          {"alpha_search", fits},
          {"nll", number(est.nll)},
          {"iterations", est.iterations},
          {"converged", est.converged}};
}

json estimate_to_json(const Vec3d& position, std::string_view method) {
  return {{"method", method}, {"position", position_json(position)}, {"converged", true}};
}

json estimate_to_json(const LsResult& result, std::string_view method) {
  json j = {{"method", method},
            {"position", result.position ? position_json(*result.position) : json(nullptr)},
            {"receivers_used", result.receivers_used},
            {"converged", result.ok()}};
  if (!result.ok()) j["failure"] = to_string(result.failure);
  return j;
}

}  // namespace jamloc
