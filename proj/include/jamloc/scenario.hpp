#pragma once

#include <cstdint>
#include <vector>

#include "jamloc/types.hpp"

namespace jamloc {

enum class Geometry { UniformCube, RoadLine };

struct ScenarioConfig {
  int n_receivers = 10;
  double cube_side = 2000.0;  // m
  Geometry geometry = Geometry::UniformCube;
  double road_offset_east = 500.0;  // m, road_line only
  double speed = 1.5;               // m/s
  double duration = 3000.0;         // s; jammer switches on at duration / 2
  int samples_per_half = 200;
  double jammer_power = 0.01;  // W
  double alpha_base = 2.0;
  double alpha_halfnormal_scale = 0.1;
  double agc_noise_var = 0.1;   // dB^2
  double cnir_noise_var = 1.0;  // dB^2, per satellite
  int n_satellites = 8;
  std::uint64_t rng_seed = 1;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  double jammer_on_time() const { return 0.5 * duration; }
  // 2 * samples_per_half instants on a uniform grid over [0, duration).
  Eigen::VectorXd sample_times() const;
};

struct Trajectory {
  Vec3d start = Vec3d::Zero();
  Vec3d heading = Vec3d::UnitX();  // unit norm
  double speed = 0.0;
};

// start + speed * t * heading, for t >= 0.
inline Vec3d position_at(const Trajectory& traj, double t) {
  return traj.start + (traj.speed * t) * traj.heading;
}

struct ScenarioTruth {
  Vec3d jammer_pos = Vec3d::Zero();
  Eigen::VectorXd zeta;   // J0 * kappa / N_G per receiver (linear)
  Eigen::VectorXd alpha;  // path-loss exponents
  std::vector<Trajectory> trajectories;
  Eigen::VectorXd quiet_agc_db;
  Eigen::VectorXd quiet_cnir_db;
  Eigen::VectorXd sample_times;
  double agc_noise_var = 0.0;
  double cnir_noise_var = 0.0;
  int n_satellites = 1;

  Index n_receivers() const { return static_cast<Index>(trajectories.size()); }
};

// Free-space power ratio J0 * kappa / (k T0 B) at GPS L1 with a 2 MHz front end.
double free_space_zeta(double jammer_power_w);

// Receivers are never placed closer than this to the jammer at any sample time.
inline constexpr double kMinJammerDistance = 1.0;  // m

ScenarioTruth generate_scenario(const ScenarioConfig& config);

}  // namespace jamloc
