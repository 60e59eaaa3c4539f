#include "jamloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace jamloc {

namespace {

constexpr double kSpeedOfLight = 299792458.0;  // m/s
constexpr double kL1Frequency = 1575.42e6;     // Hz
constexpr double kBoltzmann = 1.380649e-23;    // J/K
constexpr double kNoiseTemperature = 290.0;    // K
constexpr double kFrontEndBandwidth = 2e6;     // Hz

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid scenario config: " + what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

Vec3d random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vec3d v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

double min_distance(const Trajectory& traj, const Vec3d& jammer, const Eigen::VectorXd& times) {
  double best = std::numeric_limits<double>::infinity();
  for (double t : times) best = std::min(best, (position_at(traj, t) - jammer).norm());
  return best;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(n_receivers >= 3, "n_receivers must be at least 3");
  require(finite_positive(cube_side), "cube_side must be positive");
  require(std::isfinite(road_offset_east), "road_offset_east must be finite");
  require(std::isfinite(speed) && speed >= 0.0, "speed must be non-negative");
  require(finite_positive(duration), "duration must be positive");
  require(samples_per_half >= 1, "samples_per_half must be at least 1");
  require(std::isfinite(jammer_power) && jammer_power >= 0.0, "jammer_power must be non-negative");
  require(std::isfinite(alpha_base) && alpha_base > 0.0, "alpha_base must be positive");
  require(std::isfinite(alpha_halfnormal_scale) && alpha_halfnormal_scale >= 0.0,
          "alpha_halfnormal_scale must be non-negative");
  require(std::isfinite(agc_noise_var) && agc_noise_var >= 0.0, "agc_noise_var must be non-negative");
  require(std::isfinite(cnir_noise_var) && cnir_noise_var >= 0.0,
          "cnir_noise_var must be non-negative");
  require(n_satellites >= 1, "n_satellites must be at least 1");
  if (geometry == Geometry::RoadLine)
    require(std::abs(road_offset_east) >= kMinJammerDistance,
            "road_offset_east must keep receivers away from the jammer");
}

Eigen::VectorXd ScenarioConfig::sample_times() const {
  const Index total = 2 * static_cast<Index>(samples_per_half);
  const double dt = duration / static_cast<double>(total);
  return Eigen::VectorXd::LinSpaced(total, 0.0, dt * static_cast<double>(total - 1));
}

double free_space_zeta(double jammer_power_w) {
  const double wavelength = kSpeedOfLight / kL1Frequency;
  const double kappa = std::pow(wavelength / (4.0 * std::numbers::pi), 2);
  const double noise_power = kBoltzmann * kNoiseTemperature * kFrontEndBandwidth;
  return jammer_power_w * kappa / noise_power;
}

ScenarioTruth generate_scenario(const ScenarioConfig& config) {
  config.validate();
  std::mt19937_64 rng(mix_seed(config.rng_seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double half = 0.5 * config.cube_side;
  std::uniform_real_distribution<double> along(-half, half);

  ScenarioTruth truth;
  truth.jammer_pos = Vec3d::Zero();
  truth.sample_times = config.sample_times();
  truth.agc_noise_var = config.agc_noise_var;
  truth.cnir_noise_var = config.cnir_noise_var;
  truth.n_satellites = config.n_satellites;

  const auto n = static_cast<Index>(config.n_receivers);
  truth.zeta = Eigen::VectorXd::Constant(n, free_space_zeta(config.jammer_power));
  truth.alpha.resize(n);
  truth.quiet_agc_db = Eigen::VectorXd::Zero(n);
  truth.quiet_cnir_db = Eigen::VectorXd::Constant(n, 45.0);
  truth.trajectories.reserve(static_cast<std::size_t>(n));

  for (Index i = 0; i < n; ++i) {
    Trajectory traj;
    traj.speed = config.speed;
    do {
      if (config.geometry == Geometry::UniformCube) {
        traj.start = Vec3d(along(rng), along(rng), along(rng));
        traj.heading = random_unit_vector(rng);
      } else {
        traj.start = Vec3d(config.road_offset_east, along(rng), 0.0);
        traj.heading = coin(rng) ? Vec3d::UnitY() : Vec3d(-Vec3d::UnitY());
      }
    } while (min_distance(traj, truth.jammer_pos, truth.sample_times) < kMinJammerDistance);
    truth.trajectories.push_back(traj);
    truth.alpha[i] = config.alpha_base + std::abs(config.alpha_halfnormal_scale * normal(rng));
  }
  return truth;
}

}  // namespace jamloc
