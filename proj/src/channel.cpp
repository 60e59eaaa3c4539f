#include "jamloc/channel.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace jamloc {

namespace {

double deterministic_level(double quiet_db, double zeta, double alpha, double d) {
  if (!(d > 0.0)) throw std::domain_error("distance to the jammer must be positive");
  if (!(zeta >= 0.0)) throw std::invalid_argument("zeta must be non-negative");
  return quiet_db - jamming_drop_db(std::log(zeta), alpha, std::log(d));
}

}  // namespace

double agc_sample(double quiet_db, double zeta, double alpha, double d, double noise_db) {
  return deterministic_level(quiet_db, zeta, alpha, d) + noise_db;
}

double cnir_sample(double quiet_db, double zeta, double alpha, double d,
                   std::span<const double> per_sat_noise_db) {
  if (per_sat_noise_db.empty()) throw std::invalid_argument("no satellites in view");
  const double level = deterministic_level(quiet_db, zeta, alpha, d);
  // Mean of (level + w_m) over satellites, with the common level pulled out.
  double noise = 0.0;
  for (double w : per_sat_noise_db) noise += w;
  return level + noise / static_cast<double>(per_sat_noise_db.size());
}

void MeasurementSet::validate() const {
  const Index nr = n_receivers();
  const Index n = n_samples();
  if (quiet_baseline.size() != nr || quiet_variance.size() != nr ||
      static_cast<Index>(positions.size()) != nr || start_positions.cols() != nr ||
      times.size() != n)
    throw std::invalid_argument("measurement set dimensions disagree");
  for (const auto& p : positions)
    if (p.cols() != n) throw std::invalid_argument("receiver track length differs from sample count");
  if (!values.allFinite() || !quiet_baseline.allFinite())
    throw std::invalid_argument("measurement values must be finite");
}

MeasurementSet synthesize(const ScenarioTruth& truth, const ScenarioConfig& config,
                          MeasurementKind kind) {
  config.validate();
  const Index nr = truth.n_receivers();
  const Index total = truth.sample_times.size();
  const Index half = total / 2;
  if (nr == 0 || half == 0) throw std::invalid_argument("empty scenario");

  const bool cnir = kind == MeasurementKind::Cnir;
  const double noise_var = cnir ? truth.cnir_noise_var : truth.agc_noise_var;
  const Eigen::VectorXd& quiet = cnir ? truth.quiet_cnir_db : truth.quiet_agc_db;
  const auto n_sat = static_cast<std::size_t>(cnir ? truth.n_satellites : 1);

  std::mt19937_64 rng(mix_seed(config.rng_seed, cnir ? 2 : 1));
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));
  std::vector<double> sat_noise(n_sat);

  MeasurementSet meas;
  meas.kind = kind;
  meas.values.resize(total - half, nr);
  meas.quiet_baseline.resize(nr);
  meas.quiet_variance.resize(nr);
  meas.start_positions.resize(3, nr);
  meas.times = truth.sample_times.tail(total - half);
  meas.noise_var_true = Eigen::VectorXd::Constant(nr, cnir ? noise_var / double(n_sat) : noise_var);
  meas.positions.reserve(static_cast<std::size_t>(nr));

  const double t_on = config.jammer_on_time();
  Eigen::VectorXd quiet_series(half);
  for (Index i = 0; i < nr; ++i) {
    const Trajectory& traj = truth.trajectories[static_cast<std::size_t>(i)];
    Positions3d track(3, total - half);
    meas.start_positions.col(i) = position_at(traj, 0.0);
    for (Index k = 0; k < total; ++k) {
      const double t = truth.sample_times[k];
      const Vec3d p = position_at(traj, t);
      const double d = distance(p, truth.jammer_pos);
      if (d < kMinJammerDistance)
        throw std::domain_error("receiver " + std::to_string(i) + " passes within " +
                                std::to_string(kMinJammerDistance) + " m of the jammer");
      const double zeta = t >= t_on ? truth.zeta[i] : 0.0;
      double value;
      if (cnir) {
        for (auto& w : sat_noise) w = noise(rng);
        value = cnir_sample(quiet[i], zeta, truth.alpha[i], d, sat_noise);
      } else {
        value = agc_sample(quiet[i], zeta, truth.alpha[i], d, noise(rng));
      }
      if (k < half) {
        quiet_series[k] = value;
      } else {
        meas.values(k - half, i) = value;
        track.col(k - half) = p;
      }
    }
    meas.positions.push_back(std::move(track));
    const double mean = estimate_quiet_baseline({quiet_series.data(), static_cast<std::size_t>(half)});
    meas.quiet_baseline[i] = mean;
    meas.quiet_variance[i] = (quiet_series.array() - mean).square().mean();
  }
  return meas;
}

double estimate_quiet_baseline(std::span<const double> first_half_values) {
  if (first_half_values.empty()) throw std::invalid_argument("no quiet samples");
  return std::accumulate(first_half_values.begin(), first_half_values.end(), 0.0) /
         static_cast<double>(first_half_values.size());
}

bool detect_jammed(std::span<const double> series, double quiet_db, double threshold_db) {
  if (series.empty()) return false;
  const double lowest = *std::min_element(series.begin(), series.end());
  return lowest - quiet_db <= threshold_db;
}

IndexSet jammed_receivers(const MeasurementSet& meas, double threshold_db) {
  IndexSet out;
  for (Index i = 0; i < meas.n_receivers(); ++i)
    if (detect_jammed(meas.series(i), meas.quiet_baseline[i], threshold_db)) out.push_back(i);
  return out;
}

Vec3d mean_position(const MeasurementSet& meas, Index receiver) {
  return meas.positions[static_cast<std::size_t>(receiver)].rowwise().mean();
}

void write_csv(const MeasurementSet& meas, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "time,receiver,x,y,z,value_db\n";
  for (Index n = 0; n < meas.n_samples(); ++n) {
    for (Index i = 0; i < meas.n_receivers(); ++i) {
      const auto p = meas.positions[static_cast<std::size_t>(i)].col(n);
      out << meas.times[n] << ',' << i << ',' << p.x() << ',' << p.y() << ',' << p.z() << ','
          << meas.values(n, i) << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace jamloc
