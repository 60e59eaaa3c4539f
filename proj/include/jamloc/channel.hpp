#pragma once

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

#include "jamloc/scenario.hpp"
#include "jamloc/types.hpp"

namespace jamloc {

enum class MeasurementKind { Agc, Cnir };

template <typename Scalar>
Scalar distance(const Vec3<Scalar>& a, const Vec3<Scalar>& b) {
  return (a - b).norm();
}

namespace detail {

// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

template <typename Scalar>
Scalar logistic(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
constexpr Scalar db_per_neper() {
  return Scalar(10) / std::numbers::ln10_v<Scalar>;
}

}  // namespace detail

// 10 log10(zeta d^-alpha + 1) evaluated as softplus(log zeta - alpha log d),
// which stays finite for zeta anywhere in [1e-300, 1e300].
template <typename Scalar>
Scalar jamming_drop_db(Scalar log_zeta, Scalar alpha, Scalar log_distance) {
  return detail::db_per_neper<Scalar>() * detail::softplus(log_zeta - alpha * log_distance);
}

// quiet - 10 log10(zeta d^-alpha + 1) + noise. Throws std::domain_error for d <= 0.
double agc_sample(double quiet_db, double zeta, double alpha, double d, double noise_db);

// Mean CNIR in dB over the visible satellites; per-satellite dB noise is added
// before averaging. Throws on d <= 0 or an empty satellite list.
double cnir_sample(double quiet_db, double zeta, double alpha, double d,
                   std::span<const double> per_sat_noise_db);

struct MeasurementSet {
  MeasurementKind kind = MeasurementKind::Agc;
  Eigen::MatrixXd values;           // rows: jammed-half sample n, cols: receiver i (dB)
  Eigen::VectorXd quiet_baseline;   // per receiver (dB)
  Eigen::VectorXd quiet_variance;   // first-half sample variance (dB^2)
  std::vector<Positions3d> positions;  // per receiver, 3 x N
  Positions3d start_positions;      // receiver positions at t = 0
  Eigen::VectorXd times;            // N sample instants (s)
  Eigen::VectorXd noise_var_true;   // bookkeeping only, never read by estimators

  Index n_samples() const { return values.rows(); }
  Index n_receivers() const { return values.cols(); }

  std::span<const double> series(Index receiver) const {
    return {values.col(receiver).data(), static_cast<std::size_t>(values.rows())};
  }

  // Throws std::invalid_argument on inconsistent dimensions or non-finite values.
  void validate() const;
};

// Jammer off for the first half, on for the second. Only the second half lands
// in `values`; the first half feeds the quiet baseline and variance.
// Throws std::domain_error if any receiver sample is within kMinJammerDistance.
MeasurementSet synthesize(const ScenarioTruth& truth, const ScenarioConfig& config,
                          MeasurementKind kind);

// Sample mean. Throws std::invalid_argument on an empty list.
double estimate_quiet_baseline(std::span<const double> first_half_values);

inline constexpr double kDefaultDetectionThresholdDb = -5.0;

// True iff min(series) - quiet_db <= threshold_db (a drop of exactly 5 dB counts).
bool detect_jammed(std::span<const double> series, double quiet_db,
                   double threshold_db = kDefaultDetectionThresholdDb);

IndexSet jammed_receivers(const MeasurementSet& meas,
                          double threshold_db = kDefaultDetectionThresholdDb);

// Mean of receiver i's positions over the jammed window.
Vec3d mean_position(const MeasurementSet& meas, Index receiver);

// Header `time,receiver,x,y,z,value_db`, one row per (sample, receiver).
void write_csv(const MeasurementSet& meas, std::ostream& out);

}  // namespace jamloc
