#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "jamloc/channel.hpp"
#include "jamloc/types.hpp"

namespace jamloc {

// Which position stands in for a moving receiver in the centroid.
enum class CentroidAnchor {
  Start,       // position at t = 0
  JammedMean,  // mean position over the jammed window
};

// Mean anchor position of the jammed receivers.
// Throws EstimationUnavailable when none is jammed.
Vec3d centroid_estimate(const MeasurementSet& meas,
                        double threshold_db = kDefaultDetectionThresholdDb,
                        CentroidAnchor anchor = CentroidAnchor::Start);

// Range implied by an AGC drop under free-space loss (alpha = 2) and a
// calibrated zeta. Empty for drop_db <= 0.
std::optional<double> ls_distance_from_drop(double drop_db, double zeta_calibrated);

enum class LsFailure { None, TooFewReceivers, RankDeficient, NonPhysical };

std::string_view to_string(LsFailure f);

struct LsResult {
  std::optional<Vec3d> position;
  LsFailure failure = LsFailure::None;
  Index receivers_used = 0;

  bool ok() const { return position.has_value(); }
};

// Linearised multilateration. Each jammed receiver contributes one range,
// inverted from its mean drop over the jammed window and placed at its mean
// position over that window. zeta_calibrated is indexed by receiver column.
LsResult ls_estimate(const MeasurementSet& meas, std::span<const double> zeta_calibrated,
                     double threshold_db = kDefaultDetectionThresholdDb);

// Least-squares solution of |p - a_i|^2 = r_i^2 after subtracting the mean
// equation: 2 (a_i - a_mean)^T p = |a_i|^2 - mean|a|^2 - (r_i^2 - mean r^2).
// Needs the anchors to span 3D.
LsResult multilaterate(const Positions3d& anchors, std::span<const double> ranges);

}  // namespace jamloc
