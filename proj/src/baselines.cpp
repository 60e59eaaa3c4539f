#include "jamloc/baselines.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/QR>

namespace jamloc {

Vec3d centroid_estimate(const MeasurementSet& meas, double threshold_db, CentroidAnchor anchor) {
  const IndexSet jammed = jammed_receivers(meas, threshold_db);
  if (jammed.empty()) throw EstimationUnavailable("no receiver detected the jammer");
  Vec3d sum = Vec3d::Zero();
  for (Index i : jammed)
    sum += anchor == CentroidAnchor::Start ? Vec3d(meas.start_positions.col(i)) : mean_position(meas, i);
  return sum / static_cast<double>(jammed.size());
}

std::optional<double> ls_distance_from_drop(double drop_db, double zeta_calibrated) {
  if (!(drop_db > 0.0) || !(zeta_calibrated > 0.0)) return std::nullopt;
  // expm1 keeps precision for small drops where 10^(x/10) - 1 cancels.
  const double excess = std::expm1(drop_db * std::numbers::ln10 / 10.0);
  const double d = std::sqrt(zeta_calibrated / excess);
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

std::string_view to_string(LsFailure f) {
  switch (f) {
    case LsFailure::None: return "none";
    case LsFailure::TooFewReceivers: return "too_few_receivers";
    case LsFailure::RankDeficient: return "rank_deficient";
    case LsFailure::NonPhysical: return "non_physical";
  }
  return "unknown";
}

LsResult multilaterate(const Positions3d& anchors, std::span<const double> ranges) {
  LsResult result;
  const Index m = anchors.cols();
  result.receivers_used = m;
  if (m < 4 || static_cast<Index>(ranges.size()) != m) {
    result.failure = LsFailure::TooFewReceivers;
    return result;
  }
  const Eigen::Map<const Eigen::VectorXd> r(ranges.data(), m);
  const Vec3d centre = anchors.rowwise().mean();
  const Eigen::VectorXd sq_norm = anchors.colwise().squaredNorm().transpose();
  const Eigen::VectorXd sq_range = r.array().square();

  const Eigen::MatrixXd a = 2.0 * (anchors.colwise() - centre).transpose();
  const Eigen::VectorXd b = (sq_norm.array() - sq_norm.mean()) - (sq_range.array() - sq_range.mean());

  // Rank threshold relative to the anchor spread; collinear or coplanar
  // anchors leave a mirror ambiguity the linear system cannot resolve.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-9);
  if (qr.rank() < 3) {
    result.failure = LsFailure::RankDeficient;
    return result;
  }
  const Vec3d p = qr.solve(b);
  if (!p.allFinite()) {
    result.failure = LsFailure::NonPhysical;
    return result;
  }
  result.position = p;
  return result;
}

LsResult ls_estimate(const MeasurementSet& meas, std::span<const double> zeta_calibrated,
                     double threshold_db) {
  if (static_cast<Index>(zeta_calibrated.size()) != meas.n_receivers())
    throw std::invalid_argument("one calibrated zeta per receiver required");
  std::vector<Vec3d> anchors;
  std::vector<double> ranges;
  for (Index i : jammed_receivers(meas, threshold_db)) {
    const double drop = meas.quiet_baseline[i] - meas.values.col(i).mean();
    const auto d = ls_distance_from_drop(drop, zeta_calibrated[static_cast<std::size_t>(i)]);
    if (!d) continue;
    anchors.push_back(mean_position(meas, i));
    ranges.push_back(*d);
  }
  Positions3d a(3, static_cast<Index>(anchors.size()));
  for (std::size_t k = 0; k < anchors.size(); ++k) a.col(static_cast<Index>(k)) = anchors[k];
  return multilaterate(a, ranges);
}

}  // namespace jamloc
