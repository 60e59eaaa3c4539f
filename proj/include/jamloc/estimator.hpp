#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "jamloc/channel.hpp"
#include "jamloc/types.hpp"

namespace jamloc {

enum class DescentDirection {
  // Gradient scaled by the damped Gauss-Newton matrix of the residuals.
  GaussNewton,
  // Plain negative gradient.
  Steepest,
};

struct EstimatorConfig {
  DescentDirection direction = DescentDirection::GaussNewton;
  std::vector<double> alpha_grid = default_alpha_grid();
  double alpha_subset_threshold = 2.3;
  double zeta_init = 1e8;
  // Also start each alpha grid point after the first from the previous grid
  // optimum, keeping whichever of the two descents ends lower.
  bool alpha_continuation = true;
  int max_iters = 5000;
  // Iteration cap for the single-receiver fits of the alpha search.
  int alpha_search_max_iters = 500;
  // Stop when the gradient in scaled coordinates, divided by the number of
  // samples in the fit, drops below this.
  double grad_tolerance = 1e-6;
  // Stop when one iteration lowers the NLL by less than this per sample.
  double nll_tolerance = 1e-9;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  double step_init = 1.0;
  double min_step = 1e-16;
  // Initial Levenberg damping, relative to the Gauss-Newton diagonal.
  double damping_init = 1e-3;
  double sigma2_floor = 1e-12;  // dB^2
  // Position unknowns are descended in units of this many metres.
  double position_scale = 100.0;
  double detection_threshold_db = kDefaultDetectionThresholdDb;
  // When the receivers are collinear and the start point sits on their line the
  // cross-line gradient vanishes; the start point is moved this far off the line.
  double collinear_offset = 100.0;  // m
  // A grid fit whose largest predicted drop is below this explains no jamming.
  double min_explained_drop_db = 0.1;

  void validate() const;

  // 1.6, 1.7, ..., 4.0
  static std::vector<double> default_alpha_grid();
};

struct NuisanceState {
  Eigen::VectorXd zeta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd sigma2;
};

struct ReceiverFit {
  Index receiver = 0;
  bool usable = false;
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  double zeta_hat = std::numeric_limits<double>::quiet_NaN();
  double nll = std::numeric_limits<double>::quiet_NaN();
};

struct PositionEstimate {
  Vec3d p0_hat = Vec3d::Zero();
  IndexSet selected;  // receiver columns, aligned with `nuisance`
  NuisanceState nuisance;
  double nll = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  std::vector<ReceiverFit> receiver_fits;  // one per jammed receiver
  std::vector<double> nll_trace;          // joint descent, one entry per iterate
};

template <typename Scalar>
struct NllGradient {
  Vec3<Scalar> position;  // d NLL / d p0 (per metre)
  VecX<Scalar> log_zeta;  // d NLL / d log(zeta_i)
};

namespace detail {

// Residual sum of squares of receiver i, optionally with its gradient with
// respect to (p0, log zeta) and the Gauss-Newton block sum_n J_n J_n^T over the
// same four unknowns. Returns +inf when p0 hits a receiver position.
template <typename Scalar>
Scalar receiver_rss(const Vec3<Scalar>& p0, Scalar log_zeta, Scalar alpha,
                    const MeasurementSet& meas, Index i, Vec3<Scalar>* grad_p0 = nullptr,
                    Scalar* grad_log_zeta = nullptr,
                    Eigen::Matrix<Scalar, 4, 4>* jtj = nullptr) {
  using std::exp;
  using std::log;
  using std::log1p;
  const auto& pos = meas.positions[static_cast<std::size_t>(i)];
  const Scalar quiet = Scalar(meas.quiet_baseline[i]);
  const Scalar c = db_per_neper<Scalar>();
  const Scalar half_alpha = alpha / Scalar(2);
  const bool want_grad = grad_p0 != nullptr;

  Scalar rss(0);
  Eigen::Matrix<Scalar, 4, 1> grad = Eigen::Matrix<Scalar, 4, 1>::Zero();
  if (jtj) jtj->setZero();
  for (Index n = 0; n < meas.n_samples(); ++n) {
    const Vec3<Scalar> delta = p0 - pos.col(n).template cast<Scalar>();
    const Scalar d2 = delta.squaredNorm();
    if (!(d2 > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
    const Scalar s = log_zeta - half_alpha * log(d2);
    const Scalar e = exp(-std::abs(s));
    const Scalar drop = c * ((s > Scalar(0) ? s : Scalar(0)) + log1p(e));
    const Scalar r = Scalar(meas.values(n, i)) - quiet + drop;
    rss += r * r;
    if (want_grad) {
      const Scalar dr_ds = c * (s >= Scalar(0) ? Scalar(1) / (Scalar(1) + e) : e / (Scalar(1) + e));
      Eigen::Matrix<Scalar, 4, 1> jac;
      jac.template head<3>() = (-dr_ds * alpha / d2) * delta;
      jac[3] = dr_ds;
      grad += (Scalar(2) * r) * jac;
      if (jtj) jtj->noalias() += jac * jac.transpose();
    }
  }
  if (want_grad) {
    *grad_p0 = grad.template head<3>();
    *grad_log_zeta = grad[3];
  }
  return rss;
}

template <typename Scalar>
void check_nll_args(const VecX<Scalar>& zeta, const VecX<Scalar>& alpha,
                    const VecX<Scalar>& sigma2, const MeasurementSet& meas,
                    std::span<const Index> subset) {
  const auto k = static_cast<Index>(subset.size());
  if (zeta.size() != k || alpha.size() != k || sigma2.size() != k)
    throw std::invalid_argument("nuisance vectors must match the subset size");
  for (Index j = 0; j < k; ++j) {
    if (subset[j] < 0 || subset[j] >= meas.n_receivers())
      throw std::out_of_range("subset index outside the measurement set");
    if (!(sigma2[j] > Scalar(0))) throw std::invalid_argument("sigma2 must be positive");
    if (!(zeta[j] >= Scalar(0))) throw std::invalid_argument("zeta must be non-negative");
  }
}

}  // namespace detail

// r_i[n] = G_i[n] - Gbar_i + 10 log10(zeta_i d_i[n]^-alpha_i + 1)
template <typename Scalar>
VecX<Scalar> receiver_residuals(const Vec3<Scalar>& p0, Scalar zeta, Scalar alpha,
                                const MeasurementSet& meas, Index i) {
  using std::log;
  const auto& pos = meas.positions[static_cast<std::size_t>(i)];
  VecX<Scalar> r(meas.n_samples());
  const Scalar log_zeta = log(zeta);
  for (Index n = 0; n < meas.n_samples(); ++n) {
    const Scalar d = distance<Scalar>(p0, pos.col(n).template cast<Scalar>());
    if (!(d > Scalar(0))) throw std::domain_error("jammer position coincides with a receiver");
    r[n] = Scalar(meas.values(n, i)) - Scalar(meas.quiet_baseline[i]) +
           jamming_drop_db<Scalar>(log_zeta, alpha, log(d));
  }
  return r;
}

// Gaussian negative log-likelihood of the receivers in `subset`; nuisance
// vectors are indexed like `subset`.
template <typename Scalar>
Scalar neg_log_likelihood(const Vec3<Scalar>& p0, const VecX<Scalar>& zeta,
                          const VecX<Scalar>& alpha, const VecX<Scalar>& sigma2,
                          const MeasurementSet& meas, std::span<const Index> subset) {
  using std::log;
  detail::check_nll_args(zeta, alpha, sigma2, meas, subset);
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  const Scalar n = Scalar(meas.n_samples());
  Scalar nll(0);
  for (std::size_t j = 0; j < subset.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    const Scalar rss = detail::receiver_rss<Scalar>(p0, log(zeta[jj]), alpha[jj], meas, subset[j]);
    if (!std::isfinite(static_cast<double>(rss)))
      throw std::domain_error("jammer position coincides with a receiver");
    nll += n / Scalar(2) * log(two_pi * sigma2[jj]) + rss / (Scalar(2) * sigma2[jj]);
  }
  return nll;
}

template <typename Scalar>
NllGradient<Scalar> nll_gradient(const Vec3<Scalar>& p0, const VecX<Scalar>& zeta,
                                 const VecX<Scalar>& alpha, const VecX<Scalar>& sigma2,
                                 const MeasurementSet& meas, std::span<const Index> subset) {
  using std::log;
  detail::check_nll_args(zeta, alpha, sigma2, meas, subset);
  NllGradient<Scalar> g{Vec3<Scalar>::Zero(), VecX<Scalar>::Zero(zeta.size())};
  for (std::size_t j = 0; j < subset.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    Vec3<Scalar> gp;
    Scalar gz;
    const Scalar rss =
        detail::receiver_rss<Scalar>(p0, log(zeta[jj]), alpha[jj], meas, subset[j], &gp, &gz);
    if (!std::isfinite(static_cast<double>(rss)))
      throw std::domain_error("jammer position coincides with a receiver");
    const Scalar inv = Scalar(1) / (Scalar(2) * sigma2[jj]);
    g.position += inv * gp;
    g.log_zeta[jj] = inv * gz;
  }
  return g;
}

// Mean squares of each residual list; no flooring.
Eigen::VectorXd sigma2_closed_form(std::span<const Eigen::VectorXd> residuals);

struct LineSearchParams {
  double c = 1e-4;       // Armijo slope fraction
  double shrink = 0.5;
  double min_step = 1e-16;
};

struct LineSearchStep {
  double step;
  double value;  // f(x + step * direction)
};

// Backtracking (Armijo) line search: the largest step_init * shrink^k with
// f(x + t d) <= f(x) + c t <grad, d>. Empty when t would fall below min_step.
// Throws std::invalid_argument unless d is a descent direction.
template <typename Fn>
std::optional<LineSearchStep> backtracking_step(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& direction, double fx,
                                                const Eigen::VectorXd& gradient, Fn&& f,
                                                const LineSearchParams& params,
                                                double step_init) {
  const double slope = gradient.dot(direction);
  if (!(slope < 0.0)) throw std::invalid_argument("not a descent direction");
  for (double t = step_init; t >= params.min_step; t *= params.shrink) {
    const double ft = f(Eigen::VectorXd(x + t * direction));
    if (ft <= fx + params.c * t * slope) return LineSearchStep{t, ft};
  }
  return std::nullopt;
}

// Mean start position of `receivers`, moved off their common line when they are
// collinear and the mean lies on it.
Vec3d initial_position(const MeasurementSet& meas, std::span<const Index> receivers,
                       double collinear_offset);

// Grid search over alpha for a single receiver, each grid point running the
// descent over (p0, zeta_i) from p0_init and config.zeta_init.
ReceiverFit alpha_single_receiver(const MeasurementSet& meas, Index receiver,
                                  const EstimatorConfig& config, const Vec3d& p0_init);
ReceiverFit alpha_single_receiver(const MeasurementSet& meas, Index receiver,
                                  const EstimatorConfig& config);

// Positions of entries with alpha_hat <= threshold. Non-finite entries mark
// unusable receivers and are never selected. Falls back to the smallest finite
// alpha_hat when nothing passes; empty only if every entry is unusable.
IndexSet select_subset(std::span<const double> alpha_hats, double threshold);

// Detection, per-receiver alpha search, subset selection, then the joint
// descent. Throws EstimationUnavailable when no receiver is jammed or usable.
PositionEstimate joint_estimate(const MeasurementSet& meas, const EstimatorConfig& config);

}  // namespace jamloc
