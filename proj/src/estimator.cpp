#include "jamloc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace jamloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid estimator config: " + what);
}

// Descent variables: [p0 / position_scale, log zeta_1, ..., log zeta_k].
class LikelihoodProblem {
 public:
  LikelihoodProblem(const MeasurementSet& meas, IndexSet subset, Eigen::VectorXd alpha,
                    double position_scale)
      : meas_(meas), subset_(std::move(subset)), alpha_(std::move(alpha)), scale_(position_scale) {}

  Index dim() const { return 3 + static_cast<Index>(subset_.size()); }
  double total_samples() const {
    return static_cast<double>(meas_.n_samples()) * static_cast<double>(subset_.size());
  }

  Eigen::VectorXd pack(const Vec3d& p0, const Eigen::VectorXd& log_zeta) const {
    Eigen::VectorXd x(dim());
    x.head<3>() = p0 / scale_;
    x.tail(log_zeta.size()) = log_zeta;
    return x;
  }
  Vec3d position(const Eigen::VectorXd& x) const { return scale_ * x.head<3>(); }

  double nll(const Eigen::VectorXd& x, const Eigen::VectorXd& sigma2) const {
    const Vec3d p0 = position(x);
    double total = 0.0;
    for (std::size_t j = 0; j < subset_.size(); ++j) {
      const auto jj = static_cast<Index>(j);
      const double rss = detail::receiver_rss<double>(p0, x[3 + jj], alpha_[jj], meas_, subset_[j]);
      if (!std::isfinite(rss)) return kInf;
      total += term(rss, sigma2[jj]);
    }
    return total;
  }

  // NLL and its gradient with respect to the scaled variables; when `gn` is
  // given it receives the Gauss-Newton approximation of the Hessian.
  double nll_and_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& sigma2,
                          Eigen::VectorXd& grad, Eigen::MatrixXd* gn = nullptr) const {
    const Vec3d p0 = position(x);
    grad.setZero(dim());
    if (gn) gn->setZero(dim(), dim());
    Eigen::Matrix4d jtj;
    const Eigen::Vector4d unscale(scale_, scale_, scale_, 1.0);
    double total = 0.0;
    for (std::size_t j = 0; j < subset_.size(); ++j) {
      const auto jj = static_cast<Index>(j);
      Vec3d gp;
      double gz;
      const double rss = detail::receiver_rss<double>(p0, x[3 + jj], alpha_[jj], meas_, subset_[j],
                                                      &gp, &gz, gn ? &jtj : nullptr);
      if (!std::isfinite(rss)) return kInf;
      const double inv = 0.5 / sigma2[jj];
      total += term(rss, sigma2[jj]);
      grad.head<3>() += (inv * scale_) * gp;
      grad[3 + jj] = inv * gz;
      if (gn) {
        // Unknowns of this block: p0 / scale (3) and log zeta_j.
        const Eigen::Matrix4d block = (2.0 * inv) * unscale.asDiagonal() * jtj * unscale.asDiagonal();
        gn->topLeftCorner<3, 3>() += block.topLeftCorner<3, 3>();
        gn->block<3, 1>(0, 3 + jj) += block.topRightCorner<3, 1>();
        gn->block<1, 3>(3 + jj, 0) += block.bottomLeftCorner<1, 3>();
        (*gn)(3 + jj, 3 + jj) += block(3, 3);
      }
    }
    return total;
  }

  Eigen::VectorXd sigma2(const Eigen::VectorXd& x, double floor) const {
    const Vec3d p0 = position(x);
    const double n = static_cast<double>(meas_.n_samples());
    Eigen::VectorXd s(static_cast<Index>(subset_.size()));
    for (std::size_t j = 0; j < subset_.size(); ++j) {
      const auto jj = static_cast<Index>(j);
      s[jj] = std::max(
          detail::receiver_rss<double>(p0, x[3 + jj], alpha_[jj], meas_, subset_[j]) / n, floor);
    }
    return s;
  }

  // Largest modelled drop over the samples of subset entry j.
  double max_drop_db(const Eigen::VectorXd& x, Index j) const {
    const Vec3d p0 = position(x);
    const auto& pos = meas_.positions[static_cast<std::size_t>(subset_[static_cast<std::size_t>(j)])];
    double best = 0.0;
    for (Index n = 0; n < pos.cols(); ++n) {
      const double d = (p0 - pos.col(n)).norm();
      best = std::max(best, jamming_drop_db(x[3 + j], alpha_[j], std::log(d)));
    }
    return best;
  }

 private:
  double term(double rss, double sigma2) const {
    const double n = static_cast<double>(meas_.n_samples());
    return 0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) + rss / (2.0 * sigma2);
  }

  const MeasurementSet& meas_;
  IndexSet subset_;
  Eigen::VectorXd alpha_;
  double scale_;
};

struct DescentResult {
  Eigen::VectorXd x;
  Eigen::VectorXd sigma2;
  double nll = kInf;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

// Damped Gauss-Newton direction; empty if the system cannot be solved.
std::optional<Eigen::VectorXd> gauss_newton_direction(const Eigen::MatrixXd& gn,
                                                      const Eigen::VectorXd& grad, double damping) {
  Eigen::MatrixXd lhs = gn;
  const double ridge = 1e-12 * std::max(1.0, gn.diagonal().maxCoeff());
  lhs.diagonal().array() += damping * gn.diagonal().array() + ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  Eigen::VectorXd d = ldlt.solve(-grad);
  if (!d.allFinite()) return std::nullopt;
  return d;
}

// Descent with Armijo backtracking; sigma2 is re-solved in closed form after
// every accepted step. Each trace entry is NLL(x_k, sigma2_k).
DescentResult descend(const LikelihoodProblem& problem, Eigen::VectorXd x, Eigen::VectorXd sigma2,
                      const EstimatorConfig& config, bool keep_trace) {
  const LineSearchParams ls{config.armijo_c, config.armijo_shrink, config.min_step};
  const bool newton = config.direction == DescentDirection::GaussNewton;
  const double n_total = problem.total_samples();
  DescentResult out;
  Eigen::VectorXd grad;
  Eigen::MatrixXd gn;
  Eigen::MatrixXd* gn_out = newton ? &gn : nullptr;
  double f = problem.nll_and_gradient(x, sigma2, grad, gn_out);
  if (keep_trace) out.trace.push_back(f);
  double step = config.step_init;
  double damping = config.damping_init;

  for (int it = 0; it < config.max_iters; ++it) {
    if (!std::isfinite(f) || !grad.allFinite()) break;
    if (grad.norm() / n_total < config.grad_tolerance) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd direction = -grad;
    double step_start = step;
    if (newton) {
      step_start = config.step_init;
      if (auto d = gauss_newton_direction(gn, grad, damping); d && d->dot(grad) < 0.0)
        direction = std::move(*d);
    }
    const auto accepted = backtracking_step(
        x, direction, f, grad, [&](const Eigen::VectorXd& y) { return problem.nll(y, sigma2); }, ls,
        step_start);
    if (!accepted) {
      // No representable decrease left along this direction.
      out.converged = true;
      break;
    }
    x += accepted->step * direction;
    if (newton) {
      damping = accepted->step >= step_start ? std::max(damping * 0.25, 1e-12)
                                             : std::min(damping * 4.0, 1e8);
    } else {
      step = accepted->step / config.armijo_shrink;
    }
    sigma2 = problem.sigma2(x, config.sigma2_floor);
    const double f_next = problem.nll_and_gradient(x, sigma2, grad, gn_out);
    out.iterations = it + 1;
    if (keep_trace) out.trace.push_back(f_next);
    const double gain = f - f_next;
    f = f_next;
    if (gain < config.nll_tolerance * n_total) {
      out.converged = std::isfinite(f);
      break;
    }
  }
  out.x = std::move(x);
  out.sigma2 = std::move(sigma2);
  out.nll = f;
  return out;
}

double mean_log_distance(const MeasurementSet& meas, Index receiver, const Vec3d& p) {
  const auto& track = meas.positions[static_cast<std::size_t>(receiver)];
  double sum = 0.0;
  for (Index n = 0; n < track.cols(); ++n) sum += std::log((p - track.col(n)).norm());
  return sum / static_cast<double>(track.cols());
}

Vec3d mean_start(const MeasurementSet& meas, std::span<const Index> receivers) {
  Vec3d sum = Vec3d::Zero();
  for (Index i : receivers) sum += meas.start_positions.col(i);
  return sum / static_cast<double>(receivers.size());
}

// Moves p off the line (or point) that the receivers' positions collapse onto,
// when p lies within `offset` of it. Prefers a vertical displacement.
Vec3d move_off_degenerate_geometry(const Vec3d& p, const MeasurementSet& meas,
                                   std::span<const Index> receivers, double offset) {
  Eigen::Index count = 0;
  Vec3d mean = Vec3d::Zero();
  for (Index i : receivers) {
    mean += meas.start_positions.col(i) + meas.positions[static_cast<std::size_t>(i)].rowwise().sum();
    count += 1 + meas.n_samples();
  }
  mean /= static_cast<double>(count);
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  auto accumulate = [&](const Vec3d& q) { scatter += (q - mean) * (q - mean).transpose(); };
  for (Index i : receivers) {
    accumulate(meas.start_positions.col(i));
    const auto& track = meas.positions[static_cast<std::size_t>(i)];
    for (Index n = 0; n < track.cols(); ++n) accumulate(track.col(n));
  }
  scatter /= static_cast<double>(count);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
  const double tiny = 1e-12 * std::max(1.0, lambda[2]);
  if (lambda[1] > tiny) return p;  // receivers span at least a plane

  const bool is_point = lambda[2] <= tiny;
  const Vec3d axis = is_point ? Vec3d::Zero() : Vec3d(eig.eigenvectors().col(2));
  const Vec3d rel = p - mean;
  const Vec3d foot = mean + rel.dot(axis) * axis;
  const Vec3d perp = p - foot;
  if (perp.norm() >= offset) return p;

  Vec3d dir = perp;
  if (dir.norm() <= 1e-9 * std::max(1.0, offset)) {
    dir = Vec3d::UnitZ() - Vec3d::UnitZ().dot(axis) * axis;
    if (dir.norm() < 1e-6) dir = Vec3d::UnitX() - Vec3d::UnitX().dot(axis) * axis;
  }
  return foot + offset * dir.normalized();
}

}  // namespace

std::vector<double> EstimatorConfig::default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 16; k <= 40; ++k) grid.push_back(k / 10.0);
  return grid;
}

void EstimatorConfig::validate() const {
  require(!alpha_grid.empty(), "alpha_grid must not be empty");
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    require(std::isfinite(alpha_grid[k]) && alpha_grid[k] > 0.0, "alpha_grid entries must be positive");
    if (k > 0) require(alpha_grid[k] > alpha_grid[k - 1], "alpha_grid must be strictly ascending");
  }
  require(std::isfinite(alpha_subset_threshold) && alpha_subset_threshold > 0.0,
          "alpha_subset_threshold must be positive");
  require(std::isfinite(zeta_init) && zeta_init > 0.0, "zeta_init must be positive");
  require(max_iters >= 1, "max_iters must be at least 1");
  require(alpha_search_max_iters >= 1, "alpha_search_max_iters must be at least 1");
  require(grad_tolerance > 0.0, "grad_tolerance must be positive");
  require(nll_tolerance >= 0.0, "nll_tolerance must be non-negative");
  require(armijo_c > 0.0 && armijo_c < 1.0, "armijo_c must be in (0, 1)");
  require(armijo_shrink > 0.0 && armijo_shrink < 1.0, "armijo_shrink must be in (0, 1)");
  require(step_init > 0.0, "step_init must be positive");
  require(min_step > 0.0 && min_step <= step_init, "min_step must be in (0, step_init]");
  require(damping_init >= 0.0, "damping_init must be non-negative");
  require(sigma2_floor > 0.0, "sigma2_floor must be positive");
  require(position_scale > 0.0, "position_scale must be positive");
  require(std::isfinite(detection_threshold_db), "detection_threshold_db must be finite");
  require(collinear_offset >= 0.0, "collinear_offset must be non-negative");
  require(min_explained_drop_db >= 0.0, "min_explained_drop_db must be non-negative");
}

Eigen::VectorXd sigma2_closed_form(std::span<const Eigen::VectorXd> residuals) {
  Eigen::VectorXd out(static_cast<Index>(residuals.size()));
  for (std::size_t j = 0; j < residuals.size(); ++j) {
    if (residuals[j].size() == 0) throw std::invalid_argument("empty residual list");
    out[static_cast<Index>(j)] = residuals[j].squaredNorm() / static_cast<double>(residuals[j].size());
  }
  return out;
}

Vec3d initial_position(const MeasurementSet& meas, std::span<const Index> receivers,
                       double collinear_offset) {
  if (receivers.empty()) throw std::invalid_argument("no receivers to initialise from");
  return move_off_degenerate_geometry(mean_start(meas, receivers), meas, receivers,
                                      collinear_offset);
}

ReceiverFit alpha_single_receiver(const MeasurementSet& meas, Index receiver,
                                  const EstimatorConfig& config, const Vec3d& p0_init) {
  const IndexSet only{receiver};
  const Vec3d start =
      move_off_degenerate_geometry(p0_init, meas, only, config.collinear_offset);
  const Eigen::VectorXd sigma2_init =
      Eigen::VectorXd::Constant(1, std::max(meas.quiet_variance[receiver], config.sigma2_floor));
  const Eigen::VectorXd log_zeta_init = Eigen::VectorXd::Constant(1, std::log(config.zeta_init));

  EstimatorConfig search_config = config;
  search_config.max_iters = config.alpha_search_max_iters;

  ReceiverFit fit;
  fit.receiver = receiver;
  double worst = -kInf;
  double best_drop = 0.0;
  std::optional<Eigen::VectorXd> previous;
  double previous_alpha = 0.0;
  for (double alpha : config.alpha_grid) {
    const LikelihoodProblem problem(meas, only, Eigen::VectorXd::Constant(1, alpha),
                                    config.position_scale);
    DescentResult r = descend(problem, problem.pack(start, log_zeta_init), sigma2_init,
                              search_config, false);
    if (config.alpha_continuation && previous) {
      Eigen::VectorXd x0 = *previous;
      x0[3] += (alpha - previous_alpha) * mean_log_distance(meas, receiver, problem.position(x0));
      DescentResult warm = descend(problem, x0, sigma2_init, search_config, false);
      if (warm.nll < r.nll) r = std::move(warm);
    }
    if (!std::isfinite(r.nll)) continue;
    previous = r.x;
    previous_alpha = alpha;
    worst = std::max(worst, r.nll);
    // Strict comparison over the ascending grid: ties keep the smaller alpha.
    if (std::isfinite(fit.nll) && !(r.nll < fit.nll)) continue;
    fit.nll = r.nll;
    fit.alpha_hat = alpha;
    fit.zeta_hat = std::exp(r.x[3]);
    best_drop = problem.max_drop_db(r.x, 0);
  }
  const bool found = std::isfinite(fit.nll);
  const bool flat = found && config.alpha_grid.size() > 1 &&
                    worst - fit.nll <= 1e-9 * std::max(1.0, std::abs(fit.nll));
  fit.usable = found && !flat && best_drop >= config.min_explained_drop_db;
  return fit;
}

ReceiverFit alpha_single_receiver(const MeasurementSet& meas, Index receiver,
                                  const EstimatorConfig& config) {
  IndexSet jammed = jammed_receivers(meas, config.detection_threshold_db);
  if (jammed.empty()) jammed.push_back(receiver);
  return alpha_single_receiver(meas, receiver, config,
                               mean_start(meas, jammed));
}

IndexSet select_subset(std::span<const double> alpha_hats, double threshold) {
  IndexSet out;
  Index fallback = -1;
  for (std::size_t k = 0; k < alpha_hats.size(); ++k) {
    const double a = alpha_hats[k];
    if (!std::isfinite(a)) continue;
    if (a <= threshold) out.push_back(static_cast<Index>(k));
    if (fallback < 0 || a < alpha_hats[static_cast<std::size_t>(fallback)])
      fallback = static_cast<Index>(k);
  }
  if (out.empty() && fallback >= 0) out.push_back(fallback);
  return out;
}

PositionEstimate joint_estimate(const MeasurementSet& meas, const EstimatorConfig& config) {
  config.validate();
  meas.validate();
  const IndexSet jammed = jammed_receivers(meas, config.detection_threshold_db);
  if (jammed.empty()) throw EstimationUnavailable("no receiver detected the jammer");

  const Vec3d p0_init = mean_start(meas, jammed);
  const Vec3d grid_start = move_off_degenerate_geometry(p0_init, meas, jammed, config.collinear_offset);

  PositionEstimate est;
  std::vector<double> alpha_hats;
  for (Index i : jammed) {
    est.receiver_fits.push_back(alpha_single_receiver(meas, i, config, grid_start));
    const ReceiverFit& fit = est.receiver_fits.back();
    alpha_hats.push_back(fit.usable ? fit.alpha_hat : std::numeric_limits<double>::quiet_NaN());
  }

  for (Index k : select_subset(alpha_hats, config.alpha_subset_threshold))
    est.selected.push_back(jammed[static_cast<std::size_t>(k)]);
  if (est.selected.empty()) throw EstimationUnavailable("no usable receiver after the alpha search");

  const auto k = static_cast<Index>(est.selected.size());
  Eigen::VectorXd alpha(k), log_zeta(k), sigma2(k);
  for (Index j = 0; j < k; ++j) {
    const Index i = est.selected[static_cast<std::size_t>(j)];
    const auto fit = std::find_if(est.receiver_fits.begin(), est.receiver_fits.end(),
                                  [i](const ReceiverFit& f) { return f.receiver == i; });
    alpha[j] = fit->alpha_hat;
    log_zeta[j] = std::log(fit->zeta_hat);
    sigma2[j] = std::max(meas.quiet_variance[i], config.sigma2_floor);
  }

  const Vec3d start =
      move_off_degenerate_geometry(p0_init, meas, est.selected, config.collinear_offset);
  const LikelihoodProblem problem(meas, est.selected, alpha, config.position_scale);
  DescentResult r = descend(problem, problem.pack(start, log_zeta), sigma2, config, true);

  est.p0_hat = problem.position(r.x);
  est.nuisance.alpha = alpha;
  est.nuisance.zeta = r.x.tail(k).array().exp();
  est.nuisance.sigma2 = r.sigma2;
  est.nll = r.nll;
  est.iterations = r.iterations;
  est.converged = r.converged && est.p0_hat.allFinite();
  est.nll_trace = std::move(r.trace);
  return est;
}

}  // namespace jamloc
