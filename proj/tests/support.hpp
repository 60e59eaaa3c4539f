#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "jamloc/estimator.hpp"

namespace support {

using jamloc::Index;
using jamloc::Positions3d;
using jamloc::Vec3d;

// Received level straight from the path-loss formula, in long double.
inline long double oracle_level(long double quiet, long double zeta, long double alpha,
                                long double d) {
  return quiet - 10.0L * std::log1p(zeta * std::pow(d, -alpha)) / std::log(10.0L);
}

inline Positions3d linear_track(const Vec3d& start, const Vec3d& velocity, Index n, double dt) {
  Positions3d p(3, n);
  for (Index k = 0; k < n; ++k) p.col(k) = start + velocity * (dt * static_cast<double>(k));
  return p;
}

inline Positions3d stationary(const Vec3d& at, Index n) {
  return linear_track(at, Vec3d::Zero(), n, 1.0);
}

struct Emitter {
  Vec3d position = Vec3d::Zero();
  std::vector<double> zeta;
  std::vector<double> alpha;
};

// Jammed-window measurements built from the oracle, with optional white dB noise.
inline jamloc::MeasurementSet make_measurements(const Emitter& jammer,
                                                const std::vector<Positions3d>& tracks,
                                                double quiet_db = 0.0, double noise_var = 0.0,
                                                unsigned seed = 7) {
  const auto nr = static_cast<Index>(tracks.size());
  const Index n = tracks.front().cols();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));

  jamloc::MeasurementSet m;
  m.values.resize(n, nr);
  m.quiet_baseline = Eigen::VectorXd::Constant(nr, quiet_db);
  m.quiet_variance = Eigen::VectorXd::Constant(nr, noise_var);
  m.noise_var_true = m.quiet_variance;
  m.start_positions.resize(3, nr);
  m.times = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  for (Index i = 0; i < nr; ++i) {
    const auto& track = tracks[static_cast<std::size_t>(i)];
    m.positions.push_back(track);
    m.start_positions.col(i) = track.col(0);
    for (Index k = 0; k < n; ++k) {
      const double d = (track.col(k) - jammer.position).norm();
      const auto ii = static_cast<std::size_t>(i);
      m.values(k, i) = static_cast<double>(oracle_level(quiet_db, jammer.zeta[ii], jammer.alpha[ii], d)) +
                       (noise_var > 0.0 ? noise(rng) : 0.0);
    }
  }
  return m;
}

inline Emitter uniform_emitter(const Vec3d& at, std::size_t receivers, double zeta, double alpha) {
  return {at, std::vector<double>(receivers, zeta), std::vector<double>(receivers, alpha)};
}

inline std::vector<Positions3d> crossing_tracks(std::size_t count, Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-800.0, 800.0);
  std::vector<Positions3d> tracks;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3d start(u(rng), u(rng), u(rng));
    const Vec3d velocity = Vec3d(u(rng), u(rng), u(rng)).normalized() * 1.5;
    tracks.push_back(linear_track(start, velocity, n, 7.5));
  }
  return tracks;
}

inline jamloc::IndexSet all_of(const jamloc::MeasurementSet& m) {
  jamloc::IndexSet s;
  for (Index i = 0; i < m.n_receivers(); ++i) s.push_back(i);
  return s;
}

// Relative error of the analytic NLL gradient against long double central
// differences, over (p0, log zeta), for one random instance with 1-4 receivers.
inline double gradient_relative_error(std::mt19937_64& rng) {
  using LVec3 = jamloc::Vec3<long double>;
  using LVecX = jamloc::VecX<long double>;
  std::uniform_real_distribution<double> pos(-1000.0, 1000.0), lz(std::log(1e6), std::log(1e10)),
      al(1.6, 4.0), s2(0.05, 3.0);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_int_distribution<unsigned> seeds;
  for (;;) {
    const auto k = static_cast<std::size_t>(count(rng));
    Emitter e{Vec3d(pos(rng), pos(rng), pos(rng)), {}, {}};
    for (std::size_t i = 0; i < k; ++i) {
      e.zeta.push_back(std::exp(lz(rng)));
      e.alpha.push_back(al(rng));
    }
    const auto m = make_measurements(e, crossing_tracks(k, 20, seeds(rng)), 0.0, 0.3, seeds(rng));
    const Vec3d p0(pos(rng), pos(rng), pos(rng));
    bool far = true;
    for (const auto& t : m.positions)
      for (Index n = 0; n < t.cols(); ++n) far = far && (t.col(n) - p0).norm() > 50.0;
    if (!far) continue;

    const auto kk = static_cast<Index>(k);
    Eigen::VectorXd log_zeta(kk), alpha(kk), sigma2(kk);
    for (Index j = 0; j < kk; ++j) {
      log_zeta[j] = lz(rng);
      alpha[j] = al(rng);
      sigma2[j] = s2(rng);
    }
    const jamloc::IndexSet subset = all_of(m);
    const auto g = jamloc::nll_gradient<double>(p0, Eigen::VectorXd(log_zeta.array().exp()), alpha,
                                                sigma2, m, subset);

    const LVecX la = alpha.cast<long double>(), ls = sigma2.cast<long double>();
    auto f = [&](const LVec3& p, const LVecX& lzeta) {
      return jamloc::neg_log_likelihood<long double>(p, LVecX(lzeta.array().exp()), la, ls, m, subset);
    };
    const LVec3 lp = p0.cast<long double>();
    const LVecX llz = log_zeta.cast<long double>();
    Eigen::VectorXd fd(3 + kk), an(3 + kk);
    for (int a = 0; a < 3; ++a) {
      const long double h = 1e-6L * std::max(1.0L, std::abs(lp[a]));
      LVec3 up = lp, dn = lp;
      up[a] += h;
      dn[a] -= h;
      fd[a] = static_cast<double>((f(up, llz) - f(dn, llz)) / (2.0L * h));
      an[a] = g.position[a];
    }
    for (Index j = 0; j < kk; ++j) {
      const long double h = 1e-6L * std::max(1.0L, std::abs(llz[j]));
      LVecX up = llz, dn = llz;
      up[j] += h;
      dn[j] -= h;
      fd[3 + j] = static_cast<double>((f(lp, up) - f(lp, dn)) / (2.0L * h));
      an[3 + j] = g.log_zeta[j];
    }
    return (an - fd).norm() / fd.norm();
  }
}

// Minimiser of the NLL of receiver i over sigma2 alone: coarse scan of log
// sigma2, then golden section.
inline double brute_force_sigma2(const jamloc::MeasurementSet& m, Index i, const Vec3d& p0,
                                 double zeta, double alpha) {
  using LVecX = jamloc::VecX<long double>;
  auto f = [&](long double log_s) {
    return jamloc::neg_log_likelihood<long double>(
        p0.cast<long double>(), LVecX::Constant(1, zeta), LVecX::Constant(1, alpha),
        LVecX::Constant(1, std::exp(log_s)), m, jamloc::IndexSet{i});
  };
  long double best = -10.0L;
  for (long double x = -10.0L; x <= 10.0L; x += 0.01L)
    if (f(x) < f(best)) best = x;
  long double a = best - 0.02L, b = best + 0.02L;
  const long double phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  while (b - a > 1e-13L) {
    const long double c = b - phi * (b - a), d = a + phi * (b - a);
    if (f(c) < f(d)) b = d;
    else a = c;
  }
  return static_cast<double>(std::exp((a + b) / 2.0L));
}

}  // namespace support
