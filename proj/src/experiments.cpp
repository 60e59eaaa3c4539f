#include "jamloc/experiments.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "jamloc/baselines.hpp"

namespace jamloc {

namespace {

constexpr std::array<std::pair<SweepFamily, std::string_view>, 6> kFamilyNames{{
    {SweepFamily::ReceiverSweep, "receiver_sweep"},
    {SweepFamily::RoadSweep, "road_sweep"},
    {SweepFamily::NoiseSweep, "noise_sweep"},
    {SweepFamily::ZetaInitSweep, "zeta_init_sweep"},
    {SweepFamily::CnirReceiverSweep, "cnir_receiver_sweep"},
    {SweepFamily::CnirNoiseSweep, "cnir_noise_sweep"},
}};

constexpr std::array<std::pair<Method, std::string_view>, 3> kMethodNames{{
    {Method::Proposed, "proposed"},
    {Method::Centroid, "centroid"},
    {Method::Ls, "ls"},
}};

bool is_receiver_count_sweep(SweepFamily f) {
  return f == SweepFamily::ReceiverSweep || f == SweepFamily::RoadSweep ||
         f == SweepFamily::CnirReceiverSweep;
}

bool is_cnir_family(SweepFamily f) {
  return f == SweepFamily::CnirReceiverSweep || f == SweepFamily::CnirNoiseSweep;
}

std::vector<double> receiver_counts() { return {3, 5, 7, 10, 13, 16, 19, 22, 26, 30}; }

std::optional<Vec3d> run_method(Method method, const MeasurementSet& meas,
                                const ScenarioTruth& truth, const EstimatorConfig& config) {
  try {
    switch (method) {
      case Method::Proposed: {
        const PositionEstimate est = joint_estimate(meas, config);
        if (!est.converged) return std::nullopt;
        return est.p0_hat;
      }
      case Method::Centroid:
        return centroid_estimate(meas, config.detection_threshold_db);
      case Method::Ls: {
        const LsResult r = ls_estimate(
            meas, {truth.zeta.data(), static_cast<std::size_t>(truth.zeta.size())},
            config.detection_threshold_db);
        return r.position;
      }
    }
  } catch (const EstimationUnavailable&) {
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(SweepFamily family) {
  for (const auto& [f, name] : kFamilyNames)
    if (f == family) return name;
  return "unknown";
}

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

std::optional<SweepFamily> parse_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames)
    if (n == name) return f;
  return std::nullopt;
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames)
    if (n == name) return m;
  return std::nullopt;
}

void SweepSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (sweep_values.empty()) throw std::invalid_argument("sweep_values must not be empty");
  if (is_cnir_family(family) && kind != MeasurementKind::Cnir)
    throw std::invalid_argument(std::string(to_string(family)) + " requires CNIR measurements");
  for (double v : sweep_values) {
    if (!std::isfinite(v)) throw std::invalid_argument("sweep values must be finite");
    if (is_receiver_count_sweep(family) && (v != std::round(v) || v < 3))
      throw std::invalid_argument("receiver counts must be integers >= 3");
  }
  for (double v : sweep_values) {
    ScenarioConfig s = base;
    EstimatorConfig e = estimator;
    apply_sweep_value(family, v, s, e);
    s.validate();
    e.validate();
  }
}

SweepSpec default_sweep_spec(SweepFamily family) {
  SweepSpec spec;
  spec.family = family;
  switch (family) {
    case SweepFamily::ReceiverSweep:
    case SweepFamily::RoadSweep:
      spec.sweep_values = receiver_counts();
      break;
    case SweepFamily::CnirReceiverSweep:
      spec.sweep_values = receiver_counts();
      spec.kind = MeasurementKind::Cnir;
      break;
    case SweepFamily::NoiseSweep:
      spec.base.n_receivers = 7;
      for (int k = 0; k < 10; ++k) spec.sweep_values.push_back(0.1 + k * (3.0 - 0.1) / 9.0);
      break;
    case SweepFamily::ZetaInitSweep:
      spec.base.n_receivers = 7;
      spec.sweep_values = {1e7, std::pow(10.0, 7.5), 1e8, std::pow(10.0, 8.5), 1e9};
      spec.methods = {Method::Proposed};
      break;
    case SweepFamily::CnirNoiseSweep:
      spec.base.n_receivers = 7;
      spec.sweep_values = {1, 2, 3, 4, 5};
      spec.kind = MeasurementKind::Cnir;
      break;
  }
  if (family == SweepFamily::RoadSweep) spec.base.geometry = Geometry::RoadLine;
  return spec;
}

void apply_sweep_value(SweepFamily family, double value, ScenarioConfig& scenario,
                       EstimatorConfig& estimator) {
  switch (family) {
    case SweepFamily::RoadSweep:
      scenario.geometry = Geometry::RoadLine;
      [[fallthrough]];
    case SweepFamily::ReceiverSweep:
    case SweepFamily::CnirReceiverSweep:
      scenario.n_receivers = static_cast<int>(std::lround(value));
      break;
    case SweepFamily::NoiseSweep:
      scenario.agc_noise_var = value;
      break;
    case SweepFamily::CnirNoiseSweep:
      scenario.cnir_noise_var = value;
      break;
    case SweepFamily::ZetaInitSweep:
      estimator.zeta_init = value;
      break;
  }
}

const MethodStats* SweepResult::find(double value, Method method) const {
  for (const auto& row : rows)
    if (row.value == value && row.method == method) return &row;
  return nullptr;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("percentile rank must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(trial));
}

std::vector<TrialOutcome> run_trial(const SweepSpec& spec, double value, int trial) {
  ScenarioConfig scenario = spec.base;
  EstimatorConfig estimator = spec.estimator;
  apply_sweep_value(spec.family, value, scenario, estimator);
  scenario.rng_seed = trial_seed(spec.seed, trial);

  const ScenarioTruth truth = generate_scenario(scenario);
  const MeasurementSet meas = synthesize(truth, scenario, spec.kind);
  const bool horizontal = scenario.geometry == Geometry::RoadLine;

  std::vector<TrialOutcome> out;
  out.reserve(spec.methods.size());
  for (Method m : spec.methods) {
    TrialOutcome o;
    if (const auto p = run_method(m, meas, truth, estimator)) {
      const Vec3d err = *p - truth.jammer_pos;
      o.error = horizontal ? err.head<2>().norm() : err.norm();
      if (!std::isfinite(*o.error)) o.error.reset();
    }
    out.push_back(o);
  }
  return out;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto n_values = spec.sweep_values.size();
  const auto n_trials = static_cast<std::size_t>(spec.trials);
  const std::size_t total = n_values * n_trials;
  std::vector<std::vector<TrialOutcome>> outcomes(total);

  unsigned workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));

  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      try {
        outcomes[job] = run_trial(spec, spec.sweep_values[job / n_trials],
                                  static_cast<int>(job % n_trials));
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = total;
        return;
      }
      const int finished = ++done;
      if (spec.progress) spec.progress(finished, static_cast<int>(total));
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  SweepResult result;
  result.family = spec.family;
  ScenarioConfig probe = spec.base;
  EstimatorConfig probe_est = spec.estimator;
  apply_sweep_value(spec.family, spec.sweep_values.front(), probe, probe_est);
  result.horizontal_error = probe.geometry == Geometry::RoadLine;

  for (std::size_t v = 0; v < n_values; ++v) {
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      MethodStats stats;
      stats.value = spec.sweep_values[v];
      stats.method = spec.methods[m];
      stats.trials = spec.trials;
      for (std::size_t t = 0; t < n_trials; ++t) {
        const auto& o = outcomes[v * n_trials + t][m];
        if (o.error) stats.errors.push_back(*o.error);
        else ++stats.failures;
      }
      stats.p25 = percentile(stats.errors, 0.25);
      stats.median = percentile(stats.errors, 0.5);
      stats.p75 = percentile(stats.errors, 0.75);
      result.rows.push_back(std::move(stats));
    }
  }
  return result;
}

void export_csv(const SweepResult& result, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision(12);
  out << "value,method,n_trials,n_failures,p25,median,p75\n";
  for (const auto& row : result.rows) {
    out << row.value << ',' << to_string(row.method) << ',' << row.trials << ',' << row.failures
        << ',' << row.p25 << ',' << row.median << ',' << row.p75 << '\n';
  }
  out.precision(precision);
  out.flags(flags);
}

void export_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  export_csv(result, file);
  file.flush();
  if (!file) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace jamloc
