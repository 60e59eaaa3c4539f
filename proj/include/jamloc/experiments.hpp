#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jamloc/channel.hpp"
#include "jamloc/estimator.hpp"
#include "jamloc/scenario.hpp"

namespace jamloc {

enum class SweepFamily {
  ReceiverSweep,
  RoadSweep,
  NoiseSweep,
  ZetaInitSweep,
  CnirReceiverSweep,
  CnirNoiseSweep,
};

enum class Method { Proposed, Centroid, Ls };

std::string_view to_string(SweepFamily family);
std::string_view to_string(Method method);
std::optional<SweepFamily> parse_family(std::string_view name);
std::optional<Method> parse_method(std::string_view name);

struct SweepSpec {
  SweepFamily family = SweepFamily::ReceiverSweep;
  std::vector<double> sweep_values;
  int trials = 200;
  std::uint64_t seed = 1;
  ScenarioConfig base;
  EstimatorConfig estimator;
  std::vector<Method> methods{Method::Proposed, Method::Centroid, Method::Ls};
  MeasurementKind kind = MeasurementKind::Agc;
  unsigned workers = 0;  // 0: hardware concurrency
  // Called after each finished trial with (done, total); may run on any worker.
  std::function<void(int, int)> progress;

  void validate() const;
};

// Family defaults: sweep values, receiver count and measurement kind.
SweepSpec default_sweep_spec(SweepFamily family);

// Scenario and estimator settings for one point of the sweep.
void apply_sweep_value(SweepFamily family, double value, ScenarioConfig& scenario,
                       EstimatorConfig& estimator);

struct MethodStats {
  double value = 0.0;
  Method method = Method::Proposed;
  int trials = 0;
  int failures = 0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
  std::vector<double> errors;  // successful trials, in trial order
};

struct SweepResult {
  SweepFamily family = SweepFamily::ReceiverSweep;
  bool horizontal_error = false;  // 2D error (road), otherwise 3D
  std::vector<MethodStats> rows;  // sweep-value major, then method

  const MethodStats* find(double value, Method method) const;
};

// Linear interpolation between closest ranks (q in [0, 1]). NaN for no data.
double percentile(std::vector<double> values, double q);

// Per-trial RNG seed. Depends on the master seed and trial index only, so every
// sweep value sees the same draws (common random numbers).
std::uint64_t trial_seed(std::uint64_t master_seed, int trial);

struct TrialOutcome {
  std::optional<double> error;  // empty on failure
};

// Runs one trial for all methods of `spec` at `value`.
std::vector<TrialOutcome> run_trial(const SweepSpec& spec, double value, int trial);

SweepResult run_sweep(const SweepSpec& spec);

// value,method,n_trials,n_failures,p25,median,p75
void export_csv(const SweepResult& result, std::ostream& out);
// Throws std::runtime_error on I/O failure.
void export_csv(const SweepResult& result, const std::filesystem::path& path);

}  // namespace jamloc
