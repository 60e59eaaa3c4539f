// Command-line front end: Monte Carlo sweeps and single-scenario estimates.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jamloc/baselines.hpp"
#include "jamloc/config.hpp"
#include "jamloc/experiments.hpp"

namespace {

using namespace jamloc;

struct CommonOptions {
  std::uint64_t seed = 1;
  std::string config_path;
  std::string methods = "proposed,centroid,ls";
  std::string kind;
};

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto m = parse_method(item);
    if (!m) throw std::invalid_argument("unknown method '" + item + "'");
    out.push_back(*m);
  }
  return out;
}

MeasurementKind parse_kind(const std::string& kind) {
  if (kind == "agc") return MeasurementKind::Agc;
  if (kind == "cnir") return MeasurementKind::Cnir;
  throw std::invalid_argument("--kind must be agc or cnir");
}

RunConfig load_config(const std::string& path, RunConfig defaults) {
  if (path.empty()) return defaults;
  return load_run_config(path, std::move(defaults));
}

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--seed", opt.seed, "Master RNG seed");
  cmd->add_option("--config", opt.config_path, "JSON config file (scenario / estimator sections)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--methods", opt.methods, "Comma-separated subset of proposed,centroid,ls");
  cmd->add_option("--kind", opt.kind, "Measurement kind: agc or cnir");
}

int run_sweep_command(SweepFamily family, const CommonOptions& opt, int trials,
                      const std::vector<double>& values, const std::string& out_path,
                      unsigned workers, bool quiet) {
  SweepSpec spec = default_sweep_spec(family);
  const RunConfig cfg = load_config(opt.config_path, {spec.base, spec.estimator});
  spec.base = cfg.scenario;
  spec.estimator = cfg.estimator;
  if (family == SweepFamily::RoadSweep) spec.base.geometry = Geometry::RoadLine;
  spec.trials = trials;
  spec.seed = opt.seed;
  spec.workers = workers;
  spec.methods = parse_methods(opt.methods);
  if (!opt.kind.empty()) spec.kind = parse_kind(opt.kind);
  if (!values.empty()) spec.sweep_values = values;
  if (!quiet) {
    spec.progress = [](int done, int total) {
      if (done == total || done % 10 == 0) std::fprintf(stderr, "\r%d / %d trials", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }

  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult result = run_sweep(spec);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!out_path.empty()) export_csv(result, std::filesystem::path(out_path));
  else export_csv(result, std::cout);
  if (!quiet)
    std::fprintf(stderr, "%s: %zu rows, %s error, %.1f s\n", std::string(to_string(family)).c_str(),
                 result.rows.size(), result.horizontal_error ? "2D" : "3D", secs);
  return 0;
}

int run_estimate_command(const CommonOptions& opt, const std::string& measurements_out) {
  const RunConfig cfg = load_config(opt.config_path, {});
  ScenarioConfig scenario = cfg.scenario;
  scenario.rng_seed = opt.seed;
  const MeasurementKind kind = opt.kind.empty() ? MeasurementKind::Agc : parse_kind(opt.kind);

  const ScenarioTruth truth = generate_scenario(scenario);
  const MeasurementSet meas = synthesize(truth, scenario, kind);
  if (!measurements_out.empty()) {
    std::ofstream f(measurements_out);
    if (!f) throw std::runtime_error("cannot open " + measurements_out);
    write_csv(meas, f);
  }

  nlohmann::json out = {
      {"truth", {{"position", {truth.jammer_pos.x(), truth.jammer_pos.y(), truth.jammer_pos.z()}},
                 {"alpha", std::vector<double>(truth.alpha.begin(), truth.alpha.end())},
                 {"zeta", truth.zeta[0]}}},
      {"estimates", nlohmann::json::array()}};
  for (Method m : parse_methods(opt.methods)) {
    const std::string name(to_string(m));
    try {
      switch (m) {
        case Method::Proposed:
          out["estimates"].push_back(estimate_to_json(joint_estimate(meas, cfg.estimator), name));
          break;
        case Method::Centroid:
          out["estimates"].push_back(
              estimate_to_json(centroid_estimate(meas, cfg.estimator.detection_threshold_db), name));
          break;
        case Method::Ls:
          out["estimates"].push_back(estimate_to_json(
              ls_estimate(meas, {truth.zeta.data(), static_cast<std::size_t>(truth.zeta.size())},
                          cfg.estimator.detection_threshold_db),
              name));
          break;
      }
    } catch (const EstimationUnavailable& e) {
      out["estimates"].push_back({{"method", name}, {"position", nullptr}, {"error", e.what()}});
    }
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GNSS jammer localisation from crowdsourced AGC / CNIR drops"};
  app.require_subcommand(1);

  CommonOptions opt;
  int trials = 200;
  std::vector<double> values;
  std::string out_path;
  unsigned workers = 0;
  bool quiet = false;

  std::vector<std::pair<CLI::App*, SweepFamily>> sweeps;
  for (SweepFamily f : {SweepFamily::ReceiverSweep, SweepFamily::RoadSweep, SweepFamily::NoiseSweep,
                        SweepFamily::ZetaInitSweep, SweepFamily::CnirReceiverSweep,
                        SweepFamily::CnirNoiseSweep}) {
    const std::string name(to_string(f));
    CLI::App* cmd = app.add_subcommand(name, "Monte Carlo " + name);
    add_common(cmd, opt);
    cmd->add_option("--trials", trials, "Monte Carlo trials per sweep value")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--values", values, "Override the sweep values")->delimiter(',');
    cmd->add_option("--out", out_path, "CSV output path (default: stdout)");
    cmd->add_option("--workers", workers, "Worker threads (default: all cores)");
    cmd->add_flag("--quiet", quiet, "No progress output");
    sweeps.emplace_back(cmd, f);
  }

  std::string measurements_out;
  CLI::App* estimate = app.add_subcommand("estimate", "Simulate one scenario and print JSON estimates");
  add_common(estimate, opt);
  estimate->add_option("--measurements", measurements_out, "Also write the measurement CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [cmd, family] : sweeps)
      if (cmd->parsed())
        return run_sweep_command(family, opt, trials, values, out_path, workers, quiet);
    if (estimate->parsed()) return run_estimate_command(opt, measurements_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
