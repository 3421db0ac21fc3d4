#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crannpc/scenario.hpp"

namespace crannpc {

enum class ExperimentKind {
  kTightness,
  kAdmittedVsRmin,
  kAdmittedVsX,
  kNpcVsX,
  kAdmittedVsY,
  kNpcVsY,
  kAdmittedVsCmax,
  kNpcVsCmax,
  kConvergenceTrace,
};

std::string to_string(ExperimentKind kind);
// Throws ConfigError listing the valid names.
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kAdmittedVsRmin;
  std::vector<double> sweep;  // empty: default_sweep(kind)
  int trials = 10;
  ScenarioConfig base;
  std::string output_dir = "results";
  std::uint64_t seed = 1;
  unsigned threads = 0;        // 0: hardware concurrency
  long mc_samples = 100000;    // tightness only
  double d_km = 3.0;           // tightness only

  void validate() const;
};

std::vector<double> default_sweep(ExperimentKind kind);

struct LoadedConfig {
  ScenarioConfig scenario;
  ExperimentSpec experiment;
  bool desk_scale = false;
};

// JSON object whose keys are ScenarioConfig field names plus experiment keys
// (experiment, sweep, trials, seed, out, threads, mc_samples, d_km, desk_scale).
// Empty input gives the defaults. Unknown keys raise ConfigError listing the valid ones.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& path);
std::vector<std::string> valid_config_keys();

struct ResultTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

struct ExperimentResult {
  ResultTable trials;   // one or more rows per (point, trial), each with its seed
  ResultTable summary;  // per point and metric: mean, standard error, count
  std::string report;   // structured text: config echo and summary
  int failed_trials = 0;
  int invariant_failures = 0;
};

// Seed of trial t; independent of the sweep point so points share drops.
std::uint64_t trial_seed(std::uint64_t master, int trial);

ExperimentResult run_experiment(const ExperimentSpec& spec);
// Writes trials.csv, summary.csv and report.txt into spec.output_dir.
void write_experiment(const ExperimentResult& result, const std::string& output_dir);

struct TightnessPoint {
  double power_dbm = 0.0;
  double lower_bound = 0.0;
  double exact = 0.0;
  double monte_carlo = 0.0;
  double mc_std_error = 0.0;
};

// Center UE of the nine-square grid; every RRH sends its maximum power along
// the matched-filter direction to its own UE on one subchannel.
TightnessPoint tightness_point(double d_km, double power_dbm, long samples, std::uint64_t seed,
                               const ScenarioConfig& base = {});

}  // namespace crannpc
