#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "crannpc/harness.hpp"
#include "crannpc/log.hpp"
#include "crannpc/types.hpp"
#include "crannpc/verify.hpp"

using namespace crannpc;

namespace {

int run(const std::string& config_path, const std::string& experiment, long seed, int trials, const std::string& out,
        bool desk, unsigned threads) {
  LoadedConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
  ExperimentSpec spec = cfg.experiment;
  if (desk && !cfg.desk_scale) spec.base = desk_scale(spec.base);
  if (!experiment.empty()) spec.kind = parse_experiment_kind(experiment);
  if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
  if (trials > 0) spec.trials = trials;
  if (!out.empty()) spec.output_dir = out;
  if (threads > 0) spec.threads = threads;
  spec.validate();

  const ExperimentResult res = run_experiment(spec);
  write_experiment(res, spec.output_dir);
  std::cout << res.summary.to_csv();
  std::cerr << "wrote " << spec.output_dir << "/{trials.csv,summary.csv,report.txt}\n";
  if (res.failed_trials > 0) std::cerr << res.failed_trials << " trials failed\n";
  if (res.invariant_failures > 0) {
    std::cerr << res.invariant_failures << " invariant violations, see report.txt\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network power minimization and user admission for cache-free C-RAN with partial CSI"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "info and debug logging");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  auto* run_cmd = app.add_subcommand("run", "run an experiment sweep and write CSV + report");
  std::string config_path, experiment, out;
  long seed = -1;
  int trials = 0;
  unsigned threads = 0;
  bool desk = false;
  run_cmd->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run_cmd->add_option("-e,--experiment", experiment, "experiment name (overrides the config)");
  run_cmd->add_option("-s,--seed", seed, "master seed");
  run_cmd->add_option("-t,--trials", trials, "trials per sweep point");
  run_cmd->add_option("-o,--out", out, "output directory");
  run_cmd->add_option("-j,--threads", threads, "worker threads (0: all cores)");
  run_cmd->add_flag("--desk-scale", desk, "shrink the network to desk scale");

  auto* tight_cmd = app.add_subcommand("tightness", "lower bound, exact and Monte-Carlo rate on the grid scenario");
  double d_km = 3.0;
  long samples = 100000;
  long tseed = 1;
  tight_cmd->add_option("--d-km", d_km, "grid spacing in km")->check(CLI::PositiveNumber);
  tight_cmd->add_option("--samples", samples, "Monte-Carlo samples per point")->check(CLI::PositiveNumber);
  tight_cmd->add_option("--seed", tseed, "Monte-Carlo seed");

  auto* verify_cmd = app.add_subcommand("verify", "run the self-checks, one PASS/FAIL line each");
  bool quick = false;
  verify_cmd->add_flag("--quick", quick, "10% instance counts");

  CLI11_PARSE(app, argc, argv);
  set_log_level(quiet ? LogLevel::kQuiet : verbose ? LogLevel::kDebug : LogLevel::kWarning);

  try {
    if (*run_cmd) return run(config_path, experiment, seed, trials, out, desk, threads);
    if (*tight_cmd) {
      std::printf("power_dbm,lower_bound,exact,monte_carlo,mc_std_error\n");
      for (double p : default_sweep(ExperimentKind::kTightness)) {
        const TightnessPoint t = tightness_point(d_km, p, samples, static_cast<std::uint64_t>(tseed));
        std::printf("%g,%.9g,%.9g,%.9g,%.3g\n", t.power_dbm, t.lower_bound, t.exact, t.monte_carlo, t.mc_std_error);
      }
      return 0;
    }
    if (*verify_cmd) {
      VerifyOptions o;
      if (quick) o.scale = 0.1;
      bool ok = true;
      run_all_checks(o, [&](const CheckResult& r) {
        std::cout << format_check(r) << std::endl;
        ok = ok && r.passed;
      });
      return ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
