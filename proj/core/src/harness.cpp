#include "crannpc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <variant>

#include "json.hpp"

#include "crannpc/channel.hpp"
#include "crannpc/log.hpp"
#include "crannpc/orchestrator.hpp"
#include "crannpc/rate.hpp"
#include "crannpc/rng.hpp"

namespace crannpc {
namespace {

using json = nlohmann::json;

const std::vector<std::pair<ExperimentKind, const char*>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, const char*>> names = {
      {ExperimentKind::kTightness, "tightness"},
      {ExperimentKind::kAdmittedVsRmin, "admitted_vs_rmin"},
      {ExperimentKind::kAdmittedVsX, "admitted_vs_X"},
      {ExperimentKind::kNpcVsX, "npc_vs_X"},
      {ExperimentKind::kAdmittedVsY, "admitted_vs_Y"},
      {ExperimentKind::kNpcVsY, "npc_vs_Y"},
      {ExperimentKind::kAdmittedVsCmax, "admitted_vs_cmax"},
      {ExperimentKind::kNpcVsCmax, "npc_vs_cmax"},
      {ExperimentKind::kConvergenceTrace, "convergence_trace"},
  };
  return names;
}

using Field = std::variant<double ScenarioConfig::*, int ScenarioConfig::*, std::uint64_t ScenarioConfig::*>;

const std::vector<std::pair<std::string, Field>>& scenario_fields() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"area_half_width_m", &ScenarioConfig::area_half_width_m},
      {"num_rrh", &ScenarioConfig::num_rrh},
      {"num_ue", &ScenarioConfig::num_ue},
      {"antennas_per_rrh", &ScenarioConfig::antennas_per_rrh},
      {"num_subchannels", &ScenarioConfig::num_subchannels},
      {"serving_cluster_size", &ScenarioConfig::serving_cluster_size},
      {"csi_cluster_size", &ScenarioConfig::csi_cluster_size},
      {"per_rrh_power_cap_w", &ScenarioConfig::per_rrh_power_cap_w},
      {"fronthaul_cap_normalized", &ScenarioConfig::fronthaul_cap_normalized},
      {"rate_target", &ScenarioConfig::rate_target},
      {"amplifier_inefficiency", &ScenarioConfig::amplifier_inefficiency},
      {"active_power_w", &ScenarioConfig::active_power_w},
      {"sleep_power_w", &ScenarioConfig::sleep_power_w},
      {"fronthaul_scale", &ScenarioConfig::fronthaul_scale},
      {"noise_psd_dbm_hz", &ScenarioConfig::noise_psd_dbm_hz},
      {"bandwidth_hz", &ScenarioConfig::bandwidth_hz},
      {"smoothing_theta", &ScenarioConfig::smoothing_theta},
      {"tolerance_delta", &ScenarioConfig::tolerance_delta},
      {"zero_power_threshold_w", &ScenarioConfig::zero_power_threshold_w},
      {"rng_seed", &ScenarioConfig::rng_seed},
  };
  return fields;
}

const std::vector<std::string>& experiment_keys() {
  static const std::vector<std::string> keys = {"experiment", "sweep",      "trials", "seed",      "out",
                                                "threads",    "mc_samples", "d_km",   "desk_scale"};
  return keys;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

std::string field_text(const ScenarioConfig& c, const Field& f) {
  return std::visit(
      [&](auto ptr) -> std::string {
        std::ostringstream o;
        o.precision(10);
        o << c.*ptr;
        return o.str();
      },
      f);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' expects a number");
  return v.get<double>();
}

long integer(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("config key '" + key + "' expects an integer");
  return v.get<long>();
}

void apply_point(ExperimentKind kind, double value, ScenarioConfig& c) {
  switch (kind) {
    case ExperimentKind::kAdmittedVsRmin:
      c.rate_target = value;
      break;
    case ExperimentKind::kAdmittedVsX:
    case ExperimentKind::kNpcVsX:
      c.serving_cluster_size = static_cast<int>(std::lround(value));
      break;
    case ExperimentKind::kAdmittedVsY:
    case ExperimentKind::kNpcVsY:
      c.csi_cluster_size = static_cast<int>(std::lround(value));
      break;
    case ExperimentKind::kAdmittedVsCmax:
    case ExperimentKind::kNpcVsCmax:
      c.fronthaul_cap_normalized = value;
      break;
    case ExperimentKind::kTightness:
    case ExperimentKind::kConvergenceTrace:
      break;
  }
}

struct TrialOutput {
  std::vector<std::vector<std::string>> rows;  // without the leading point/trial/seed columns
  std::vector<double> metrics;
  bool invariant_failure = false;
  std::string error;
};

struct KindLayout {
  std::vector<std::string> columns;  // after point, trial, seed
  std::vector<std::string> metrics;
};

KindLayout layout(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTightness:
      return {{"d_km", "lower_bound", "exact", "monte_carlo", "mc_std_error", "status"},
              {"lower_bound", "exact", "monte_carlo"}};
    case ExperimentKind::kAdmittedVsRmin:
    case ExperimentKind::kAdmittedVsX:
    case ExperimentKind::kAdmittedVsY:
    case ExperimentKind::kAdmittedVsCmax:
      return {{"joint_bues", "mf_bues", "exhaustive", "joint_p10_calls", "status"},
              {"joint_bues", "mf_bues", "exhaustive"}};
    case ExperimentKind::kNpcVsX:
    case ExperimentKind::kNpcVsY:
    case ExperimentKind::kNpcVsCmax:
      return {{"admitted", "joint_npc_w", "mf_npc_w", "joint_conven_w", "mf_conven_w", "status"},
              {"admitted", "joint_npc_w", "mf_npc_w", "joint_conven_w", "mf_conven_w"}};
    case ExperimentKind::kConvergenceTrace:
      return {{"iteration", "objective_w", "active_rrhs", "active_links", "status"},
              {"iterations", "initial_links", "final_links", "initial_rrhs", "final_rrhs"}};
  }
  return {};
}

struct Instance {
  NetworkScenario scenario;
  ClusterMap clusters;
  ChannelState channels;
};

Instance make_instance(const ScenarioConfig& c) {
  Instance in;
  in.scenario = generate_scenario(c);
  in.clusters = build_clusters(in.scenario);
  in.channels = draw_channels(in.scenario, c.rng_seed);
  return in;
}

bool trace_nonincreasing(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[i - 1] + 1e-9 * std::abs(t[i - 1])) return false;
  return true;
}

TrialOutput run_admission(ExperimentKind kind, const ScenarioConfig& c) {
  TrialOutput out;
  const Instance in = make_instance(c);
  const PartialCsiView view(in.channels, in.clusters, c.noise_power_w());
  const SelectionResult joint = select_users_bues(view, c, BeamMode::kJoint);
  const SelectionResult mf = select_users_bues(view, c, BeamMode::kMatchedFilter);
  double exhaustive = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
  if (!check_feasibility(joint.w, view, c, joint.admitted).ok || !check_feasibility(mf.w, view, c, mf.admitted).ok) {
    out.invariant_failure = true;
    status = "infeasible admission output";
  }
  if (kind == ExperimentKind::kAdmittedVsRmin && c.num_ue <= kExhaustiveMaxUe) {
    const SelectionResult ex = select_users_exhaustive(view, c, BeamMode::kJoint);
    exhaustive = static_cast<double>(ex.admitted.size());
    if (joint.admitted.size() > ex.admitted.size()) {
      out.invariant_failure = true;
      status = "bisection admitted more than exhaustive search";
    }
  }
  const double jb = static_cast<double>(joint.admitted.size()), mb = static_cast<double>(mf.admitted.size());
  out.rows.push_back({fmt(jb), fmt(mb), fmt(exhaustive), std::to_string(joint.p10_calls), status});
  out.metrics = {jb, mb, exhaustive};
  return out;
}

TrialOutput run_npc(const ScenarioConfig& c) {
  TrialOutput out;
  const Instance in = make_instance(c);
  const PartialCsiView view(in.channels, in.clusters, c.noise_power_w());
  const SelectionResult sel = select_users_bues(view, c, BeamMode::kMatchedFilter);
  const std::pair<BeamMode, PowerObjective> variants[] = {
      {BeamMode::kJoint, PowerObjective::kNetworkPower},
      {BeamMode::kMatchedFilter, PowerObjective::kNetworkPower},
      {BeamMode::kJoint, PowerObjective::kTransmitOnly},
      {BeamMode::kMatchedFilter, PowerObjective::kTransmitOnly},
  };
  std::vector<std::string> row = {fmt(static_cast<double>(sel.admitted.size()))};
  out.metrics.push_back(static_cast<double>(sel.admitted.size()));
  std::string status = "ok";
  for (const auto& [mode, objective] : variants) {
    const SolveReport r = minimize_npc(sel.w, sel.admitted, view, c, mode, objective);
    if (!r.feasibility.ok || !trace_nonincreasing(r.objective_trace)) {
      out.invariant_failure = true;
      status = r.feasibility.ok ? "objective trace increased" : "infeasible output: " + r.feasibility.reason;
    } else if (r.inner_failure && status == "ok") {
      status = r.status;
    }
    row.push_back(fmt(r.network_power));
    out.metrics.push_back(r.network_power);
  }
  row.push_back(status);
  out.rows.push_back(row);
  return out;
}

TrialOutput run_convergence(const ScenarioConfig& c) {
  TrialOutput out;
  const Instance in = make_instance(c);
  const PartialCsiView view(in.channels, in.clusters, c.noise_power_w());
  const SelectionResult sel = select_users_bues(view, c, BeamMode::kJoint);
  const SolveReport r = minimize_npc(sel.w, sel.admitted, view, c, BeamMode::kJoint, PowerObjective::kNetworkPower);
  std::string status = r.status;
  if (!r.feasibility.ok || !trace_nonincreasing(r.objective_trace) ||
      r.active_link_trace.back() > r.active_link_trace.front()) {
    out.invariant_failure = true;
    status = "invariant violated: " + (r.feasibility.ok ? std::string("trace") : r.feasibility.reason);
  }
  for (std::size_t t = 0; t < r.objective_trace.size(); ++t)
    out.rows.push_back({std::to_string(t), fmt(r.objective_trace[t]), std::to_string(r.active_rrh_trace[t]),
                        std::to_string(r.active_link_trace[t]), status});
  out.metrics = {static_cast<double>(r.iterations), static_cast<double>(r.active_link_trace.front()),
                 static_cast<double>(r.active_link_trace.back()), static_cast<double>(r.active_rrh_trace.front()),
                 static_cast<double>(r.active_rrh_trace.back())};
  return out;
}

TrialOutput run_tightness(const ExperimentSpec& spec, double power_dbm, std::uint64_t seed) {
  TrialOutput out;
  const TightnessPoint p = tightness_point(spec.d_km, power_dbm, spec.mc_samples, seed, spec.base);
  out.rows.push_back(
      {fmt(spec.d_km), fmt(p.lower_bound), fmt(p.exact), fmt(p.monte_carlo), fmt(p.mc_std_error), "ok"});
  out.metrics = {p.lower_bound, p.exact, p.monte_carlo};
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_names())
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  std::string valid;
  for (const auto& [k, n] : kind_names()) {
    if (name == n) return k;
    valid += valid.empty() ? n : std::string(", ") + n;
  }
  throw ConfigError("unknown experiment '" + name + "'; valid experiments: " + valid);
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw ConfigError("configuration violates invariant: trials >= 1");
  if (mc_samples < 1) throw ConfigError("configuration violates invariant: mc_samples >= 1");
  if (!(d_km > 0.0)) throw ConfigError("configuration violates invariant: d_km > 0");
  const std::vector<double> points = sweep.empty() ? default_sweep(kind) : sweep;
  if (points.empty()) throw ConfigError("configuration violates invariant: sweep nonempty");
  if (kind != ExperimentKind::kTightness)
    for (double v : points) {
      ScenarioConfig c = base;
      apply_point(kind, v, c);
      c.validate();
    }
}

std::vector<double> default_sweep(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kTightness:
      return {-10, -5, 0, 5, 10, 15, 20, 25, 30, 35, 40};
    case ExperimentKind::kAdmittedVsRmin:
      return {5, 10, 15, 20, 25};
    case ExperimentKind::kAdmittedVsX:
    case ExperimentKind::kNpcVsX:
      return {1, 2, 3, 4, 5, 6};
    case ExperimentKind::kAdmittedVsY:
    case ExperimentKind::kNpcVsY:
      return {3, 4, 5, 6, 7, 8};
    case ExperimentKind::kAdmittedVsCmax:
    case ExperimentKind::kNpcVsCmax:
      return {1, 2, 3, 4, 5};
    case ExperimentKind::kConvergenceTrace:
      return {0};
  }
  return {};
}

std::vector<std::string> valid_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, f] : scenario_fields()) keys.push_back(name);
  for (const auto& k : experiment_keys()) keys.push_back(k);
  return keys;
}

LoadedConfig parse_config(const std::string& text) {
  LoadedConfig out;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    out.experiment.base = out.scenario;
    return out;
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  const auto keys = valid_config_keys();
  // desk_scale sets I, K, N and M; explicit keys in the same file override it
  if (doc.contains("desk_scale")) {
    if (!doc["desk_scale"].is_boolean()) throw ConfigError("config key 'desk_scale' expects true or false");
    out.desk_scale = doc["desk_scale"].get<bool>();
    if (out.desk_scale) out.scenario = desk_scale(out.scenario);
  }
  for (const auto& [key, value] : doc.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      std::string list;
      for (const auto& k : keys) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError("unknown config key '" + key + "'; valid keys: " + list);
    }
    bool handled = false;
    for (const auto& [name, field] : scenario_fields()) {
      if (name != key) continue;
      handled = true;
      std::visit(
          [&](auto ptr) {
            using T = std::remove_reference_t<decltype(out.scenario.*ptr)>;
            if constexpr (std::is_same_v<T, double>) {
              out.scenario.*ptr = number(value, key);
            } else {
              const long v = integer(value, key);
              if constexpr (std::is_same_v<T, std::uint64_t>) {
                if (v < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
              }
              out.scenario.*ptr = static_cast<T>(v);
            }
          },
          field);
    }
    if (handled) continue;
    auto& e = out.experiment;
    if (key == "experiment") {
      if (!value.is_string()) throw ConfigError("config key 'experiment' expects a string");
      e.kind = parse_experiment_kind(value.get<std::string>());
    } else if (key == "sweep") {
      if (!value.is_array()) throw ConfigError("config key 'sweep' expects an array of numbers");
      e.sweep.clear();
      for (const auto& v : value) e.sweep.push_back(number(v, key));
    } else if (key == "trials") {
      e.trials = static_cast<int>(integer(value, key));
    } else if (key == "seed") {
      e.seed = static_cast<std::uint64_t>(integer(value, key));
    } else if (key == "out") {
      if (!value.is_string()) throw ConfigError("config key 'out' expects a string");
      e.output_dir = value.get<std::string>();
    } else if (key == "threads") {
      e.threads = static_cast<unsigned>(integer(value, key));
    } else if (key == "mc_samples") {
      e.mc_samples = integer(value, key);
    } else if (key == "d_km") {
      e.d_km = number(value, key);
    }
  }
  out.scenario.validate();
  out.experiment.base = out.scenario;
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string ResultTable::to_csv() const {
  std::ostringstream o;
  for (std::size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << csv_field(header[i]);
  o << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) o << (i ? "," : "") << csv_field(row[i]);
    o << '\n';
  }
  return o.str();
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return derive_seed(master, {stream::kTrial, static_cast<std::uint64_t>(trial)});
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<double> points = spec.sweep.empty() ? default_sweep(spec.kind) : spec.sweep;
  const KindLayout lay = layout(spec.kind);

  struct Job {
    int point;
    int trial;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int p = 0; p < static_cast<int>(points.size()); ++p)
    for (int t = 0; t < spec.trials; ++t) jobs.push_back({p, t, trial_seed(spec.seed, t)});

  std::vector<TrialOutput> outputs(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      TrialOutput& out = outputs[j];
      try {
        ScenarioConfig c = spec.base;
        apply_point(spec.kind, points[job.point], c);
        c.rng_seed = job.seed;
        switch (spec.kind) {
          case ExperimentKind::kTightness:
            out = run_tightness(spec, points[job.point], job.seed);
            break;
          case ExperimentKind::kConvergenceTrace:
            out = run_convergence(c);
            break;
          case ExperimentKind::kNpcVsX:
          case ExperimentKind::kNpcVsY:
          case ExperimentKind::kNpcVsCmax:
            out = run_npc(c);
            break;
          default:
            out = run_admission(spec.kind, c);
            break;
        }
      } catch (const std::exception& e) {
        out = TrialOutput{};
        out.error = e.what();
      }
    }
  };
  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ExperimentResult res;
  res.trials.header = {"point", "trial", "seed"};
  res.trials.header.insert(res.trials.header.end(), lay.columns.begin(), lay.columns.end());
  res.summary.header = {"point", "metric", "mean", "std_error", "count"};
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const TrialOutput& out = outputs[j];
    const std::vector<std::string> lead = {fmt(points[job.point]), std::to_string(job.trial), std::to_string(job.seed)};
    if (!out.error.empty()) {
      ++res.failed_trials;
      std::vector<std::string> row = lead;
      row.resize(res.trials.header.size(), "NA");
      row.back() = "error: " + out.error;
      res.trials.rows.push_back(row);
      continue;
    }
    if (out.invariant_failure) ++res.invariant_failures;
    for (const auto& r : out.rows) {
      std::vector<std::string> row = lead;
      row.insert(row.end(), r.begin(), r.end());
      res.trials.rows.push_back(row);
    }
  }
  for (int p = 0; p < static_cast<int>(points.size()); ++p) {
    for (std::size_t m = 0; m < lay.metrics.size(); ++m) {
      std::vector<double> v;
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j].point == p && outputs[j].error.empty() && m < outputs[j].metrics.size() &&
            !std::isnan(outputs[j].metrics[m]))
          v.push_back(outputs[j].metrics[m]);
      double mean = std::numeric_limits<double>::quiet_NaN(), se = mean;
      if (!v.empty()) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
          double ss = 0.0;
          for (double x : v) ss += (x - mean) * (x - mean);
          se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
        }
      }
      res.summary.rows.push_back({fmt(points[p]), lay.metrics[m], fmt(mean), fmt(se), std::to_string(v.size())});
    }
  }

  std::ostringstream rep;
  rep << "[experiment]\nkind = " << to_string(spec.kind) << "\nseed = " << spec.seed << "\ntrials = " << spec.trials
      << "\nsweep =";
  for (double v : points) rep << ' ' << fmt(v);
  if (spec.kind == ExperimentKind::kTightness) rep << "\nd_km = " << fmt(spec.d_km) << "\nmc_samples = " << spec.mc_samples;
  rep << "\nfailed_trials = " << res.failed_trials << "\ninvariant_failures = " << res.invariant_failures
      << "\n\n[config]\n";
  for (const auto& [name, field] : scenario_fields()) rep << name << " = " << field_text(spec.base, field) << '\n';
  rep << "\n[summary]\n" << res.summary.to_csv();
  res.report = rep.str();
  return res;
}

void write_experiment(const ExperimentResult& result, const std::string& output_dir) {
  std::filesystem::create_directories(output_dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream f(std::filesystem::path(output_dir) / name);
    if (!f) throw std::runtime_error(std::string("cannot write ") + name);
    f << body;
  };
  put("trials.csv", result.trials.to_csv());
  put("summary.csv", result.summary.to_csv());
  put("report.txt", result.report);
}

TightnessPoint tightness_point(double d_km, double power_dbm, long samples, std::uint64_t seed,
                               const ScenarioConfig& base) {
  ScenarioConfig c = base;
  c.num_subchannels = 1;
  c.rng_seed = seed;
  const GridScenario g = generate_grid_scenario(d_km, c);
  const ChannelState ch = draw_channels(g.scenario, seed);
  const PartialCsiView view(ch, g.clusters, g.scenario.config.noise_power_w());
  const int M = ch.antennas();
  BeamformerSet w(g.clusters, 1, M);
  const double amp = std::sqrt(std::pow(10.0, (power_dbm - 30.0) / 10.0));
  for (int k = 0; k < g.clusters.num_ue(); ++k) {
    const auto& rrhs = g.clusters.serving(k);
    for (std::size_t s = 0; s < rrhs.size(); ++s) {
      const CVector h = view.known_h(rrhs[s], k, 0);
      w.at(k, 0).segment(static_cast<Eigen::Index>(s) * M, M) = (amp / h.norm()) * h.conjugate();
    }
  }
  TightnessPoint p;
  p.power_dbm = power_dbm;
  const int k = g.center_ue;
  p.lower_bound = rate_lower_bound(w, view, k, 0);
  p.exact = rate_exact_special(w, view, k, 0);
  const McEstimate mc = rate_monte_carlo(w, view, k, 0, samples, derive_seed(seed, {stream::kMonteCarlo}));
  p.monte_carlo = mc.mean;
  p.mc_std_error = mc.std_error;
  return p;
}

}  // namespace crannpc
