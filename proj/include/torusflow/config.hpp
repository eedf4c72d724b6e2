#pragma once

// Run configuration: flat INI-style sections with typed scalar values. The
// parser validates the whole file and reports every error, not just the
// first. Unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "torusflow/flows.hpp"
#include "torusflow/monitors.hpp"
#include "torusflow/random_fields.hpp"

namespace torusflow {

struct RunConfig {
  // [run]
  std::string flow = "ricci";  // ricci | hrf | hrf-split | spinor | spinor-split |
                               // paired-consistency
  int n = 64;
  uint64_t seed = 1;
  std::string out_dir = "out";

  // [metric]
  FlatMetric G;
  std::string u_preset = "flat";  // flat | sine-bump | random | snapshot
  double u_amplitude = 0.3;
  int u_kcut = 3;
  std::string u_snapshot;

  // [datum]
  std::string datum = "none";  // none | constant-map | equator-map | random-map |
                               // constant-spinor | random-spinor | snapshot-map |
                               // snapshot-spinor
  double datum_amplitude = 0.3;
  int datum_kcut = 2;
  int spin_x = 0, spin_y = 0;
  std::string datum_snapshot;

  // [flow]
  double alpha = 1.0;
  std::string sign_convention = "standard";  // standard | flipped
  std::string lie_flavor = "full";           // full | flat
  std::string rho_assembly = "direct";       // direct | tilde-trace | tilde-only
  double uniformize_tol = 1e-6;
  double paired_tol = 1e-3;

  // [step]
  StepControl step;
  int snapshot_every = 0;  // snapshots every k-th report; 0 = first and last only
  int graph_every = 0;     // graph inj/diameter every k-th report; 0 = first/last

  // [monitor]
  MonitorConfig monitor;

  // [thresholds]
  Thresholds thresholds;

  std::vector<std::string> warnings;

  FlowOptions flow_options() const {
    FlowOptions opt;
    opt.alpha = alpha;
    opt.sign = sign_convention == "flipped" ? SignConvention::flipped : SignConvention::standard;
    opt.lie = lie_flavor == "flat" ? LieFlat::flat_base : LieFlat::full_metric;
    opt.rho = rho_assembly == "tilde-trace"  ? RhoAssembly::tilde_trace
              : rho_assembly == "tilde-only" ? RhoAssembly::tilde_only
                                             : RhoAssembly::direct;
    return opt;
  }
};

struct ParseResult {
  bool ok = false;
  RunConfig config;
  std::vector<std::string> errors;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace detail

inline ParseResult parse_config(const std::string& text) {
  ParseResult res;
  RunConfig& c = res.config;
  auto& errors = res.errors;

  std::map<std::string, std::string> kv;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) errors.push_back("duplicate key: " + full);
    kv[full] = val;
  }

  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  std::map<std::string, bool> seen;
  auto str = [&](const std::string& key, std::string& out) {
    seen[key] = true;
    if (const std::string* v = take(key)) out = *v;
  };
  auto num = [&](const std::string& key, auto& out) {
    seen[key] = true;
    if (const std::string* v = take(key)) {
      std::istringstream ss(*v);
      ss >> out;
      if (ss.fail() || !ss.eof()) errors.push_back(key + ": not a valid number: '" + *v + "'");
    }
  };

  str("run.flow", c.flow);
  num("run.n", c.n);
  num("run.seed", c.seed);
  str("run.out_dir", c.out_dir);

  num("metric.g11", c.G.g11);
  num("metric.g12", c.G.g12);
  num("metric.g22", c.G.g22);
  str("metric.preset", c.u_preset);
  num("metric.amplitude", c.u_amplitude);
  num("metric.kcut", c.u_kcut);
  str("metric.snapshot", c.u_snapshot);

  str("datum.kind", c.datum);
  num("datum.amplitude", c.datum_amplitude);
  num("datum.kcut", c.datum_kcut);
  num("datum.spin_x", c.spin_x);
  num("datum.spin_y", c.spin_y);
  str("datum.snapshot", c.datum_snapshot);

  num("flow.alpha", c.alpha);
  str("flow.sign_convention", c.sign_convention);
  str("flow.lie_flavor", c.lie_flavor);
  str("flow.rho_assembly", c.rho_assembly);
  num("flow.uniformize_tol", c.uniformize_tol);
  num("flow.paired_tol", c.paired_tol);

  num("step.cfl", c.step.cfl);
  num("step.dt", c.step.dt_fixed);
  num("step.t_final", c.step.t_final);
  num("step.max_steps", c.step.max_steps);
  num("step.stop_residual", c.step.stop_residual);
  num("step.curvature_tol", c.step.curvature_tol);
  num("step.max_halvings", c.step.max_halvings);
  num("step.report_every", c.step.report_every);
  num("step.snapshot_every", c.snapshot_every);
  num("step.graph_every", c.graph_every);

  num("monitor.eps", c.monitor.eps);
  num("monitor.q", c.monitor.q);
  num("monitor.basepoints", c.monitor.basepoints);

  num("thresholds.vol_max", c.thresholds.vol_max);
  num("thresholds.curvature_l2_max", c.thresholds.curvature_l2_max);
  num("thresholds.hrf_integral_max", c.thresholds.hrf_integral_max);
  num("thresholds.spinor_lq_max", c.thresholds.spinor_lq_max);
  num("thresholds.spinor_sup_max", c.thresholds.spinor_sup_max);
  num("thresholds.inj_min", c.thresholds.inj_min);
  num("thresholds.window", c.thresholds.window);

  for (auto& [key, val] : kv)
    if (!seen.count(key)) errors.push_back("unknown key: " + key);

  // semantic validation; every failed rule is reported
  const std::vector<std::string> flows = {"ricci",  "hrf",          "hrf-split",
                                          "spinor", "spinor-split", "paired-consistency"};
  if (std::find(flows.begin(), flows.end(), c.flow) == flows.end())
    errors.push_back("run.flow: unknown flow '" + c.flow + "'");
  if (c.n < 8 || (c.n & (c.n - 1)) != 0)
    errors.push_back("run.n: must be a power of two, at least 8");
  if (!(c.monitor.q > 4.0))
    errors.push_back("monitor.q: the spinor Hessian exponent must exceed 4 (got " +
                     std::to_string(c.monitor.q) + ")");
  if (!(c.monitor.eps > 0.0)) errors.push_back("monitor.eps: must be positive");
  if (!(c.alpha > 0.0)) errors.push_back("flow.alpha: must be positive");
  if (!(c.step.cfl > 0.0 && c.step.cfl <= 1.0)) errors.push_back("step.cfl: must be in (0, 1]");
  if (c.step.report_every < 1) errors.push_back("step.report_every: must be >= 1");
  if (!c.G.positive_definite()) {
    errors.push_back("metric: G must be positive definite");
  } else if (std::abs(c.G.det() - 1.0) > 1e-12) {
    FlatMetric before = c.G;
    c.G.renormalize_det();
    std::ostringstream w;
    w << "metric: det G = " << before.det() << " renormalized to unit determinant (g11 "
      << before.g11 << " -> " << c.G.g11 << ")";
    c.warnings.push_back(w.str());
  }
  if (c.spin_x != 0 && c.spin_x != 1) errors.push_back("datum.spin_x: must be 0 or 1");
  if (c.spin_y != 0 && c.spin_y != 1) errors.push_back("datum.spin_y: must be 0 or 1");

  const bool wants_map = c.flow == "hrf" || c.flow == "hrf-split";
  const bool wants_spinor = c.flow == "spinor" || c.flow == "spinor-split";
  auto is_map_datum = [](const std::string& d) {
    return d == "constant-map" || d == "equator-map" || d == "random-map" || d == "snapshot-map";
  };
  auto is_spinor_datum = [](const std::string& d) {
    return d == "constant-spinor" || d == "random-spinor" || d == "snapshot-spinor";
  };
  if (c.flow == "ricci" && c.datum != "none")
    errors.push_back("datum.kind: the Ricci flow carries no datum");
  if (wants_map && !is_map_datum(c.datum))
    errors.push_back("datum.kind: flow '" + c.flow + "' needs a map datum");
  if (wants_spinor && !is_spinor_datum(c.datum))
    errors.push_back("datum.kind: flow '" + c.flow + "' needs a spinor datum");
  if (c.flow == "paired-consistency" && !is_map_datum(c.datum) && !is_spinor_datum(c.datum))
    errors.push_back("datum.kind: paired-consistency needs a map or spinor datum");
  if (!is_map_datum(c.datum) && !is_spinor_datum(c.datum) && c.datum != "none")
    errors.push_back("datum.kind: unknown datum '" + c.datum + "'");
  if (c.sign_convention != "standard" && c.sign_convention != "flipped")
    errors.push_back("flow.sign_convention: must be standard or flipped");
  if (c.lie_flavor != "full" && c.lie_flavor != "flat")
    errors.push_back("flow.lie_flavor: must be full or flat");
  if (c.rho_assembly != "direct" && c.rho_assembly != "tilde-trace" &&
      c.rho_assembly != "tilde-only")
    errors.push_back("flow.rho_assembly: must be direct, tilde-trace or tilde-only");
  const std::vector<std::string> presets = {"flat", "sine-bump", "random", "snapshot"};
  if (std::find(presets.begin(), presets.end(), c.u_preset) == presets.end())
    errors.push_back("metric.preset: unknown preset '" + c.u_preset + "'");
  if (c.u_preset == "snapshot" && c.u_snapshot.empty())
    errors.push_back("metric.snapshot: required for preset 'snapshot'");
  if ((c.datum == "snapshot-map" || c.datum == "snapshot-spinor") && c.datum_snapshot.empty())
    errors.push_back("datum.snapshot: required for snapshot data");

  res.ok = errors.empty();
  return res;
}

// Named initial data used by the presets and the acceptance suite.
inline ScalarField initial_conformal_factor(const RunConfig& c) {
  if (c.u_preset == "flat") return ScalarField(c.n, 0.0);
  if (c.u_preset == "sine-bump") {
    ScalarField u(c.n);
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.n; ++j)
        u(i, j) = 0.3 * std::sin(kTwoPi * i / c.n) * std::sin(kTwoPi * j / c.n);
    return u;
  }
  if (c.u_preset == "random") {
    std::mt19937_64 rng(c.seed);
    return random_band_limited(c.n, c.u_kcut, c.u_amplitude, rng);
  }
  throw std::invalid_argument("initial_conformal_factor: preset requires a snapshot");
}

inline MapField initial_map(const RunConfig& c) {
  if (c.datum == "constant-map") {
    MapField m(c.n);
    for (auto& z : m.z.v) z = 1.0;
    return m;
  }
  if (c.datum == "equator-map") {
    MapField m(c.n);
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.n; ++j) {
        m.x(i, j) = std::cos(kTwoPi * i / c.n);
        m.y(i, j) = std::sin(kTwoPi * i / c.n);
      }
    return m;
  }
  if (c.datum == "random-map") {
    std::mt19937_64 rng(c.seed + 1);
    return random_map_field(c.n, c.datum_kcut, c.datum_amplitude, rng);
  }
  throw std::invalid_argument("initial_map: datum requires a snapshot");
}

inline SpinorField initial_spinor(const RunConfig& c) {
  SpinStructure s{static_cast<uint8_t>(c.spin_x), static_cast<uint8_t>(c.spin_y)};
  if (c.datum == "constant-spinor") {
    if (c.spin_x || c.spin_y)
      throw std::invalid_argument("constant-spinor needs the periodic spin structure");
    SpinorField phi(c.n, s);
    for (auto& a : phi.a) a = 1.0;
    return phi;
  }
  if (c.datum == "random-spinor") {
    std::mt19937_64 rng(c.seed + 2);
    return random_spinor_field(c.n, s, c.datum_kcut, c.datum_amplitude, rng);
  }
  throw std::invalid_argument("initial_spinor: datum requires a snapshot");
}

}  // namespace torusflow
