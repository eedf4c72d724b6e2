#pragma once

// Orchestration: build initial states from a RunConfig, drive the flows with
// monitor reports and trajectory persistence, run the paired split/unsplit
// consistency experiment, and the uniformize entry point.
// Exit codes: 0 pass, 1 numerical abort, 2 config error, 3 check failure.

#include <cstdlib>
#include <iostream>

#include "torusflow/trajectory.hpp"

namespace torusflow {

inline std::filesystem::path resolve_out_dir(const std::string& out_dir) {
  std::filesystem::path p = out_dir;
  if (p.is_relative()) {
    if (const char* root = std::getenv("TORUSFLOW_OUTPUT_ROOT"))
      p = std::filesystem::path(root) / p;
  }
  return p;
}

inline SplitState initial_split_state(const RunConfig& c) {
  SplitState s;
  s.Gbar = c.G;
  if (c.u_preset == "snapshot") {
    Snapshot snap = read_snapshot(c.u_snapshot);
    s.u = scalar_from_snapshot(snap);
    s.Gbar = snap.G;
    s.Gbar.renormalize_det();
  } else {
    s.u = initial_conformal_factor(c);
  }
  if (c.datum == "none") {
    s.kind = DatumKind::none;
  } else if (c.datum == "snapshot-map") {
    s.kind = DatumKind::map;
    s.map = map_from_snapshot(read_snapshot(c.datum_snapshot));
    check_unit(s.map, 1e-8);
  } else if (c.datum == "snapshot-spinor") {
    s.kind = DatumKind::spinor;
    s.phi = spinor_from_snapshot(read_snapshot(c.datum_snapshot));
    check_unit(s.phi, 1e-8);
  } else if (c.datum == "constant-map" || c.datum == "equator-map" || c.datum == "random-map") {
    s.kind = DatumKind::map;
    s.map = initial_map(c);
  } else {
    s.kind = DatumKind::spinor;
    s.phi = initial_spinor(c);
  }
  return s;
}

inline UnsplitState to_unsplit(const SplitState& s) {
  UnsplitState u;
  u.F = conformal_frame_field(s.metric());
  u.kind = s.kind;
  u.map = s.map;
  u.phi = s.phi;
  u.t = s.t;
  return u;
}

namespace detail {

inline MonitorInput base_input(const RhsDiagnostics& d, const StepResult& st, double t) {
  MonitorInput in;
  in.t = t;
  in.velocity_l2 = d.velocity_l2;
  in.horizontal_l2 = d.horizontal_l2;
  in.horizontal_c0 = d.horizontal_c0;
  in.gauge_rho_residual = d.gauge_rho_residual;
  in.gauge_x_residual = d.gauge_x_residual;
  in.bianchi_residual = d.bianchi_residual;
  in.renorm_drift = st.renorm_drift;
  return in;
}

}  // namespace detail

struct ExecuteResult {
  int code = 0;
  std::string status;
};

// Single-flow run with trajectory persistence.
inline ExecuteResult execute_run(const RunConfig& c, const std::string& config_text,
                                 std::ostream& log) {
  SplitState split = initial_split_state(c);
  const FlatMetric reference = split.Gbar;
  FlowOptions opt = c.flow_options();

  TrajectoryWriter tw(resolve_out_dir(c.out_dir), config_text, c.monitor);
  long report_idx = 0;

  auto monitor_cfg_for = [&](long idx, bool last) {
    MonitorConfig mc = c.monitor;
    bool graph = idx == 0 || last || (c.graph_every > 0 && idx % c.graph_every == 0);
    mc.graph_estimators = graph;
    return mc;
  };

  RunResult rr;
  const bool unsplit = c.flow == "hrf" || c.flow == "spinor";
  if (unsplit) {
    UnsplitState s = to_unsplit(split);
    auto observer = [&](const UnsplitState& st, const RhsDiagnostics& d, const StepResult& sr) {
      MonitorInput in = detail::base_input(d, sr, st.t);
      in.frame = &st.F;
      if (st.kind == DatumKind::map) in.map = &st.map;
      if (st.kind == DatumKind::spinor) in.phi = &st.phi;
      tw.add_report(blowup_report(in, monitor_cfg_for(report_idx, false)));
      if (c.snapshot_every > 0 && report_idx % c.snapshot_every == 0)
        tw.write_state_snapshot(st, report_idx);
      ++report_idx;
    };
    auto rhs = [&](const UnsplitState& st, RhsDiagnostics* d) {
      return st.kind == DatumKind::map ? hrf_unsplit_rhs(st, opt.alpha, d)
                                       : spinor_unsplit_rhs(st, d);
    };
    rr = run_flow<UnsplitState, UnsplitIncrement>(s, rhs, c.step, observer);
    tw.write_state_snapshot(s, report_idx);
  } else {
    auto observer = [&](const SplitState& st, const RhsDiagnostics& d, const StepResult& sr) {
      ConformalMetric cm = st.metric();
      MonitorInput in = detail::base_input(d, sr, st.t);
      in.cm = &cm;
      in.reference = &reference;
      if (st.kind == DatumKind::map) in.map = &st.map;
      if (st.kind == DatumKind::spinor) in.phi = &st.phi;
      tw.add_report(blowup_report(in, monitor_cfg_for(report_idx, false)));
      if (c.snapshot_every > 0 && report_idx % c.snapshot_every == 0)
        tw.write_state_snapshot(st, report_idx);
      ++report_idx;
    };
    auto rhs = [&](const SplitState& st, RhsDiagnostics* d) -> SplitIncrement {
      if (st.kind == DatumKind::none) return ricci_split_rhs(st, d);
      if (st.kind == DatumKind::map) return hrf_split_rhs(st, opt, d);
      return spinor_split_rhs(st, opt, d);
    };
    rr = run_flow<SplitState, SplitIncrement>(split, rhs, c.step, observer);
    tw.write_state_snapshot(split, report_idx);
  }

  tw.write_timeseries();
  VerdictRecord v = verdict(tw.reports(), c.thresholds);
  std::string status = run_status_name(rr.status);
  tw.write_verdict(status, v);
  log << "run: " << status << " after " << rr.steps << " steps, t = " << rr.t << "\n";
  for (const auto& cr : v.criteria)
    log << "  " << cr.name << ": "
        << (cr.passed ? "hypotheses held" : "violated: " + cr.violated_quantity) << "\n";

  ExecuteResult res;
  res.status = status;
  res.code = rr.status == RunStatus::aborted ? 1 : 0;
  return res;
}

// Paired split/unsplit experiment: identical data, fixed matched time steps,
// agreement of the diffeomorphism invariant curves (vol, int R^2, energy).
struct PairedCurves {
  std::vector<double> t, vol, r2, energy;
};

struct PairedResult {
  double worst_rel = 0.0;
  std::string worst_quantity;
  bool agreed = false;
};

inline PairedResult compare_curves(const PairedCurves& a, const PairedCurves& b, double tol) {
  PairedResult out;
  size_t m = std::min(a.t.size(), b.t.size());
  auto scan = [&](const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& name) {
    double scale = 1e-12;
    for (size_t k = 0; k < m; ++k) scale = std::max({scale, std::abs(x[k]), std::abs(y[k])});
    for (size_t k = 0; k < m; ++k) {
      double rel = std::abs(x[k] - y[k]) / scale;
      if (rel > out.worst_rel) {
        out.worst_rel = rel;
        out.worst_quantity = name;
      }
    }
  };
  scan(a.vol, b.vol, "vol");
  scan(a.r2, b.r2, "curvature_l2");
  scan(a.energy, b.energy, "energy");
  out.agreed = out.worst_rel <= tol;
  return out;
}

inline PairedCurves run_split_curves(SplitState s, const FlowOptions& opt, StepControl ctrl,
                                     double abort_above = 0.0,
                                     const PairedCurves* against = nullptr) {
  PairedCurves c;
  auto rhs = [&](const SplitState& st, RhsDiagnostics* d) {
    return st.kind == DatumKind::map ? hrf_split_rhs(st, opt, d) : spinor_split_rhs(st, opt, d);
  };
  auto record = [&](const SplitState& st) {
    ConformalMetric cm = st.metric();
    ScalarField R = scalar_curvature(cm);
    ScalarField R2(st.n());
    for (size_t i = 0; i < R2.size(); ++i) R2.v[i] = R.v[i] * R.v[i];
    c.t.push_back(st.t);
    c.vol.push_back(volume(cm));
    c.r2.push_back(integrate(R2, cm));
    if (st.kind == DatumKind::map)
      c.energy.push_back(map_energy(st.map, cm));
    else
      c.energy.push_back(spinor_energy(st.phi, make_spin_frame(cm, st.phi.spin)));
  };
  long k = 0;
  for (;;) {
    if (k % ctrl.report_every == 0) {
      record(s);
      // early exit once a mismatching variant has demonstrably failed
      if (abort_above > 0.0 && against) {
        PairedCurves sub = *against;
        PairedResult pr = compare_curves(c, sub, abort_above);
        if (!pr.agreed) break;
      }
    }
    if (s.t >= ctrl.t_final - 1e-15) break;
    StepResult sr = step<SplitState, SplitIncrement>(
        s, [&](const SplitState& st) { return rhs(st, nullptr); }, ctrl,
        std::min(ctrl.dt_fixed, ctrl.t_final - s.t));
    if (!sr.accepted) break;
    ++k;
  }
  return c;
}

inline PairedCurves run_unsplit_curves(UnsplitState s, double alpha, StepControl ctrl) {
  PairedCurves c;
  auto record = [&](const UnsplitState& st) {
    SpinFrame fr = make_spin_frame(
        st.F, st.kind == DatumKind::spinor ? st.phi.spin : SpinStructure{0, 0});
    ScalarField R = frame_scalar_curvature(fr);
    double n2 = static_cast<double>(st.n()) * st.n();
    double vol = 0.0, r2 = 0.0;
    for (size_t i = 0; i < R.size(); ++i) {
      vol += fr.dens.v[i];
      r2 += R.v[i] * R.v[i] * fr.dens.v[i];
    }
    c.t.push_back(st.t);
    c.vol.push_back(vol / n2);
    c.r2.push_back(r2 / n2);
    c.energy.push_back(st.kind == DatumKind::map ? map_energy(st.map, fr)
                                                 : spinor_energy(st.phi, fr));
  };
  long k = 0;
  for (;;) {
    if (k % ctrl.report_every == 0) record(s);
    if (s.t >= ctrl.t_final - 1e-15) break;
    auto rhs = [&](const UnsplitState& st) {
      return st.kind == DatumKind::map ? hrf_unsplit_rhs(st, alpha) : spinor_unsplit_rhs(st);
    };
    StepResult sr = step<UnsplitState, UnsplitIncrement>(
        s, rhs, ctrl, std::min(ctrl.dt_fixed, ctrl.t_final - s.t));
    if (!sr.accepted) break;
    ++k;
  }
  return c;
}

inline ExecuteResult execute_paired(const RunConfig& c, const std::string& config_text,
                                    std::ostream& log) {
  SplitState split0 = initial_split_state(c);
  UnsplitState unsplit0 = to_unsplit(split0);
  FlowOptions opt = c.flow_options();

  StepControl ctrl = c.step;
  if (ctrl.dt_fixed <= 0.0) {
    StepControl unit;
    unit.cfl = 1.0;
    ctrl.dt_fixed =
        c.step.cfl * std::min(cfl_dt(split0, unit), cfl_dt(unsplit0, unit));
  }

  PairedCurves cu = run_unsplit_curves(unsplit0, opt.alpha, ctrl);
  PairedCurves cs = run_split_curves(split0, opt, ctrl);
  PairedResult pr = compare_curves(cs, cu, c.paired_tol);

  std::filesystem::path dir = resolve_out_dir(c.out_dir);
  std::filesystem::create_directories(dir);
  detail::write_file_atomic(dir / "config.cfg", config_text);
  std::ostringstream csv;
  csv << "t,vol_split,vol_unsplit,r2_split,r2_unsplit,energy_split,energy_unsplit\n";
  size_t m = std::min(cs.t.size(), cu.t.size());
  for (size_t k = 0; k < m; ++k)
    csv << TrajectoryWriter::fmt(cs.t[k]) << ',' << TrajectoryWriter::fmt(cs.vol[k]) << ','
        << TrajectoryWriter::fmt(cu.vol[k]) << ',' << TrajectoryWriter::fmt(cs.r2[k]) << ','
        << TrajectoryWriter::fmt(cu.r2[k]) << ',' << TrajectoryWriter::fmt(cs.energy[k]) << ','
        << TrajectoryWriter::fmt(cu.energy[k]) << "\n";
  detail::write_file_atomic(dir / "comparison.csv", csv.str());
  std::ostringstream verdict_text;
  verdict_text << "status: " << (pr.agreed ? "consistent" : "inconsistent") << "\n"
               << "worst relative deviation: " << pr.worst_rel << " (" << pr.worst_quantity
               << "), tolerance " << c.paired_tol << "\n";
  detail::write_file_atomic(dir / "verdict.txt", verdict_text.str());

  log << "paired-consistency: worst relative deviation " << pr.worst_rel << " ("
      << pr.worst_quantity << "), tolerance " << c.paired_tol << " -> "
      << (pr.agreed ? "consistent" : "inconsistent") << "\n";
  ExecuteResult res;
  res.status = pr.agreed ? "consistent" : "inconsistent";
  res.code = pr.agreed ? 0 : 3;
  return res;
}

inline ExecuteResult execute_uniformize(const RunConfig& c, const std::string& config_text,
                                        std::ostream& log) {
  SplitState s = initial_split_state(c);
  StepControl ctrl = c.step;
  UniformizeResult res = uniformize(s.metric(), c.uniformize_tol, ctrl);

  std::filesystem::path dir = resolve_out_dir(c.out_dir);
  std::filesystem::create_directories(dir);
  detail::write_file_atomic(dir / "config.cfg", config_text);
  write_snapshot(dir / "u_hat.snap", make_snapshot(res.u_hat, res.base, 0.0));
  std::ostringstream rep;
  rep << "status: " << (res.report.converged ? "converged" : "step-budget-exhausted") << "\n"
      << "steps: " << res.report.steps << "\n"
      << "final |R|_inf: " << res.report.final_curvature_linf << "\n"
      << "input vol: " << res.report.input_vol << "\n"
      << "input int R^2: " << res.report.input_curvature_l2 << "\n"
      << "input inj estimate: " << res.report.input_inj << "\n"
      << "recovered |u|_C0: " << res.report.u_c0 << "\n";
  detail::write_file_atomic(dir / "verdict.txt", rep.str());
  log << rep.str();

  ExecuteResult out;
  out.status = res.report.converged ? "converged" : "step-budget-exhausted";
  out.code = res.report.converged ? 0 : 1;
  return out;
}

inline ExecuteResult execute(const RunConfig& c, const std::string& config_text,
                             std::ostream& log) {
  if (c.flow == "paired-consistency") return execute_paired(c, config_text, log);
  return execute_run(c, config_text, log);
}

}  // namespace torusflow
