#pragma once

// Right-hand sides and time integration for the three flows, split and
// unsplit, plus the constructive uniformization via the normalized Ricci
// flow. Split states evolve (Gbar, u, datum) with the elliptic gauge fields;
// unsplit states evolve a free orthonormal frame (the metric is g^{-1}=E E^T)
// so the flow can leave the conformal gauge.

#include <functional>
#include <optional>
#include <string>
#include <type_traits>

#include "torusflow/elliptic.hpp"
#include "torusflow/map_sphere.hpp"
#include "torusflow/monitors.hpp"
#include "torusflow/spinor.hpp"

namespace torusflow {

enum class DatumKind { none, map, spinor };

// Gauge-term sign switch of the split system. "standard" is the derived set
// d_t u = (1/4) tr_g Q + X u - rho/2, d_t s = Q_E + L_X s; "flipped" negates
// the X and rho contributions (the alternative printing of the equations).
enum class SignConvention { standard, flipped };

// How the split spinor flow assembles rho: directly from its own elliptic
// equation, or from the rewritten rho-tilde equation (with or without the
// trace term). Only "direct" reproduces the unsplit flow; the others are
// kept as diagnostics of the rewritten system.
enum class RhoAssembly { direct, tilde_trace, tilde_only };

struct FlowOptions {
  double alpha = 1.0;  // harmonic Ricci coupling
  SignConvention sign = SignConvention::standard;
  RhoAssembly rho = RhoAssembly::direct;
  LieFlat lie = LieFlat::full_metric;
};

struct SplitState {
  FlatMetric Gbar;
  ScalarField u;
  DatumKind kind = DatumKind::none;
  MapField map;
  SpinorField phi;
  double t = 0.0;

  int n() const { return u.n; }
  ConformalMetric metric() const { return ConformalMetric(Gbar, u); }
};

struct UnsplitState {
  FrameField F;
  DatumKind kind = DatumKind::none;
  MapField map;
  SpinorField phi;
  double t = 0.0;

  int n() const { return F.n; }
};

struct SplitIncrement {
  std::array<double, 3> dG{0.0, 0.0, 0.0};
  ScalarField du;
  MapField dmap;
  SpinorField dphi;
};

struct UnsplitIncrement {
  FrameField dF;
  MapField dmap;
  SpinorField dphi;
};

// Diagnostics of one right-hand-side evaluation (recorded at the step start).
struct RhsDiagnostics {
  double r_average = 0.0;       // mean curvature entering the normalization
  double du_mean = 0.0;         // volume drift rate of the conformal factor
  double rhs_linf = 0.0;        // stationarity measure
  double curvature_linf = 0.0;  // convergence measure for the Ricci flow
  double velocity_l2 = 0.0;     // |d_t g|_{L2(g)}
  double horizontal_l2 = 0.0;   // |d_t gbar|_{L2(gbar)}
  double horizontal_c0 = 0.0;   // |d_t gbar|_{C0(gbar)}
  double gauge_rho_residual = 0.0;
  double gauge_x_residual = 0.0;
  double bianchi_residual = 0.0;
  double x_w12_norm = 0.0;
};

// ---------------------------------------------------------------------------
// Normalized Ricci flow (pure conformal): d_t u = (r - R_g)/2.

struct RicciRhs {
  ScalarField du;
  double r = 0.0;
};

inline RicciRhs ricci_normalized_rhs(const ScalarField& u, const FlatMetric& G) {
  ConformalMetric cm(G, u);
  ScalarField R = scalar_curvature(cm);
  RicciRhs out;
  out.r = integrate(R, cm) / volume(cm);
  out.du = ScalarField(u.n);
  for (size_t i = 0; i < R.size(); ++i) out.du.v[i] = 0.5 * (out.r - R.v[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Harmonic Ricci flow, unsplit tensor form (2D):
// T = -R g + 2 alpha d phi (x) d phi + (avg tr(Ric) - alpha Ebar) g.

struct HrfRhs {
  SymTensorField metric_rhs;
  MapField map_rhs;
  double r_average = 0.0;
  double energy_average = 0.0;  // Ebar = avg |d phi|^2
};

inline HrfRhs hrf_rhs(const ConformalMetric& cm, const MapField& phi, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("hrf_rhs: alpha must be positive");
  check_unit(phi, 0.05);
  const int n = cm.n();
  ScalarField R = scalar_curvature(cm);
  SymTensorField dp = dphi_tensor(phi);
  ScalarField ed = trace_g(dp, cm);
  double vol = volume(cm);
  HrfRhs out;
  out.r_average = integrate(R, cm) / vol;
  out.energy_average = integrate(ed, cm) / vol;
  out.metric_rhs = SymTensorField(n);
  const FlatMetric& G = cm.base;
  for (size_t i = 0; i < R.size(); ++i) {
    double e2u = std::exp(2.0 * cm.u.v[i]);
    double c = (-R.v[i] + out.r_average - alpha * out.energy_average) * e2u;
    out.metric_rhs.xx.v[i] = c * G.g11 + 2.0 * alpha * dp.xx.v[i];
    out.metric_rhs.xy.v[i] = c * G.g12 + 2.0 * alpha * dp.xy.v[i];
    out.metric_rhs.yy.v[i] = c * G.g22 + 2.0 * alpha * dp.yy.v[i];
  }
  out.map_rhs = tension(phi, cm);
  return out;
}

namespace detail {

inline double velocity_l2_norm(const SymTensorField& dtg, const ConformalMetric& cm) {
  ScalarField n2 = pointwise_norm2(dtg, cm);
  ScalarField root(n2.n);
  for (size_t i = 0; i < n2.size(); ++i) root.v[i] = n2.v[i];
  double s = integrate(root, cm);
  return std::sqrt(std::max(0.0, s));
}

// |H|_{Gbar} of a constant symmetric matrix.
inline double const_tensor_norm(const std::array<double, 3>& H, const FlatMetric& G) {
  auto gi = G.inv();
  double a11 = gi[0] * H[0] + gi[1] * H[1], a12 = gi[0] * H[1] + gi[1] * H[2];
  double a21 = gi[1] * H[0] + gi[2] * H[1], a22 = gi[1] * H[1] + gi[2] * H[2];
  return std::sqrt(a11 * a11 + a12 * a21 + a21 * a12 + a22 * a22);
}

// C0 and L2(Gbar) norms of the horizontal velocity; equal on a unit volume
// flat torus and both computed through the generic machinery on purpose.
inline void horizontal_norms(const std::array<double, 3>& H, const FlatMetric& G, int n,
                             double& l2, double& c0) {
  SymTensorField ht(n);
  for (size_t i = 0; i < ht.xx.size(); ++i) {
    ht.xx.v[i] = H[0];
    ht.xy.v[i] = H[1];
    ht.yy.v[i] = H[2];
  }
  ConformalMetric flat(G, ScalarField(n, 0.0));
  ScalarField n2 = pointwise_norm2(ht, flat);
  double mx = 0.0;
  for (double x : n2.v) mx = std::max(mx, x);
  c0 = std::sqrt(mx);
  l2 = std::sqrt(std::max(0.0, integrate(n2, flat)));
}

inline double linf_increment(const ScalarField& f) { return max_abs(f); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Split right-hand sides

// Shared assembly once Q_m (with its trace and trace-free parts) and the
// datum velocity are known.
struct SplitGaugeData {
  SymTensorField qring;   // trace-free part of Q_m
  ScalarField trace_g;    // tr_g Q_m
  GaugeSolution gauge;
  std::array<double, 3> dG{0.0, 0.0, 0.0};
  ScalarField du;
};

inline SplitGaugeData split_metric_rhs(const SymTensorField& qm, const ScalarField& trg,
                                       const SplitState& s, const FlowOptions& opt,
                                       bool with_diagnostics) {
  SplitGaugeData out;
  ConformalMetric cm = s.metric();
  out.qring = trace_free_part(qm, cm);
  out.trace_g = trg;
  out.gauge = solve_gauge(out.qring, s.Gbar, s.u, with_diagnostics);
  SymTensorField scaled = detail::scale_by_exp(out.qring, s.u, -2.0);
  out.dG = horizontal_projection(scaled, s.Gbar).matrix();

  const double sgn = opt.sign == SignConvention::standard ? 1.0 : -1.0;
  ScalarField ux = deriv(s.u, 0), uy = deriv(s.u, 1);
  out.du = ScalarField(s.n());
  for (size_t i = 0; i < out.du.size(); ++i) {
    double Xu = out.gauge.X.x.v[i] * ux.v[i] + out.gauge.X.y.v[i] * uy.v[i];
    out.du.v[i] = 0.25 * trg.v[i] + sgn * (Xu - 0.5 * out.gauge.rho.v[i]);
  }
  return out;
}

inline void fill_split_diagnostics(const SplitGaugeData& gd, const SplitState& s,
                                   RhsDiagnostics& d) {
  ConformalMetric cm = s.metric();
  d.du_mean = field_mean(gd.du);
  d.gauge_rho_residual = gd.gauge.rho_residual;
  d.gauge_x_residual = gd.gauge.x_residual;
  d.x_w12_norm = gd.gauge.x_w12_norm;
  detail::horizontal_norms(gd.dG, s.Gbar, s.n(), d.horizontal_l2, d.horizontal_c0);
  // d_t g = 2 du g + e^{2u} dGbar
  SymTensorField dtg(s.n());
  for (size_t i = 0; i < dtg.xx.size(); ++i) {
    double e2u = std::exp(2.0 * s.u.v[i]);
    dtg.xx.v[i] = 2.0 * gd.du.v[i] * e2u * s.Gbar.g11 + e2u * gd.dG[0];
    dtg.xy.v[i] = 2.0 * gd.du.v[i] * e2u * s.Gbar.g12 + e2u * gd.dG[1];
    dtg.yy.v[i] = 2.0 * gd.du.v[i] * e2u * s.Gbar.g22 + e2u * gd.dG[2];
  }
  d.velocity_l2 = detail::velocity_l2_norm(dtg, cm);
}

// Harmonic Ricci flow in split form.
inline SplitIncrement hrf_split_rhs(const SplitState& s, const FlowOptions& opt,
                                    RhsDiagnostics* diag = nullptr) {
  ConformalMetric cm = s.metric();
  HrfRhs unsplit = hrf_rhs(cm, s.map, opt.alpha);
  ScalarField trg = trace_g(unsplit.metric_rhs, cm);
  SplitGaugeData gd = split_metric_rhs(unsplit.metric_rhs, trg, s, opt, diag != nullptr);

  SplitIncrement inc;
  inc.dG = gd.dG;
  inc.du = gd.du;
  const double sgn = opt.sign == SignConvention::standard ? 1.0 : -1.0;
  // d_t phi = tau + d phi (X)
  inc.dmap = unsplit.map_rhs;
  MapDeriv d(s.map);
  for (size_t i = 0; i < inc.dmap.x.size(); ++i) {
    double Xx = gd.gauge.X.x.v[i], Xy = gd.gauge.X.y.v[i];
    inc.dmap.x.v[i] += sgn * (Xx * d.xx.v[i] + Xy * d.xy.v[i]);
    inc.dmap.y.v[i] += sgn * (Xx * d.yx.v[i] + Xy * d.yy.v[i]);
    inc.dmap.z.v[i] += sgn * (Xx * d.zx.v[i] + Xy * d.zy.v[i]);
  }
  if (diag) {
    diag->r_average = unsplit.r_average;
    fill_split_diagnostics(gd, s, *diag);
    diag->rhs_linf = std::max({detail::linf_increment(inc.du), max_abs(inc.dmap.x),
                               max_abs(inc.dmap.y), max_abs(inc.dmap.z)});
  }
  return inc;
}

// Spinor flow, unsplit gradient pair.
struct SpinorRhs {
  SymTensorField metric_rhs;  // Q1 in coordinates
  SpinorField spinor_rhs;     // Q2
  ScalarField trace_g;        // tr_g Q1
};

inline SpinorRhs spinor_rhs(const ConformalMetric& cm, const SpinorField& phi) {
  SpinFrame fr = make_spin_frame(cm, phi.spin);
  SpinorGradients g = spinor_gradients(phi, fr);
  SpinorRhs out{std::move(g.q1.coord), std::move(g.q2), std::move(g.q1.trace_g)};
  return out;
}

// Spinor flow in split form. The residual of the rewritten divergence
// identity delta(Qring1) = (1/2) e^{2u} d tr_g Q1 is recorded per call.
inline SplitIncrement spinor_split_rhs(const SplitState& s, const FlowOptions& opt,
                                       RhsDiagnostics* diag = nullptr) {
  ConformalMetric cm = s.metric();
  SpinFrame fr = make_spin_frame(cm, s.phi.spin);
  SpinorGradients sg = spinor_gradients(s.phi, fr);
  Q1Result& q = sg.q1;
  SpinorField& Q2 = sg.q2;

  SplitGaugeData gd = split_metric_rhs(q.coord, q.trace_g, s, opt, diag != nullptr);
  if (opt.rho != RhoAssembly::direct) {
    RhoSolution rt = solve_rho_tilde_data(gd.qring, cm);
    ScalarField rho = rt.rho;
    if (opt.rho == RhoAssembly::tilde_trace) {
      ScalarField half_tr(s.n());
      for (size_t i = 0; i < half_tr.size(); ++i) half_tr.v[i] = 0.5 * q.trace_g.v[i];
      double mean = field_mean(half_tr);
      for (size_t i = 0; i < rho.size(); ++i) rho.v[i] += half_tr.v[i] - mean;
    }
    // re-solve X against the substituted rho and rebuild du
    XSolution xs = solve_gauge_field_X(gd.qring, rho, s.Gbar, s.u);
    gd.gauge.rho = rho;
    gd.gauge.X = xs.X;
    gd.gauge.x_residual = xs.residual_l2;
    const double sgn = opt.sign == SignConvention::standard ? 1.0 : -1.0;
    ScalarField ux = deriv(s.u, 0), uy = deriv(s.u, 1);
    for (size_t i = 0; i < gd.du.size(); ++i) {
      double Xu = gd.gauge.X.x.v[i] * ux.v[i] + gd.gauge.X.y.v[i] * uy.v[i];
      gd.du.v[i] = 0.25 * q.trace_g.v[i] + sgn * (Xu - 0.5 * rho.v[i]);
    }
  }

  SplitIncrement inc;
  inc.dG = gd.dG;
  inc.du = gd.du;
  const double sgn = opt.sign == SignConvention::standard ? 1.0 : -1.0;
  SpinorField lie = spin_lie_derivative_from(gd.gauge.X, s.phi, sg.d, cm, fr, opt.lie);
  inc.dphi = Q2;
  for (size_t i = 0; i < inc.dphi.a.size(); ++i) {
    inc.dphi.a[i] += sgn * lie.a[i];
    inc.dphi.b[i] += sgn * lie.b[i];
  }

  if (diag) {
    fill_split_diagnostics(gd, s, *diag);
    // rewritten divergence identity residual (recorded, not enforced)
    OneFormField dq = divergence_sym_flat(gd.qring, s.Gbar);
    ScalarField tx = deriv(q.trace_g, 0), ty = deriv(q.trace_g, 1);
    OneFormField resid(s.n());
    for (size_t i = 0; i < resid.x.size(); ++i) {
      double e2u = std::exp(2.0 * s.u.v[i]);
      resid.x.v[i] = dq.x.v[i] - 0.5 * e2u * tx.v[i];
      resid.y.v[i] = dq.y.v[i] - 0.5 * e2u * ty.v[i];
    }
    diag->bianchi_residual = detail::l2_flat(resid, s.Gbar);
    double lin = 0.0;
    for (size_t i = 0; i < inc.dphi.a.size(); ++i)
      lin = std::max(lin, std::sqrt(std::norm(inc.dphi.a[i]) + std::norm(inc.dphi.b[i])));
    diag->rhs_linf = std::max(detail::linf_increment(inc.du), lin);
  }
  return inc;
}

// Normalized Ricci flow as a (trivially) split flow.
inline SplitIncrement ricci_split_rhs(const SplitState& s, RhsDiagnostics* diag = nullptr) {
  RicciRhs r = ricci_normalized_rhs(s.u, s.Gbar);
  SplitIncrement inc;
  inc.du = r.du;
  if (diag) {
    diag->r_average = r.r;
    diag->du_mean = field_mean(inc.du);
    diag->rhs_linf = detail::linf_increment(inc.du);
    ConformalMetric cm = s.metric();
    ScalarField R = scalar_curvature(cm);
    diag->curvature_linf = max_abs(R);
    SymTensorField dtg(s.n());
    for (size_t i = 0; i < dtg.xx.size(); ++i) {
      double c = 2.0 * inc.du.v[i] * std::exp(2.0 * s.u.v[i]);
      dtg.xx.v[i] = c * s.Gbar.g11;
      dtg.xy.v[i] = c * s.Gbar.g12;
      dtg.yy.v[i] = c * s.Gbar.g22;
    }
    diag->velocity_l2 = detail::velocity_l2_norm(dtg, cm);
  }
  return inc;
}

// ---------------------------------------------------------------------------
// Unsplit right-hand sides over frame fields

inline UnsplitIncrement hrf_unsplit_rhs(const UnsplitState& s, double alpha,
                                        RhsDiagnostics* diag = nullptr) {
  check_unit(s.map, 0.05);
  const int n = s.n();
  SpinFrame fr = make_spin_frame(s.F, {0, 0});
  ScalarField R = frame_scalar_curvature(fr);
  SymTensorField g = frame_metric(s.F);
  SymTensorField dp = dphi_tensor(s.map);
  ScalarField ed = map_energy_density(s.map, fr);
  const double cell = 1.0 / (static_cast<double>(n) * n);
  double vol = 0.0, rbar = 0.0, ebar = 0.0;
  for (size_t i = 0; i < R.size(); ++i) {
    vol += fr.dens.v[i];
    rbar += R.v[i] * fr.dens.v[i];
    ebar += ed.v[i] * fr.dens.v[i];
  }
  vol *= cell;
  rbar = rbar * cell / vol;
  ebar = ebar * cell / vol;

  SymTensorField T(n);
  for (size_t i = 0; i < T.xx.size(); ++i) {
    double c = -R.v[i] + rbar - alpha * ebar;
    T.xx.v[i] = c * g.xx.v[i] + 2.0 * alpha * dp.xx.v[i];
    T.xy.v[i] = c * g.xy.v[i] + 2.0 * alpha * dp.xy.v[i];
    T.yy.v[i] = c * g.yy.v[i] + 2.0 * alpha * dp.yy.v[i];
  }
  UnsplitIncrement inc;
  inc.dF = FrameField(n);
  for (size_t i = 0; i < T.xx.size(); ++i) {
    // frame components of the velocity and the symmetric frame transport
    double e1x = s.F.e1x.v[i], e1y = s.F.e1y.v[i], e2x = s.F.e2x.v[i], e2y = s.F.e2y.v[i];
    double h11 = e1x * (T.xx.v[i] * e1x + T.xy.v[i] * e1y) + e1y * (T.xy.v[i] * e1x + T.yy.v[i] * e1y);
    double h12 = e1x * (T.xx.v[i] * e2x + T.xy.v[i] * e2y) + e1y * (T.xy.v[i] * e2x + T.yy.v[i] * e2y);
    double h22 = e2x * (T.xx.v[i] * e2x + T.xy.v[i] * e2y) + e2y * (T.xy.v[i] * e2x + T.yy.v[i] * e2y);
    inc.dF.e1x.v[i] = -0.5 * (h11 * e1x + h12 * e2x);
    inc.dF.e1y.v[i] = -0.5 * (h11 * e1y + h12 * e2y);
    inc.dF.e2x.v[i] = -0.5 * (h12 * e1x + h22 * e2x);
    inc.dF.e2y.v[i] = -0.5 * (h12 * e1y + h22 * e2y);
  }
  inc.dmap = tension(s.map, fr);
  if (diag) {
    diag->r_average = rbar;
    diag->curvature_linf = max_abs(R);
    double vl2 = 0.0;
    for (size_t i = 0; i < T.xx.size(); ++i) {
      // |T|^2_g via frame components
      double e1x = s.F.e1x.v[i], e1y = s.F.e1y.v[i], e2x = s.F.e2x.v[i], e2y = s.F.e2y.v[i];
      double h11 = e1x * (T.xx.v[i] * e1x + T.xy.v[i] * e1y) + e1y * (T.xy.v[i] * e1x + T.yy.v[i] * e1y);
      double h12 = e1x * (T.xx.v[i] * e2x + T.xy.v[i] * e2y) + e1y * (T.xy.v[i] * e2x + T.yy.v[i] * e2y);
      double h22 = e2x * (T.xx.v[i] * e2x + T.xy.v[i] * e2y) + e2y * (T.xy.v[i] * e2x + T.yy.v[i] * e2y);
      vl2 += (h11 * h11 + 2.0 * h12 * h12 + h22 * h22) * fr.dens.v[i];
    }
    diag->velocity_l2 = std::sqrt(vl2 * cell);
    diag->rhs_linf = std::max({max_abs(inc.dmap.x), max_abs(inc.dmap.y), max_abs(inc.dmap.z)});
  }
  return inc;
}

inline UnsplitIncrement spinor_unsplit_rhs(const UnsplitState& s,
                                           RhsDiagnostics* diag = nullptr) {
  const int n = s.n();
  SpinFrame fr = make_spin_frame(s.F, s.phi.spin);
  SpinorGradients sg = spinor_gradients(s.phi, fr);
  Q1Result& q = sg.q1;
  SpinorField& Q2 = sg.q2;
  UnsplitIncrement inc;
  inc.dF = FrameField(n);
  for (size_t i = 0; i < q.frame.m11.size(); ++i) {
    double h11 = q.frame.m11.v[i], h12 = q.frame.m12.v[i], h22 = q.frame.m22.v[i];
    inc.dF.e1x.v[i] = -0.5 * (h11 * s.F.e1x.v[i] + h12 * s.F.e2x.v[i]);
    inc.dF.e1y.v[i] = -0.5 * (h11 * s.F.e1y.v[i] + h12 * s.F.e2y.v[i]);
    inc.dF.e2x.v[i] = -0.5 * (h12 * s.F.e1x.v[i] + h22 * s.F.e2x.v[i]);
    inc.dF.e2y.v[i] = -0.5 * (h12 * s.F.e1y.v[i] + h22 * s.F.e2y.v[i]);
  }
  inc.dphi = Q2;
  if (diag) {
    double vl2 = 0.0;
    const double cell = 1.0 / (static_cast<double>(n) * n);
    for (size_t i = 0; i < q.frame.m11.size(); ++i) {
      double h11 = q.frame.m11.v[i], h12 = q.frame.m12.v[i], h22 = q.frame.m22.v[i];
      vl2 += (h11 * h11 + 2.0 * h12 * h12 + h22 * h22) * fr.dens.v[i];
    }
    diag->velocity_l2 = std::sqrt(vl2 * cell);
    double lin = 0.0;
    for (size_t i = 0; i < inc.dphi.a.size(); ++i)
      lin = std::max(lin, std::sqrt(std::norm(inc.dphi.a[i]) + std::norm(inc.dphi.b[i])));
    diag->rhs_linf = lin;
  }
  return inc;
}

// ---------------------------------------------------------------------------
// Time stepping (classical 4-stage explicit scheme + renormalization)

struct StepControl {
  double cfl = 0.5;          // fraction of the explicit diffusion limit
  double dt_fixed = 0.0;     // > 0: fixed step, otherwise adaptive
  double t_final = 0.1;
  long max_steps = 200000;
  double stop_residual = 1e-12;   // stationarity threshold on |rhs|_inf
  double curvature_tol = 0.0;     // > 0: stop when |R|_inf below (Ricci flow)
  int max_halvings = 10;
  int report_every = 10;
};

// dt <= cfl * C * h^2 * min(e^{2u}) / lambda_max(Gbar^{-1}); C covers the
// 4-stage stability interval of the spectral diffusion operator.
inline double cfl_dt(const SplitState& s, const StepControl& ctrl) {
  if (ctrl.dt_fixed > 0.0) return ctrl.dt_fixed;
  double umin = s.u.v[0];
  for (double x : s.u.v) umin = std::min(umin, x);
  double h2 = 1.0 / (static_cast<double>(s.n()) * s.n());
  return ctrl.cfl * 0.14 * h2 * std::exp(2.0 * umin) / s.Gbar.inv_spectral_radius();
}

inline double cfl_dt(const UnsplitState& s, const StepControl& ctrl) {
  if (ctrl.dt_fixed > 0.0) return ctrl.dt_fixed;
  double lmax = 0.0;
  for (size_t i = 0; i < s.F.e1x.size(); ++i) {
    double i11 = s.F.e1x.v[i] * s.F.e1x.v[i] + s.F.e2x.v[i] * s.F.e2x.v[i];
    double i12 = s.F.e1x.v[i] * s.F.e1y.v[i] + s.F.e2x.v[i] * s.F.e2y.v[i];
    double i22 = s.F.e1y.v[i] * s.F.e1y.v[i] + s.F.e2y.v[i] * s.F.e2y.v[i];
    double tr = i11 + i22, det = i11 * i22 - i12 * i12;
    lmax = std::max(lmax, 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det))));
  }
  double h2 = 1.0 / (static_cast<double>(s.n()) * s.n());
  return ctrl.cfl * 0.14 * h2 / lmax;
}

namespace detail {

inline void axpy(SplitState& s, double a, const SplitIncrement& d) {
  s.Gbar.g11 += a * d.dG[0];
  s.Gbar.g12 += a * d.dG[1];
  s.Gbar.g22 += a * d.dG[2];
  for (size_t i = 0; i < s.u.size(); ++i) s.u.v[i] += a * d.du.v[i];
  if (s.kind == DatumKind::map)
    for (size_t i = 0; i < s.map.x.size(); ++i) {
      s.map.x.v[i] += a * d.dmap.x.v[i];
      s.map.y.v[i] += a * d.dmap.y.v[i];
      s.map.z.v[i] += a * d.dmap.z.v[i];
    }
  if (s.kind == DatumKind::spinor)
    for (size_t i = 0; i < s.phi.a.size(); ++i) {
      s.phi.a[i] += a * d.dphi.a[i];
      s.phi.b[i] += a * d.dphi.b[i];
    }
}

inline void axpy(UnsplitState& s, double a, const UnsplitIncrement& d) {
  for (size_t i = 0; i < s.F.e1x.size(); ++i) {
    s.F.e1x.v[i] += a * d.dF.e1x.v[i];
    s.F.e1y.v[i] += a * d.dF.e1y.v[i];
    s.F.e2x.v[i] += a * d.dF.e2x.v[i];
    s.F.e2y.v[i] += a * d.dF.e2y.v[i];
  }
  if (s.kind == DatumKind::map)
    for (size_t i = 0; i < s.map.x.size(); ++i) {
      s.map.x.v[i] += a * d.dmap.x.v[i];
      s.map.y.v[i] += a * d.dmap.y.v[i];
      s.map.z.v[i] += a * d.dmap.z.v[i];
    }
  if (s.kind == DatumKind::spinor)
    for (size_t i = 0; i < s.phi.a.size(); ++i) {
      s.phi.a[i] += a * d.dphi.a[i];
      s.phi.b[i] += a * d.dphi.b[i];
    }
}

inline bool state_finite(const SplitState& s) {
  if (!finite(s.u)) return false;
  if (!s.Gbar.positive_definite()) return false;
  if (s.kind == DatumKind::map)
    return finite(s.map.x) && finite(s.map.y) && finite(s.map.z);
  if (s.kind == DatumKind::spinor) {
    for (size_t i = 0; i < s.phi.a.size(); ++i)
      if (!std::isfinite(s.phi.a[i].real()) || !std::isfinite(s.phi.a[i].imag()) ||
          !std::isfinite(s.phi.b[i].real()) || !std::isfinite(s.phi.b[i].imag()))
        return false;
  }
  return true;
}

inline bool state_finite(const UnsplitState& s) {
  if (!finite(s.F.e1x) || !finite(s.F.e1y) || !finite(s.F.e2x) || !finite(s.F.e2y)) return false;
  if (s.kind == DatumKind::map)
    return finite(s.map.x) && finite(s.map.y) && finite(s.map.z);
  if (s.kind == DatumKind::spinor) {
    for (size_t i = 0; i < s.phi.a.size(); ++i)
      if (!std::isfinite(s.phi.a[i].real()) || !std::isfinite(s.phi.a[i].imag()) ||
          !std::isfinite(s.phi.b[i].real()) || !std::isfinite(s.phi.b[i].imag()))
        return false;
  }
  return true;
}

// Nodewise datum renormalization; returns the largest removed drift.
template <class State>
inline double renormalize_datum(State& s) {
  double drift = 0.0;
  if (s.kind == DatumKind::map) {
    for (size_t i = 0; i < s.map.x.size(); ++i) {
      double r = std::sqrt(s.map.x.v[i] * s.map.x.v[i] + s.map.y.v[i] * s.map.y.v[i] +
                           s.map.z.v[i] * s.map.z.v[i]);
      drift = std::max(drift, std::abs(r - 1.0));
      s.map.x.v[i] /= r;
      s.map.y.v[i] /= r;
      s.map.z.v[i] /= r;
    }
  } else if (s.kind == DatumKind::spinor) {
    for (size_t i = 0; i < s.phi.a.size(); ++i) {
      double r = std::sqrt(std::norm(s.phi.a[i]) + std::norm(s.phi.b[i]));
      drift = std::max(drift, std::abs(r - 1.0));
      s.phi.a[i] /= r;
      s.phi.b[i] /= r;
    }
  }
  return drift;
}

}  // namespace detail

struct StepResult {
  bool accepted = false;
  double dt = 0.0;
  int halvings = 0;
  double renorm_drift = 0.0;   // datum unit-norm drift removed
  double det_drift = 0.0;      // |det Gbar - 1| removed (split states)
};

// One classical 4-stage explicit step. Non-finite or otherwise inadmissible
// intermediate states (a datum blown off its unit sphere, a degenerate
// metric) reject the attempt; dt is halved and the step retried up to
// max_halvings times. Accepted steps renormalize the datum and the moduli
// determinant and report the removed drift.
template <class State, class Increment, class Rhs>
inline StepResult step(State& s, const Rhs& rhs, const StepControl& ctrl, double dt) {
  StepResult res;
  for (int attempt = 0; attempt <= ctrl.max_halvings; ++attempt) {
    State trial = s;
    bool bad = false;
    try {
      Increment k1 = rhs(trial);
      State s2 = trial;
      detail::axpy(s2, 0.5 * dt, k1);
      if (!detail::state_finite(s2)) throw std::invalid_argument("non-finite stage");
      Increment k2 = rhs(s2);
      State s3 = trial;
      detail::axpy(s3, 0.5 * dt, k2);
      if (!detail::state_finite(s3)) throw std::invalid_argument("non-finite stage");
      Increment k3 = rhs(s3);
      State s4 = trial;
      detail::axpy(s4, dt, k3);
      if (!detail::state_finite(s4)) throw std::invalid_argument("non-finite stage");
      Increment k4 = rhs(s4);
      detail::axpy(trial, dt / 6.0, k1);
      detail::axpy(trial, dt / 3.0, k2);
      detail::axpy(trial, dt / 3.0, k3);
      detail::axpy(trial, dt / 6.0, k4);
      if (!detail::state_finite(trial)) throw std::invalid_argument("non-finite result");
    } catch (const std::invalid_argument&) {
      bad = true;
    }
    if (bad) {
      dt *= 0.5;
      ++res.halvings;
      continue;
    }
    res.renorm_drift = detail::renormalize_datum(trial);
    if constexpr (std::is_same_v<State, SplitState>) {
      res.det_drift = trial.Gbar.renormalize_det();
    }
    trial.t = s.t + dt;
    s = std::move(trial);
    res.accepted = true;
    res.dt = dt;
    return res;
  }
  res.dt = dt;
  return res;
}

// ---------------------------------------------------------------------------
// Run loop

enum class RunStatus { reached_time, converged, stationary, aborted, step_budget };

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::reached_time: return "reached-final-time";
    case RunStatus::converged: return "converged";
    case RunStatus::stationary: return "stationary";
    case RunStatus::aborted: return "aborted-nonfinite";
    case RunStatus::step_budget: return "step-budget-exhausted";
  }
  return "unknown";
}

struct RunResult {
  RunStatus status = RunStatus::reached_time;
  long steps = 0;
  double t = 0.0;
  double final_curvature_linf = 0.0;
};

// Advances the state until a stop condition fires. The observer is invoked on
// the initial state, every report_every accepted steps and on the final state,
// with right-hand-side diagnostics evaluated at those report steps only
// (stationarity and convergence checks run at the report cadence).
template <class State, class Increment, class Rhs>
inline RunResult run_flow(State& s, const Rhs& rhs_with_diag, const StepControl& ctrl,
                          const std::function<void(const State&, const RhsDiagnostics&,
                                                   const StepResult&)>& observer = nullptr) {
  RunResult out;
  StepResult last_step;
  auto rhs_plain = [&](const State& st) { return rhs_with_diag(st, nullptr); };
  for (long k = 0;; ++k) {
    bool stop = false;
    if (k % ctrl.report_every == 0 || s.t >= ctrl.t_final || k >= ctrl.max_steps) {
      RhsDiagnostics diag;
      rhs_with_diag(s, &diag);
      if (observer) observer(s, diag, last_step);
      out.final_curvature_linf = diag.curvature_linf;
      if (ctrl.curvature_tol > 0.0 && diag.curvature_linf < ctrl.curvature_tol) {
        out.status = RunStatus::converged;
        stop = true;
      } else if (diag.rhs_linf < ctrl.stop_residual) {
        out.status = RunStatus::stationary;
        stop = true;
      }
    }
    if (!stop && s.t >= ctrl.t_final) {
      out.status = RunStatus::reached_time;
      stop = true;
    }
    if (!stop && k >= ctrl.max_steps) {
      out.status = RunStatus::step_budget;
      stop = true;
    }
    if (stop) break;
    double dt = std::min(cfl_dt(s, ctrl), ctrl.t_final - s.t);
    last_step = step<State, Increment>(s, rhs_plain, ctrl, dt);
    if (!last_step.accepted) {
      out.status = RunStatus::aborted;
      break;
    }
    out.steps++;
  }
  out.t = s.t;
  return out;
}

// ---------------------------------------------------------------------------
// Constructive uniformization via the normalized Ricci flow

struct UniformizeReport {
  bool converged = false;
  long steps = 0;
  double final_curvature_linf = 0.0;
  double input_vol = 0.0;
  double input_curvature_l2 = 0.0;
  double input_inj = 0.0;
  double u_c0 = 0.0;  // sup |u| of the recovered split factor
};

struct UniformizeResult {
  ScalarField u_hat;   // conformal factor of the input against the flat representative
  FlatMetric base;     // the unit volume flat representative (the input base)
  UniformizeReport report;
};

inline UniformizeResult uniformize(const ConformalMetric& cm, double tol,
                                   StepControl ctrl = StepControl{}) {
  if (!(tol > 0.0)) throw std::invalid_argument("uniformize: tol must be positive");
  UniformizeResult out;
  out.base = cm.base;
  ScalarField R0 = scalar_curvature(cm);
  out.report.input_vol = volume(cm);
  ScalarField R2(cm.n());
  for (size_t i = 0; i < R2.size(); ++i) R2.v[i] = R0.v[i] * R0.v[i];
  out.report.input_curvature_l2 = integrate(R2, cm);
  out.report.input_inj = injectivity_lower_bound(cm);

  SplitState s;
  s.Gbar = cm.base;
  s.u = cm.u;
  s.kind = DatumKind::none;
  ctrl.curvature_tol = tol;
  ctrl.t_final = std::numeric_limits<double>::infinity();
  auto rhs = [](const SplitState& st, RhsDiagnostics* d) { return ricci_split_rhs(st, d); };
  RunResult rr =
      run_flow<SplitState, SplitIncrement>(s, rhs, ctrl, nullptr);
  out.report.converged = rr.status == RunStatus::converged;
  out.report.steps = rr.steps;
  out.report.final_curvature_linf = rr.final_curvature_linf;

  // The unit-volume flat representative of [g0] in this conformal gauge is
  // the base itself; the recovered factor is u0 - (u_inf - (1/2) log Vol_inf),
  // which removes the residual non-constancy of the limit.
  ConformalMetric limit(s.Gbar, s.u);
  double c = 0.5 * std::log(volume(limit));
  out.u_hat = cm.u;
  for (size_t i = 0; i < out.u_hat.size(); ++i) out.u_hat.v[i] -= s.u.v[i] - c;
  out.report.u_c0 = max_abs(out.u_hat);
  return out;
}

}  // namespace torusflow
