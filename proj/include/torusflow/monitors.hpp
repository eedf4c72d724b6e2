#pragma once

// Blow-up criterion monitors: every quantity the extendability criteria track
// (volume, curvature integrals, map and spinor energies, Hessian integrals,
// injectivity radius and diameter estimators, parabolic space-time norms) and
// the threshold verdicts over report streams.

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "torusflow/elliptic.hpp"
#include "torusflow/map_sphere.hpp"
#include "torusflow/spinor.hpp"

namespace torusflow {

// Shortest lattice vector length: min over (p,q) != 0, |p|,|q| <= 16.
inline double systole_flat(const FlatMetric& G) {
  double best = std::numeric_limits<double>::infinity();
  for (int p = -16; p <= 16; ++p)
    for (int q = -16; q <= 16; ++q) {
      if (p == 0 && q == 0) continue;
      best = std::min(best, G.q(p, q));
    }
  return std::sqrt(best);
}

// Worst-case overestimate factor of the 8-neighbor graph metric relative to
// the continuum length (isotropic case): 1 / cos(pi/8).
inline double graph_stencil_factor() { return 1.0 / std::cos(kPi / 8.0); }

using EdgeWeight = std::function<double(int i, int j, int di, int dj)>;

// Conformal edge weight: e^{(u_a + u_b)/2} * G-length of the edge.
inline EdgeWeight make_edge_weight(const ConformalMetric& cm) {
  const int n = cm.n();
  const double h = 1.0 / n;
  return [&cm, n, h](int i, int j, int di, int dj) {
    int ia = ((i % n) + n) % n, ja = ((j % n) + n) % n;
    int ib = (((i + di) % n) + n) % n, jb = (((j + dj) % n) + n) % n;
    double ua = cm.u(ia, ja), ub = cm.u(ib, jb);
    double glen = std::sqrt(cm.base.q(di * h, dj * h));
    return std::exp(0.5 * (ua + ub)) * glen;
  };
}

// General metric field version (midpoint metric).
inline EdgeWeight make_edge_weight(const SymTensorField& g) {
  const int n = g.n();
  const double h = 1.0 / n;
  return [&g, n, h](int i, int j, int di, int dj) {
    int ia = ((i % n) + n) % n, ja = ((j % n) + n) % n;
    int ib = (((i + di) % n) + n) % n, jb = (((j + dj) % n) + n) % n;
    size_t pa = static_cast<size_t>(ia) * n + ja, pb = static_cast<size_t>(ib) * n + jb;
    double gxx = 0.5 * (g.xx.v[pa] + g.xx.v[pb]);
    double gxy = 0.5 * (g.xy.v[pa] + g.xy.v[pb]);
    double gyy = 0.5 * (g.yy.v[pa] + g.yy.v[pb]);
    double ex = di * h, ey = dj * h;
    return std::sqrt(gxx * ex * ex + 2.0 * gxy * ex * ey + gyy * ey * ey);
  };
}

namespace detail {

// Dijkstra on the lifted lattice window [-2n, 3n)^2; returns distances to the
// requested targets (window coordinates).
inline std::vector<double> lifted_distances(const EdgeWeight& w, int n, int i0, int j0,
                                            const std::vector<std::pair<int, int>>& targets) {
  const int W = 5 * n, off = 2 * n;
  const size_t total = static_cast<size_t>(W) * W;
  std::vector<double> dist(total, std::numeric_limits<double>::infinity());
  auto id = [&](int i, int j) { return static_cast<size_t>(i + off) * W + (j + off); };
  using Item = std::pair<double, size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[id(i0, j0)] = 0.0;
  heap.push({0.0, id(i0, j0)});
  size_t remaining = targets.size();
  std::vector<char> is_target(total, 0);
  for (auto& t : targets) is_target[id(t.first, t.second)] = 1;
  while (!heap.empty() && remaining > 0) {
    auto [d, p] = heap.top();
    heap.pop();
    if (d > dist[p]) continue;
    if (is_target[p]) {
      is_target[p] = 0;
      --remaining;
    }
    int i = static_cast<int>(p / W) - off, j = static_cast<int>(p % W) - off;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        int ni = i + di, nj = j + dj;
        if (ni < -off || ni >= W - off || nj < -off || nj >= W - off) continue;
        double nd = d + w(i, j, di, dj);
        size_t np = id(ni, nj);
        if (nd < dist[np]) {
          dist[np] = nd;
          heap.push({nd, np});
        }
      }
  }
  std::vector<double> out;
  out.reserve(targets.size());
  for (auto& t : targets) out.push_back(dist[id(t.first, t.second)]);
  return out;
}

inline std::vector<std::pair<int, int>> basepoints(int n, int count = 16) {
  std::vector<std::pair<int, int>> pts;
  int side = 4;
  for (int a = 0; a < side && static_cast<int>(pts.size()) < count; ++a)
    for (int b = 0; b < side && static_cast<int>(pts.size()) < count; ++b)
      pts.push_back({a * n / side, b * n / side});
  return pts;
}

}  // namespace detail

// Shortest noncontractible loop: graph search over homotopy classes (p,q),
// |p|,|q| <= 2, minimized over a deterministic basepoint sample.
inline double graph_systole(const EdgeWeight& w, int n, int nbase = 16) {
  std::vector<std::pair<int, int>> classes;
  for (int p = -2; p <= 2; ++p)
    for (int q = -2; q <= 2; ++q) {
      if (p == 0 && q == 0) continue;
      if (p < 0 || (p == 0 && q < 0)) continue;  // (p,q) ~ (-p,-q)
      classes.push_back({p, q});
    }
  double best = std::numeric_limits<double>::infinity();
  for (auto& bp : detail::basepoints(n, nbase)) {
    std::vector<std::pair<int, int>> targets;
    for (auto& c : classes) targets.push_back({bp.first + c.first * n, bp.second + c.second * n});
    auto d = detail::lifted_distances(w, n, bp.first, bp.second, targets);
    for (double x : d) best = std::min(best, x);
  }
  return best;
}

// Conservative injectivity radius estimate: min(systole/2, conjugate point cap
// pi / sqrt(sup R^+ / 2)).
inline double injectivity_lower_bound(const ConformalMetric& cm, int nbase = 16) {
  double sys = graph_systole(make_edge_weight(cm), cm.n(), nbase);
  ScalarField R = scalar_curvature(cm);
  double rmax = 0.0;
  for (double x : R.v) rmax = std::max(rmax, x);
  double cap = rmax > 0.0 ? kPi / std::sqrt(0.5 * rmax) : std::numeric_limits<double>::infinity();
  return std::min(0.5 * sys, cap);
}

// Cheap certified lower bound without the graph search: lengths of g scale by
// at least e^{min u} against the flat background.
inline double injectivity_cheap_bound(const ConformalMetric& cm) {
  double umin = cm.u.v[0];
  for (double x : cm.u.v) umin = std::min(umin, x);
  ScalarField R = scalar_curvature(cm);
  double rmax = 0.0;
  for (double x : R.v) rmax = std::max(rmax, x);
  double cap = rmax > 0.0 ? kPi / std::sqrt(0.5 * rmax) : std::numeric_limits<double>::infinity();
  return std::min(0.5 * std::exp(umin) * systole_flat(cm.base), cap);
}

// Torus diameter estimate: max single-source eccentricity over the basepoint
// sample (8-neighbor torus graph).
inline double diameter_estimate_impl(const EdgeWeight& w, int n, int nbase = 16) {
  double best = 0.0;
  for (auto& bp : detail::basepoints(n, nbase)) {
    const size_t total = static_cast<size_t>(n) * n;
    std::vector<double> dist(total, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    size_t src = static_cast<size_t>(bp.first) * n + bp.second;
    dist[src] = 0.0;
    heap.push({0.0, src});
    while (!heap.empty()) {
      auto [d, p] = heap.top();
      heap.pop();
      if (d > dist[p]) continue;
      int i = static_cast<int>(p / n), j = static_cast<int>(p % n);
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          int ni = (i + di + n) % n, nj = (j + dj + n) % n;
          double nd = d + w(i, j, di, dj);
          size_t np = static_cast<size_t>(ni) * n + nj;
          if (nd < dist[np]) {
            dist[np] = nd;
            heap.push({nd, np});
          }
        }
    }
    for (double x : dist) best = std::max(best, x);
  }
  return best;
}

inline double diameter_estimate(const ConformalMetric& cm, int nbase = 16) {
  return diameter_estimate_impl(make_edge_weight(cm), cm.n(), nbase);
}

// ---------------------------------------------------------------------------
// Blow-up report

struct MonitorConfig {
  double eps = 0.5;  // curvature / map exponents: 2+eps, 4+2eps
  double q = 6.0;    // spinor Hessian integrability exponent, q > 4
  bool graph_estimators = true;
  int basepoints = 16;
};

struct MonitorReport {
  double t = 0.0;
  double vol = 0.0;
  double curvature_l2 = 0.0;      // int |R|^2 vol
  double curvature_l2e = 0.0;     // int |R|^{2+eps} vol
  double map_energy = 0.0;        // (1/2) int |d phi|^2 vol
  double map_grad_l4e = 0.0;      // int |d phi|^{4+2 eps} vol
  double spinor_energy = 0.0;     // (1/2) int |grad phi|^2 vol
  double spinor_hess_lq = 0.0;    // int |grad^2 phi|^q vol
  double spinor_hess_sup = 0.0;   // sup |grad^2 phi|
  double inj_lower_bound = 0.0;   // estimate for g
  double inj_flat = 0.0;          // systole of the flat background / 2
  double diameter = 0.0;
  double u_c0 = 0.0;
  double u_h2 = 0.0;  // against the run's reference flat metric
  double velocity_l2 = 0.0;
  double horizontal_l2 = 0.0;
  double horizontal_c0 = 0.0;
  double gauge_rho_residual = 0.0;
  double gauge_x_residual = 0.0;
  double bianchi_residual = 0.0;
  double calderon_ratio = 0.0;
  double renorm_drift = 0.0;

  bool all_finite() const {
    for (double x : {t, vol, curvature_l2, curvature_l2e, map_energy, map_grad_l4e, spinor_energy,
                     spinor_hess_lq, spinor_hess_sup, inj_lower_bound, diameter, u_c0, u_h2,
                     velocity_l2, horizontal_l2, horizontal_c0})
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline const std::vector<std::string>& monitor_columns() {
  static const std::vector<std::string> cols = {
      "t",          "vol",          "curvature_l2",   "curvature_l2e",  "map_energy",
      "map_grad_l4e", "spinor_energy", "spinor_hess_lq", "spinor_hess_sup", "inj_lower_bound",
      "inj_flat",   "diameter",     "u_c0",           "u_h2",           "velocity_l2",
      "horizontal_l2", "horizontal_c0", "gauge_rho_residual", "gauge_x_residual",
      "bianchi_residual", "calderon_ratio", "renorm_drift"};
  return cols;
}

inline std::vector<double> monitor_values(const MonitorReport& r) {
  return {r.t,          r.vol,          r.curvature_l2,   r.curvature_l2e,  r.map_energy,
          r.map_grad_l4e, r.spinor_energy, r.spinor_hess_lq, r.spinor_hess_sup, r.inj_lower_bound,
          r.inj_flat,   r.diameter,     r.u_c0,           r.u_h2,           r.velocity_l2,
          r.horizontal_l2, r.horizontal_c0, r.gauge_rho_residual, r.gauge_x_residual,
          r.bianchi_residual, r.calderon_ratio, r.renorm_drift};
}

// What the flows hand to the monitors each report step.
struct MonitorInput {
  double t = 0.0;
  const ConformalMetric* cm = nullptr;  // split / conformal states
  const FrameField* frame = nullptr;    // unsplit states
  const SpinorField* phi = nullptr;
  const MapField* map = nullptr;
  const FlatMetric* reference = nullptr;  // fixed reference for u_h2
  double velocity_l2 = 0.0, horizontal_l2 = 0.0, horizontal_c0 = 0.0;
  double gauge_rho_residual = 0.0, gauge_x_residual = 0.0, bianchi_residual = 0.0;
  double renorm_drift = 0.0;
};

inline MonitorReport blowup_report(const MonitorInput& in, const MonitorConfig& cfg) {
  MonitorReport r;
  r.t = in.t;
  r.velocity_l2 = in.velocity_l2;
  r.horizontal_l2 = in.horizontal_l2;
  r.horizontal_c0 = in.horizontal_c0;
  r.gauge_rho_residual = in.gauge_rho_residual;
  r.gauge_x_residual = in.gauge_x_residual;
  r.bianchi_residual = in.bianchi_residual;
  r.renorm_drift = in.renorm_drift;

  ScalarField R;
  ScalarField dens;  // sqrt(det g)
  int n = 0;
  SpinFrame fr;
  if (in.cm) {
    n = in.cm->n();
    R = scalar_curvature(*in.cm);
    dens = ScalarField(n);
    double sd = std::sqrt(in.cm->base.det());
    for (size_t i = 0; i < dens.size(); ++i) dens.v[i] = sd * std::exp(2.0 * in.cm->u.v[i]);
    fr = make_spin_frame(*in.cm, in.phi ? in.phi->spin : SpinStructure{0, 0});
  } else if (in.frame) {
    n = in.frame->n;
    fr = make_spin_frame(*in.frame, in.phi ? in.phi->spin : SpinStructure{0, 0});
    R = frame_scalar_curvature(fr);
    dens = fr.dens;
  } else {
    throw std::invalid_argument("blowup_report: no metric");
  }
  const double cell = 1.0 / (static_cast<double>(n) * n);
  auto integral = [&](const ScalarField& f) {
    double s = 0.0;
    for (size_t i = 0; i < f.size(); ++i) s += f.v[i] * dens.v[i];
    return s * cell;
  };

  ScalarField one(n, 1.0);
  r.vol = integral(one);
  ScalarField R2(n), R2e(n);
  bool finiteR = true;
  for (size_t i = 0; i < R.size(); ++i) {
    double a = std::abs(R.v[i]);
    if (!std::isfinite(a)) finiteR = false;
    R2.v[i] = a * a;
    R2e.v[i] = std::pow(a, 2.0 + cfg.eps);
  }
  r.curvature_l2 = finiteR ? integral(R2) : std::numeric_limits<double>::quiet_NaN();
  r.curvature_l2e = finiteR ? integral(R2e) : std::numeric_limits<double>::quiet_NaN();

  if (in.map) {
    ScalarField ed = in.cm ? map_energy_density(*in.map, *in.cm) : map_energy_density(*in.map, fr);
    ScalarField e4(n);
    for (size_t i = 0; i < ed.size(); ++i) e4.v[i] = std::pow(ed.v[i], 0.5 * (4.0 + 2.0 * cfg.eps));
    r.map_energy = 0.5 * integral(ed);
    r.map_grad_l4e = integral(e4);
  }
  if (in.phi) {
    r.spinor_energy = spinor_energy(*in.phi, fr);
    SecondDeriv s2 = second_covariant_derivative(*in.phi, fr);
    ScalarField h2 = s2.norm2();
    ScalarField hq(n);
    double sup = 0.0;
    for (size_t i = 0; i < h2.size(); ++i) {
      hq.v[i] = std::pow(h2.v[i], 0.5 * cfg.q);
      sup = std::max(sup, h2.v[i]);
    }
    r.spinor_hess_lq = integral(hq);
    r.spinor_hess_sup = std::sqrt(sup);
  }

  if (in.cm) {
    r.u_c0 = max_abs(in.cm->u);
    r.inj_flat = 0.5 * systole_flat(in.cm->base);
    FlatMetric ref = in.reference ? *in.reference : in.cm->base;
    r.u_h2 = sobolev_h2_norm(in.cm->u, ConformalMetric(ref, ScalarField(n, 0.0)));
    if (cfg.graph_estimators) {
      r.inj_lower_bound = injectivity_lower_bound(*in.cm, cfg.basepoints);
      r.diameter = diameter_estimate(*in.cm, cfg.basepoints);
    } else {
      r.inj_lower_bound = injectivity_cheap_bound(*in.cm);
      r.diameter = 0.0;
    }
    // Calderon regression ratio for the state's own conformal factor
    ScalarField w = in.cm->u;
    double vol = r.vol;
    double mean = integrate(w, *in.cm) / vol;
    for (auto& x : w.v) x -= mean;
    double denom = 0.0;
    ScalarField lap = laplacian_flat(w, in.cm->base);
    for (size_t i = 0; i < lap.size(); ++i) lap.v[i] *= std::exp(-2.0 * in.cm->u.v[i]);
    denom = lp_norm(lap, *in.cm, 2.0);
    r.calderon_ratio = denom > 1e-14 ? sobolev_h2_norm(w, *in.cm) / denom : 0.0;
  } else {
    SymTensorField g = frame_metric(*in.frame);
    if (cfg.graph_estimators) {
      EdgeWeight w = make_edge_weight(g);
      double sys = graph_systole(w, n, cfg.basepoints);
      double rmax = 0.0;
      for (double x : R.v) rmax = std::max(rmax, x);
      double cap =
          rmax > 0.0 ? kPi / std::sqrt(0.5 * rmax) : std::numeric_limits<double>::infinity();
      r.inj_lower_bound = std::min(0.5 * sys, cap);
      r.diameter = diameter_estimate_impl(w, n, cfg.basepoints);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Space-time norms of a conformal-factor trajectory

struct SpacetimeNorms {
  double w21p = 0.0;        // ( int int |d_t u|^p + |grad u|^p + |grad^2 u|^p )^{1/p}
  double holder_est = 0.0;  // sampled parabolic Hoelder seminorm estimate
  int holder_samples = 0;
};

inline SpacetimeNorms spacetime_norms(const std::vector<ScalarField>& us,
                                      const std::vector<double>& ts, const FlatMetric& ref,
                                      double p, double alpha, int nsample = 4096,
                                      uint64_t seed = 12345) {
  if (us.size() < 2 || us.size() != ts.size())
    throw std::invalid_argument("spacetime_norms: need at least two snapshots");
  const int n = us[0].n;
  const size_t K = us.size();
  ConformalMetric flat(ref, ScalarField(n, 0.0));

  // per-snapshot spatial integrand: |d_t u|^p + |grad u|^p + |grad^2 u|^p
  std::vector<double> slice(K, 0.0);
  for (size_t k = 0; k < K; ++k) {
    ScalarField dt(n);
    if (k == 0) {
      for (size_t i = 0; i < dt.size(); ++i)
        dt.v[i] = (us[1].v[i] - us[0].v[i]) / (ts[1] - ts[0]);
    } else if (k == K - 1) {
      for (size_t i = 0; i < dt.size(); ++i)
        dt.v[i] = (us[K - 1].v[i] - us[K - 2].v[i]) / (ts[K - 1] - ts[K - 2]);
    } else {
      for (size_t i = 0; i < dt.size(); ++i)
        dt.v[i] = (us[k + 1].v[i] - us[k - 1].v[i]) / (ts[k + 1] - ts[k - 1]);
    }
    OneFormField du(n);
    du.x = deriv(us[k], 0);
    du.y = deriv(us[k], 1);
    SymTensorField H = hessian(us[k], flat);
    ScalarField g1 = pointwise_norm2(du, flat), g2 = pointwise_norm2(H, flat);
    double s = 0.0;
    for (size_t i = 0; i < dt.size(); ++i)
      s += std::pow(std::abs(dt.v[i]), p) + std::pow(g1.v[i], 0.5 * p) +
           std::pow(g2.v[i], 0.5 * p);
    slice[k] = s / (static_cast<double>(n) * n) * std::sqrt(ref.det());
  }
  SpacetimeNorms out;
  double acc = 0.0;
  for (size_t k = 0; k + 1 < K; ++k)
    acc += 0.5 * (slice[k] + slice[k + 1]) * (ts[k + 1] - ts[k]);
  out.w21p = std::pow(acc, 1.0 / p);

  // flat torus distance under ref
  auto torus_dist = [&](int i1, int j1, int i2, int j2) {
    double dx = static_cast<double>(i2 - i1) / n, dy = static_cast<double>(j2 - j1) / n;
    double best = std::numeric_limits<double>::infinity();
    for (int px = -1; px <= 1; ++px)
      for (int py = -1; py <= 1; ++py) best = std::min(best, ref.q(dx + px, dy + py));
    return std::sqrt(best);
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ui(0, n - 1);
  std::uniform_int_distribution<size_t> uk(0, K - 1);
  double sup = 0.0;
  for (int s = 0; s < nsample; ++s) {
    int i1 = ui(rng), j1 = ui(rng), i2 = ui(rng), j2 = ui(rng);
    size_t k1 = uk(rng), k2 = uk(rng);
    if (i1 == i2 && j1 == j2 && k1 == k2) continue;
    double d2 = torus_dist(i1, j1, i2, j2);
    double dp = std::sqrt(d2 * d2 + std::abs(ts[k1] - ts[k2]));
    if (dp < 1e-14) continue;
    double df = std::abs(us[k1](i1, j1) - us[k2](i2, j2));
    sup = std::max(sup, df / std::pow(dp, alpha));
  }
  out.holder_est = sup;
  out.holder_samples = nsample;
  return out;
}

// ---------------------------------------------------------------------------
// Verdicts

struct Thresholds {
  double vol_max = 10.0;
  double curvature_l2_max = 1e4;
  double hrf_integral_max = 1e6;    // int |R|^{2+eps} + int |d phi|^{4+2eps}
  double spinor_lq_max = 1e6;       // int |grad^2 phi|^q
  double spinor_sup_max = 1e3;      // sup |grad^2 phi|
  double inj_min = 1e-3;
  int window = 0;  // 0 = whole run, else trailing number of reports
};

struct CriterionVerdict {
  std::string name;
  bool passed = true;
  std::string violated_quantity;
  double violation_time = 0.0;
};

struct VerdictRecord {
  std::vector<CriterionVerdict> criteria;
  bool all_passed() const {
    for (auto& c : criteria)
      if (!c.passed) return false;
    return true;
  }
};

// Hypothesis checks per extendability criterion family:
//   geometry-control : sup vol, sup int R^2, inf inj
//   hrf-integral     : sup ( int |R|^{2+eps} + int |d phi|^{4+2eps} ), inf inj
//   spinor-integral  : sup int |grad^2 phi|^q, inf inj
//   spinor-pointwise : sup_x |grad^2 phi|
inline VerdictRecord verdict(const std::vector<MonitorReport>& reports, const Thresholds& th) {
  VerdictRecord out;
  if (reports.empty()) throw std::invalid_argument("verdict: empty report sequence");
  size_t start = 0;
  if (th.window > 0 && reports.size() > static_cast<size_t>(th.window))
    start = reports.size() - th.window;

  auto check = [&](const std::string& name,
                   const std::vector<std::pair<std::string, std::function<bool(const MonitorReport&)>>>& conds) {
    CriterionVerdict v;
    v.name = name;
    for (size_t k = start; k < reports.size() && v.passed; ++k) {
      for (auto& c : conds) {
        if (!c.second(reports[k])) {
          v.passed = false;
          v.violated_quantity = c.first;
          v.violation_time = reports[k].t;
          break;
        }
      }
    }
    out.criteria.push_back(v);
  };

  auto fin = [](double x) { return std::isfinite(x); };
  check("geometry-control",
        {{"vol", [&](const MonitorReport& r) { return fin(r.vol) && r.vol <= th.vol_max; }},
         {"curvature_l2",
          [&](const MonitorReport& r) { return fin(r.curvature_l2) && r.curvature_l2 <= th.curvature_l2_max; }},
         {"inj_lower_bound",
          [&](const MonitorReport& r) { return fin(r.inj_lower_bound) && r.inj_lower_bound >= th.inj_min; }}});
  check("hrf-integral",
        {{"curvature_l2e+map_grad_l4e",
          [&](const MonitorReport& r) {
            return fin(r.curvature_l2e) && fin(r.map_grad_l4e) &&
                   r.curvature_l2e + r.map_grad_l4e <= th.hrf_integral_max;
          }},
         {"inj_lower_bound",
          [&](const MonitorReport& r) { return fin(r.inj_lower_bound) && r.inj_lower_bound >= th.inj_min; }}});
  check("spinor-integral",
        {{"spinor_hess_lq",
          [&](const MonitorReport& r) { return fin(r.spinor_hess_lq) && r.spinor_hess_lq <= th.spinor_lq_max; }},
         {"inj_lower_bound",
          [&](const MonitorReport& r) { return fin(r.inj_lower_bound) && r.inj_lower_bound >= th.inj_min; }}});
  check("spinor-pointwise",
        {{"spinor_hess_sup", [&](const MonitorReport& r) {
            return fin(r.spinor_hess_sup) && r.spinor_hess_sup <= th.spinor_sup_max;
          }}});
  return out;
}

}  // namespace torusflow
