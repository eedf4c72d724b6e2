#pragma once

// Elliptic gauge solvers of the split flow: the conformal correction rho, the
// drift vector field X, the horizontal (constant trace-free) projection and
// the curvature potential. On the flat torus every solve is a constant
// coefficient spectral inversion; kernels (constants for the Laplacian,
// parallel fields for delta delta*) are projected out and the discarded
// component is reported.

#include <array>
#include <cmath>
#include <stdexcept>

#include "torusflow/conformal.hpp"

namespace torusflow {

struct PoissonResult {
  ScalarField f;
  double removed_mean = 0.0;  // flat mean of the data that had to be dropped
  bool mean_warning = false;
};

// Solves Delta_G out = rhs with mean(out) = 0 (positive Laplacian).
inline PoissonResult poisson_solve_zero_mean(const ScalarField& rhs, const FlatMetric& G,
                                             double mean_tol = 1e-10) {
  auto gi = G.inv();
  PoissonResult res;
  res.removed_mean = field_mean(rhs);
  res.mean_warning = std::abs(res.removed_mean) > mean_tol;
  auto a = detail::to_complex(rhs);
  detail::apply_multiplier(a, rhs.n, [&gi](int k1, int k2, int, int) -> cplx {
    if (k1 == 0 && k2 == 0) return 0.0;
    double sym = kTwoPi * kTwoPi * (gi[0] * k1 * k1 + 2.0 * gi[1] * k1 * k2 + gi[2] * k2 * k2);
    return 1.0 / sym;
  });
  res.f = detail::to_real(a, rhs.n);
  return res;
}

struct RhoSolution {
  ScalarField rho;
  double residual_l2 = 0.0;  // |Delta rho + delta delta (e^{-2u} qring)|_{L2(G)}
  double data_l2 = 0.0;      // |e^{-2u} qring|_{L2(G)}
  double removed_mean = 0.0;
};

namespace detail {

inline SymTensorField scale_by_exp(const SymTensorField& q, const ScalarField& u, double c) {
  SymTensorField out(q.n());
  for (size_t i = 0; i < out.xx.size(); ++i) {
    double e = std::exp(c * u.v[i]);
    out.xx.v[i] = e * q.xx.v[i];
    out.xy.v[i] = e * q.xy.v[i];
    out.yy.v[i] = e * q.yy.v[i];
  }
  return out;
}

inline double l2_flat(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.v) s += x * x;
  return std::sqrt(s / static_cast<double>(f.size()));
}

inline double l2_flat(const OneFormField& w, const FlatMetric& G) {
  auto gi = G.inv();
  double s = 0.0;
  for (size_t i = 0; i < w.x.size(); ++i)
    s += gi[0] * w.x.v[i] * w.x.v[i] + 2.0 * gi[1] * w.x.v[i] * w.y.v[i] +
         gi[2] * w.y.v[i] * w.y.v[i];
  return std::sqrt(s / static_cast<double>(w.x.size()));
}

inline double l2_flat(const SymTensorField& h, const FlatMetric& G) {
  ConformalMetric flat(G, ScalarField(h.n(), 0.0));
  ScalarField n2 = pointwise_norm2(h, flat);
  double s = 0.0;
  for (double x : n2.v) s += x;
  return std::sqrt(s / static_cast<double>(n2.size()));
}

}  // namespace detail

// Conformal gauge function: Delta_G rho = -delta_G delta_G (e^{-2u} qring),
// mean(rho) = 0. qring must be trace-free (with respect to G, equivalently g).
inline RhoSolution solve_rho(const SymTensorField& qring, const FlatMetric& G,
                             const ScalarField& u) {
  if (!finite(u)) throw std::invalid_argument("solve_rho: non-finite conformal factor");
  for (const ScalarField* c : {&qring.xx, &qring.xy, &qring.yy})
    if (!finite(*c)) throw std::invalid_argument("solve_rho: non-finite data");
  SymTensorField data = detail::scale_by_exp(qring, u, -2.0);
  OneFormField dd = divergence_sym_flat(data, G);
  ScalarField ddd = divergence_oneform_flat(dd, G);
  ScalarField rhs(ddd.n);
  for (size_t i = 0; i < rhs.size(); ++i) rhs.v[i] = -ddd.v[i];
  PoissonResult p = poisson_solve_zero_mean(rhs, G);
  RhoSolution sol;
  sol.rho = std::move(p.f);
  sol.removed_mean = p.removed_mean;
  sol.data_l2 = detail::l2_flat(data, G);
  ScalarField resid = laplacian_flat(sol.rho, G);
  for (size_t i = 0; i < resid.size(); ++i) resid.v[i] += ddd.v[i];
  sol.residual_l2 = detail::l2_flat(resid);
  return sol;
}

// Rewritten gauge function from the split spinor system:
// Delta_G rt = delta_G [ qring1(gradbar u, .) ]  (the curvature term of the
// background drops out on the torus), mean zero.
inline RhoSolution solve_rho_tilde_data(const SymTensorField& qring1, const ConformalMetric& cm) {
  const FlatMetric& G = cm.base;
  auto gi = G.inv();
  ScalarField ux = deriv(cm.u, 0), uy = deriv(cm.u, 1);
  OneFormField contracted(qring1.n());
  for (size_t i = 0; i < contracted.x.size(); ++i) {
    double gux = gi[0] * ux.v[i] + gi[1] * uy.v[i];
    double guy = gi[1] * ux.v[i] + gi[2] * uy.v[i];
    contracted.x.v[i] = qring1.xx.v[i] * gux + qring1.xy.v[i] * guy;
    contracted.y.v[i] = qring1.xy.v[i] * gux + qring1.yy.v[i] * guy;
  }
  ScalarField rhs = divergence_oneform_flat(contracted, G);
  PoissonResult p = poisson_solve_zero_mean(rhs, G);
  RhoSolution sol;
  sol.rho = std::move(p.f);
  sol.removed_mean = p.removed_mean;
  sol.data_l2 = detail::l2_flat(contracted, G);
  ScalarField resid = laplacian_flat(sol.rho, G);
  for (size_t i = 0; i < resid.size(); ++i) resid.v[i] -= rhs.v[i];
  sol.residual_l2 = detail::l2_flat(resid);
  return sol;
}

struct XSolution {
  VectorField X;
  double residual_l2 = 0.0;        // |delta delta* X - w|_{L2(G)}
  double killing_component = 0.0;  // size of the parallel part of the data
  bool solvability_warning = false;
  double w12_norm = 0.0;  // |X|_{W^{1,2}(G)}
};

// Drift field: delta_G delta_G* X^flat = d rho - delta_G(e^{-2u} qring),
// X orthogonal to the parallel (Killing) fields. The a posteriori residual and
// the W^{1,2} norm go through the physical-space operators and cost several
// transforms; with_diagnostics = false skips them on flow inner steps.
inline XSolution solve_gauge_field_X(const SymTensorField& qring, const ScalarField& rho,
                                     const FlatMetric& G, const ScalarField& u,
                                     double kernel_tol = 1e-8, bool with_diagnostics = true) {
  const int n = qring.n();
  SymTensorField data = detail::scale_by_exp(qring, u, -2.0);
  OneFormField dq = divergence_sym_flat(data, G);
  ScalarField rx = deriv(rho, 0), ry = deriv(rho, 1);
  OneFormField w(n);
  for (size_t i = 0; i < w.x.size(); ++i) {
    w.x.v[i] = rx.v[i] - dq.x.v[i];
    w.y.v[i] = ry.v[i] - dq.y.v[i];
  }

  auto gi = G.inv();
  std::vector<cplx> wx = detail::to_complex(w.x), wy = detail::to_complex(w.y);
  fft2(wx, n, FFTW_FORWARD);
  fft2(wy, n, FFTW_FORWARD);
  const double norm = 1.0 / (static_cast<double>(n) * n);
  XSolution sol;
  sol.killing_component = std::abs(wx[0]) * norm + std::abs(wy[0]) * norm;
  sol.solvability_warning = sol.killing_component > kernel_tol * (1.0 + detail::l2_flat(w, G));
  std::vector<cplx> Xx(wx.size()), Xy(wy.size());
  for (int m1 = 0; m1 < n; ++m1) {
    int k1 = fft_freq(m1, n);
    for (int m2 = 0; m2 < n; ++m2) {
      int k2 = fft_freq(m2, n);
      size_t id = static_cast<size_t>(m1) * n + m2;
      if (k1 == 0 && k2 == 0) {
        Xx[id] = Xy[id] = 0.0;
        continue;
      }
      double kk = gi[0] * k1 * k1 + 2.0 * gi[1] * k1 * k2 + gi[2] * k2 * k2;  // |k|^2_G
      double c = kTwoPi * kTwoPi;
      // M = (2 pi)^2 [ |k|^2_G G + k k^T ], acting on vector components
      double m11 = c * (kk * G.g11 + static_cast<double>(k1) * k1);
      double m12 = c * (kk * G.g12 + static_cast<double>(k1) * k2);
      double m21 = c * (kk * G.g12 + static_cast<double>(k2) * k1);
      double m22 = c * (kk * G.g22 + static_cast<double>(k2) * k2);
      double det = m11 * m22 - m12 * m21;
      cplx a = wx[id] * norm, b = wy[id] * norm;
      Xx[id] = (m22 * a - m12 * b) / det;
      Xy[id] = (-m21 * a + m11 * b) / det;
    }
  }
  fft2(Xx, n, FFTW_BACKWARD);
  fft2(Xy, n, FFTW_BACKWARD);
  sol.X = VectorField(n);
  for (size_t i = 0; i < sol.X.x.size(); ++i) {
    sol.X.x.v[i] = Xx[i].real();
    sol.X.y.v[i] = Xy[i].real();
  }

  if (!with_diagnostics) return sol;
  ConformalMetric flat(G, ScalarField(n, 0.0));
  OneFormField lhs = divergence_sym_flat(killing_operator(sol.X, flat), G);
  OneFormField resid(n);
  for (size_t i = 0; i < resid.x.size(); ++i) {
    resid.x.v[i] = lhs.x.v[i] - w.x.v[i];
    resid.y.v[i] = lhs.y.v[i] - w.y.v[i];
  }
  // the kernel component of the data cannot be matched; remove it from the residual
  double mx = field_mean(resid.x), my = field_mean(resid.y);
  for (size_t i = 0; i < resid.x.size(); ++i) {
    resid.x.v[i] -= mx;
    resid.y.v[i] -= my;
  }
  sol.residual_l2 = detail::l2_flat(resid, G);

  ScalarField dxx = deriv(sol.X.x, 0), dxy = deriv(sol.X.x, 1), dyx = deriv(sol.X.y, 0),
              dyy = deriv(sol.X.y, 1);
  double s = 0.0;
  for (size_t i = 0; i < dxx.size(); ++i) {
    double x2 = G.g11 * sol.X.x.v[i] * sol.X.x.v[i] + 2.0 * G.g12 * sol.X.x.v[i] * sol.X.y.v[i] +
                G.g22 * sol.X.y.v[i] * sol.X.y.v[i];
    // |grad X|^2 = G^{ab} G_{cd} d_a X^c d_b X^d
    double g2 = 0.0;
    double da[2][2] = {{dxx.v[i], dxy.v[i]}, {dyx.v[i], dyy.v[i]}};  // da[c][a] = d_a X^c
    double Gm[2][2] = {{G.g11, G.g12}, {G.g12, G.g22}};
    double Gi[2][2] = {{gi[0], gi[1]}, {gi[1], gi[2]}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int cdx = 0; cdx < 2; ++cdx)
          for (int d = 0; d < 2; ++d) g2 += Gi[a][b] * Gm[cdx][d] * da[cdx][a] * da[d][b];
    s += x2 + g2;
  }
  sol.w12_norm = std::sqrt(s / static_cast<double>(dxx.size()));
  return sol;
}

// Orthonormal basis of the horizontal space: constant G-trace-free symmetric
// matrices, Gram-Schmidt of {diag(1,-1), offdiag(1,1)} after removing the
// G-trace, in the G inner product.
struct HorizontalBasis {
  std::array<double, 3> e1, e2;  // (xx, xy, yy)
};

inline HorizontalBasis horizontal_basis(const FlatMetric& G) {
  auto gi = G.inv();
  auto trace_free = [&](std::array<double, 3> m) {
    double tr = gi[0] * m[0] + 2.0 * gi[1] * m[1] + gi[2] * m[2];
    return std::array<double, 3>{m[0] - 0.5 * tr * G.g11, m[1] - 0.5 * tr * G.g12,
                                 m[2] - 0.5 * tr * G.g22};
  };
  auto ip = [&](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    // G^{ac} G^{bd} a_ab b_cd
    double a11 = gi[0] * a[0] + gi[1] * a[1], a12 = gi[0] * a[1] + gi[1] * a[2];
    double a21 = gi[1] * a[0] + gi[2] * a[1], a22 = gi[1] * a[1] + gi[2] * a[2];
    double b11 = gi[0] * b[0] + gi[1] * b[1], b12 = gi[0] * b[1] + gi[1] * b[2];
    double b21 = gi[1] * b[0] + gi[2] * b[1], b22 = gi[1] * b[1] + gi[2] * b[2];
    return a11 * b11 + a12 * b21 + a21 * b12 + a22 * b22;
  };
  HorizontalBasis basis;
  auto v1 = trace_free({1.0, 0.0, -1.0});
  double n1 = std::sqrt(ip(v1, v1));
  basis.e1 = {v1[0] / n1, v1[1] / n1, v1[2] / n1};
  auto v2 = trace_free({0.0, 1.0, 0.0});
  double c = ip(v2, basis.e1);
  for (int i = 0; i < 3; ++i) v2[i] -= c * basis.e1[i];
  double n2 = std::sqrt(ip(v2, v2));
  basis.e2 = {v2[0] / n2, v2[1] / n2, v2[2] / n2};
  return basis;
}

// Element of the horizontal space H_G, stored by coefficients in the
// orthonormal basis; as a tensor it is trace and divergence free exactly.
struct HorizontalTensor {
  double c1 = 0.0, c2 = 0.0;
  HorizontalBasis basis;

  std::array<double, 3> matrix() const {
    return {c1 * basis.e1[0] + c2 * basis.e2[0], c1 * basis.e1[1] + c2 * basis.e2[1],
            c1 * basis.e1[2] + c2 * basis.e2[2]};
  }
  double norm() const { return std::sqrt(c1 * c1 + c2 * c2); }
};

// L^2(G) projection onto H_G: coefficients are inner products against the
// orthonormal constant basis (vol_G = dx dy for unit determinant).
inline HorizontalTensor horizontal_projection(const SymTensorField& h, const FlatMetric& G) {
  auto gi = G.inv();
  HorizontalTensor out;
  out.basis = horizontal_basis(G);
  auto accum = [&](const std::array<double, 3>& e) {
    double e11 = gi[0] * e[0] + gi[1] * e[1], e12 = gi[0] * e[1] + gi[1] * e[2];
    double e21 = gi[1] * e[0] + gi[2] * e[1], e22 = gi[1] * e[1] + gi[2] * e[2];
    double s = 0.0;
    for (size_t i = 0; i < h.xx.size(); ++i) {
      double a11 = gi[0] * h.xx.v[i] + gi[1] * h.xy.v[i];
      double a12 = gi[0] * h.xy.v[i] + gi[1] * h.yy.v[i];
      double a21 = gi[1] * h.xx.v[i] + gi[2] * h.xy.v[i];
      double a22 = gi[1] * h.xy.v[i] + gi[2] * h.yy.v[i];
      s += a11 * e11 + a12 * e21 + a21 * e12 + a22 * e22;
    }
    return s / static_cast<double>(h.xx.size());
  };
  out.c1 = accum(out.basis.e1);
  out.c2 = accum(out.basis.e2);
  return out;
}

struct CurvaturePotential {
  ScalarField f;
  double residual_l2 = 0.0;  // |Delta_g f - (R - r)|_{L2(g)}
  double max_abs = 0.0;
  double r = 0.0;  // average curvature, 0 on the torus up to roundoff
};

// Zero g-mean solution of Delta_g f = R_g - r.
inline CurvaturePotential curvature_potential(const ConformalMetric& cm) {
  CurvaturePotential out;
  ScalarField R = scalar_curvature(cm);
  double vol = volume(cm);
  out.r = integrate(R, cm) / vol;
  ScalarField rhs_flat(R.n);
  for (size_t i = 0; i < rhs_flat.size(); ++i)
    rhs_flat.v[i] = std::exp(2.0 * cm.u.v[i]) * (R.v[i] - out.r);
  PoissonResult p = poisson_solve_zero_mean(rhs_flat, cm.base);
  out.f = std::move(p.f);
  double gmean = integrate(out.f, cm) / vol;
  for (auto& x : out.f.v) x -= gmean;
  ScalarField resid = laplacian_flat(out.f, cm.base);
  for (size_t i = 0; i < resid.size(); ++i)
    resid.v[i] = std::exp(-2.0 * cm.u.v[i]) * resid.v[i] - (R.v[i] - out.r);
  out.residual_l2 = lp_norm(resid, cm, 2.0);
  out.max_abs = max_abs(out.f);
  return out;
}

// Bundle of the per-step gauge quantities and their solver diagnostics.
struct GaugeSolution {
  ScalarField rho;
  VectorField X;
  double rho_residual = 0.0;
  double x_residual = 0.0;
  double rho_removed_mean = 0.0;
  double x_killing_component = 0.0;
  double x_w12_norm = 0.0;
  double rho_l2 = 0.0;
  double data_l2 = 0.0;
  bool solvability_warning = false;
};

inline GaugeSolution solve_gauge(const SymTensorField& qring, const FlatMetric& G,
                                 const ScalarField& u, bool with_diagnostics = true) {
  GaugeSolution gs;
  RhoSolution rs = solve_rho(qring, G, u);
  XSolution xs = solve_gauge_field_X(qring, rs.rho, G, u, 1e-8, with_diagnostics);
  gs.rho = std::move(rs.rho);
  gs.X = std::move(xs.X);
  gs.rho_residual = rs.residual_l2;
  gs.rho_removed_mean = rs.removed_mean;
  gs.data_l2 = rs.data_l2;
  gs.rho_l2 = detail::l2_flat(gs.rho);
  gs.x_residual = xs.residual_l2;
  gs.x_killing_component = xs.killing_component;
  gs.x_w12_norm = xs.w12_norm;
  gs.solvability_warning = xs.solvability_warning;
  return gs;
}

}  // namespace torusflow
