#pragma once

// Orthonormal frames and the spin connection. A SpinFrame carries everything
// the spinor operators need: frame vectors E_i (g-orthonormal), the coframe,
// the connection coefficient w_i = omega_12(E_i) and the volume density.
// Frames come from two sources: conformal metrics e^{2u} G (the split flow)
// and free frame fields (the unsplit flows, where the metric is g^{-1} = E E^T).
//
// Gamma representation: gamma_1 = i sigma_1, gamma_2 = i sigma_2, so
// gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij and omega = gamma_1 gamma_2
// = -i sigma_3 is the constant volume element.

#include <array>
#include <cmath>

#include "torusflow/conformal.hpp"

namespace torusflow {

// Clifford action of the frame vectors on a spinor value (a, b).
inline void gamma1(cplx a, cplx b, cplx& oa, cplx& ob) {
  oa = cplx(0.0, 1.0) * b;
  ob = cplx(0.0, 1.0) * a;
}
inline void gamma2(cplx a, cplx b, cplx& oa, cplx& ob) {
  oa = b;
  ob = -a;
}
inline void vol_elem(cplx a, cplx b, cplx& oa, cplx& ob) {  // omega = gamma1 gamma2
  oa = cplx(0.0, -1.0) * a;
  ob = cplx(0.0, 1.0) * b;
}

struct SpinFrame {
  int n = 0;
  SpinStructure spin;
  // frame vectors E_i^a and coframe sigma^i_a
  ScalarField e1x, e1y, e2x, e2y;
  ScalarField s1x, s1y, s2x, s2y;
  // spin connection omega_12 along the frame directions
  ScalarField w1, w2;
  // volume density sqrt(det g)
  ScalarField dens;
};

// Coordinate partials of both spinor components (twisted spectral).
struct SpinorPartials {
  std::vector<cplx> ax, ay, bx, by;
};

inline SpinorPartials spinor_partials(const SpinorField& phi) {
  SpinorPartials p;
  p.ax = deriv_spinor_comp(phi.a, phi.n, phi.spin, 0);
  p.ay = deriv_spinor_comp(phi.a, phi.n, phi.spin, 1);
  p.bx = deriv_spinor_comp(phi.b, phi.n, phi.spin, 0);
  p.by = deriv_spinor_comp(phi.b, phi.n, phi.spin, 1);
  return p;
}

// Spin covariant derivative along E_i from precomputed partials:
// grad_{E_i} phi = E_i(phi) + (1/2) w_i omega . phi
inline SpinorField spin_frame_derivative_from(const SpinorField& phi, const SpinorPartials& p,
                                              const SpinFrame& fr, int which) {
  SpinorField out(fr.n, fr.spin);
  const ScalarField& ex = which == 0 ? fr.e1x : fr.e2x;
  const ScalarField& ey = which == 0 ? fr.e1y : fr.e2y;
  const ScalarField& w = which == 0 ? fr.w1 : fr.w2;
  for (size_t i = 0; i < out.a.size(); ++i) {
    cplx oa, ob;
    vol_elem(phi.a[i], phi.b[i], oa, ob);
    out.a[i] = ex.v[i] * p.ax[i] + ey.v[i] * p.ay[i] + 0.5 * w.v[i] * oa;
    out.b[i] = ex.v[i] * p.bx[i] + ey.v[i] * p.by[i] + 0.5 * w.v[i] * ob;
  }
  return out;
}

inline SpinorField spin_frame_derivative(const SpinorField& phi, const SpinFrame& fr, int which) {
  return spin_frame_derivative_from(phi, spinor_partials(phi), fr, which);
}

// Frame of the conformal metric g = e^{2u} G: E_i = e^{-u} Ehat_i with
// Ehat the Cholesky frame of G, and the conformal spin connection
//   w_1 = -e^{-u} Ehat_2(u),  w_2 = +e^{-u} Ehat_1(u).
inline SpinFrame make_spin_frame(const ConformalMetric& cm, SpinStructure spin) {
  const int n = cm.n();
  auto l = cm.base.cholesky();  // (l11, l21, l22)
  // columns of L^{-T}
  const double eh1x = 1.0 / l[0], eh1y = 0.0;
  const double eh2x = -l[1] / (l[0] * l[2]), eh2y = 1.0 / l[2];
  const double sd = l[0] * l[2];  // sqrt(det G)

  SpinFrame fr;
  fr.n = n;
  fr.spin = spin;
  ScalarField ux = deriv(cm.u, 0), uy = deriv(cm.u, 1);
  fr.e1x = ScalarField(n);
  fr.e1y = ScalarField(n);
  fr.e2x = ScalarField(n);
  fr.e2y = ScalarField(n);
  fr.s1x = ScalarField(n);
  fr.s1y = ScalarField(n);
  fr.s2x = ScalarField(n);
  fr.s2y = ScalarField(n);
  fr.w1 = ScalarField(n);
  fr.w2 = ScalarField(n);
  fr.dens = ScalarField(n);
  for (size_t i = 0; i < fr.e1x.size(); ++i) {
    double eu = std::exp(-cm.u.v[i]);
    fr.e1x.v[i] = eu * eh1x;
    fr.e1y.v[i] = eu * eh1y;
    fr.e2x.v[i] = eu * eh2x;
    fr.e2y.v[i] = eu * eh2y;
    double ep = std::exp(cm.u.v[i]);
    // sigma = e^u L^T rows
    fr.s1x.v[i] = ep * l[0];
    fr.s1y.v[i] = ep * l[1];
    fr.s2x.v[i] = 0.0;
    fr.s2y.v[i] = ep * l[2];
    double eh1u = eh1x * ux.v[i] + eh1y * uy.v[i];
    double eh2u = eh2x * ux.v[i] + eh2y * uy.v[i];
    fr.w1.v[i] = -eu * eh2u;
    fr.w2.v[i] = eu * eh1u;
    fr.dens.v[i] = std::exp(2.0 * cm.u.v[i]) * sd;
  }
  return fr;
}

// Free orthonormal frame field: the metric is defined by g^{-1} = E E^T.
// This is the state variable of the unsplit flows.
struct FrameField {
  int n = 0;
  ScalarField e1x, e1y, e2x, e2y;

  FrameField() = default;
  explicit FrameField(int n_) : n(n_), e1x(n_), e1y(n_), e2x(n_), e2y(n_) {}
};

inline FrameField conformal_frame_field(const ConformalMetric& cm) {
  auto l = cm.base.cholesky();
  const double eh1x = 1.0 / l[0], eh2x = -l[1] / (l[0] * l[2]), eh2y = 1.0 / l[2];
  FrameField F(cm.n());
  for (size_t i = 0; i < F.e1x.size(); ++i) {
    double eu = std::exp(-cm.u.v[i]);
    F.e1x.v[i] = eu * eh1x;
    F.e1y.v[i] = 0.0;
    F.e2x.v[i] = eu * eh2x;
    F.e2y.v[i] = eu * eh2y;
  }
  return F;
}

// Metric components reconstructed from the frame.
inline SymTensorField frame_metric(const FrameField& F) {
  SymTensorField g(F.n);
  for (size_t i = 0; i < g.xx.size(); ++i) {
    double i11 = F.e1x.v[i] * F.e1x.v[i] + F.e2x.v[i] * F.e2x.v[i];
    double i12 = F.e1x.v[i] * F.e1y.v[i] + F.e2x.v[i] * F.e2y.v[i];
    double i22 = F.e1y.v[i] * F.e1y.v[i] + F.e2y.v[i] * F.e2y.v[i];
    double d = i11 * i22 - i12 * i12;
    g.xx.v[i] = i22 / d;
    g.xy.v[i] = -i12 / d;
    g.yy.v[i] = i11 / d;
  }
  return g;
}

// SpinFrame from a free frame field. Connection and curvature come from the
// structure functions: with [E_1,E_2] = c^1 E_1 + c^2 E_2,
//   omega_12(E_k) = -c^k,   K = -( E_1(w_2) - E_2(w_1) - (c^1 w_1 + c^2 w_2) ).
inline SpinFrame make_spin_frame(const FrameField& F, SpinStructure spin) {
  const int n = F.n;
  SpinFrame fr;
  fr.n = n;
  fr.spin = spin;
  fr.e1x = F.e1x;
  fr.e1y = F.e1y;
  fr.e2x = F.e2x;
  fr.e2y = F.e2y;
  fr.s1x = ScalarField(n);
  fr.s1y = ScalarField(n);
  fr.s2x = ScalarField(n);
  fr.s2y = ScalarField(n);
  fr.w1 = ScalarField(n);
  fr.w2 = ScalarField(n);
  fr.dens = ScalarField(n);

  ScalarField d_e2x_x = deriv(F.e2x, 0), d_e2x_y = deriv(F.e2x, 1);
  ScalarField d_e2y_x = deriv(F.e2y, 0), d_e2y_y = deriv(F.e2y, 1);
  ScalarField d_e1x_x = deriv(F.e1x, 0), d_e1x_y = deriv(F.e1x, 1);
  ScalarField d_e1y_x = deriv(F.e1y, 0), d_e1y_y = deriv(F.e1y, 1);

  for (size_t i = 0; i < fr.e1x.size(); ++i) {
    double m11 = F.e1x.v[i], m12 = F.e2x.v[i];  // M[a][i] = E_i^a
    double m21 = F.e1y.v[i], m22 = F.e2y.v[i];
    double det = m11 * m22 - m12 * m21;
    fr.s1x.v[i] = m22 / det;
    fr.s1y.v[i] = -m12 / det;
    fr.s2x.v[i] = -m21 / det;
    fr.s2y.v[i] = m11 / det;
    fr.dens.v[i] = 1.0 / std::abs(det);
    // commutator [E1, E2]^a = E1^b d_b E2^a - E2^b d_b E1^a
    double cx = m11 * d_e2x_x.v[i] + m21 * d_e2x_y.v[i] - m12 * d_e1x_x.v[i] - m22 * d_e1x_y.v[i];
    double cy = m11 * d_e2y_x.v[i] + m21 * d_e2y_y.v[i] - m12 * d_e1y_x.v[i] - m22 * d_e1y_y.v[i];
    double c1 = fr.s1x.v[i] * cx + fr.s1y.v[i] * cy;
    double c2 = fr.s2x.v[i] * cx + fr.s2y.v[i] * cy;
    fr.w1.v[i] = -c1;
    fr.w2.v[i] = -c2;
  }
  return fr;
}

// Gauss curvature of the frame metric (Cartan structure equation); R = 2K.
inline ScalarField frame_scalar_curvature(const SpinFrame& fr) {
  // E_k(w) as real directional derivatives
  ScalarField w2x = deriv(fr.w2, 0), w2y = deriv(fr.w2, 1);
  ScalarField w1x = deriv(fr.w1, 0), w1y = deriv(fr.w1, 1);
  ScalarField R(fr.n);
  for (size_t i = 0; i < R.size(); ++i) {
    double e1w2 = fr.e1x.v[i] * w2x.v[i] + fr.e1y.v[i] * w2y.v[i];
    double e2w1 = fr.e2x.v[i] * w1x.v[i] + fr.e2y.v[i] * w1y.v[i];
    double c1 = -fr.w1.v[i], c2 = -fr.w2.v[i];
    double K = -(e1w2 - e2w1 - (c1 * fr.w1.v[i] + c2 * fr.w2.v[i]));
    R.v[i] = 2.0 * K;
  }
  return R;
}

}  // namespace torusflow
