#pragma once

// Spinor operators on the torus: Dirac operator, connection Laplacian, the
// energy density, the T tensor and the flow gradients Q1 (metric direction)
// and Q2 (spinor direction). Everything is written against a SpinFrame, so
// conformal metrics and free frame fields share one code path.

#include <stdexcept>

#include "torusflow/elliptic.hpp"
#include "torusflow/spin_frame.hpp"

namespace torusflow {

inline cplx herm(const cplx& v1, const cplx& v2, const cplx& w1, const cplx& w2) {
  return v1 * std::conj(w1) + v2 * std::conj(w2);
}

inline void check_unit(const SpinorField& phi, double tol = 1e-8) {
  for (size_t i = 0; i < phi.a.size(); ++i) {
    double n2 = std::norm(phi.a[i]) + std::norm(phi.b[i]);
    if (!(std::abs(n2 - 1.0) < tol)) throw std::invalid_argument("spinor is not unit norm");
  }
}

// Pointwise Clifford action of a vector (or one-form) on phi.
inline SpinorField clifford_mul(const VectorField& v, const SpinorField& phi, const SpinFrame& fr) {
  SpinorField out(fr.n, fr.spin);
  for (size_t i = 0; i < out.a.size(); ++i) {
    double v1 = fr.s1x.v[i] * v.x.v[i] + fr.s1y.v[i] * v.y.v[i];
    double v2 = fr.s2x.v[i] * v.x.v[i] + fr.s2y.v[i] * v.y.v[i];
    cplx a1, b1, a2, b2;
    gamma1(phi.a[i], phi.b[i], a1, b1);
    gamma2(phi.a[i], phi.b[i], a2, b2);
    out.a[i] = v1 * a1 + v2 * a2;
    out.b[i] = v1 * b1 + v2 * b2;
  }
  return out;
}

inline SpinorField clifford_mul(const OneFormField& w, const SpinorField& phi,
                                const SpinFrame& fr) {
  SpinorField out(fr.n, fr.spin);
  for (size_t i = 0; i < out.a.size(); ++i) {
    // frame components of a one-form: w(E_i)
    double v1 = fr.e1x.v[i] * w.x.v[i] + fr.e1y.v[i] * w.y.v[i];
    double v2 = fr.e2x.v[i] * w.x.v[i] + fr.e2y.v[i] * w.y.v[i];
    cplx a1, b1, a2, b2;
    gamma1(phi.a[i], phi.b[i], a1, b1);
    gamma2(phi.a[i], phi.b[i], a2, b2);
    out.a[i] = v1 * a1 + v2 * a2;
    out.b[i] = v1 * b1 + v2 * b2;
  }
  return out;
}

// Frame components of the spin covariant derivative.
struct SpinDeriv {
  SpinorField d1, d2;
};

inline SpinDeriv spin_covariant_derivative(const SpinorField& phi, const SpinFrame& fr) {
  SpinorPartials p = spinor_partials(phi);
  return {spin_frame_derivative_from(phi, p, fr, 0), spin_frame_derivative_from(phi, p, fr, 1)};
}

inline ScalarField spin_deriv_norm2(const SpinDeriv& d) {
  ScalarField out(d.d1.n);
  for (size_t i = 0; i < out.size(); ++i)
    out.v[i] = std::norm(d.d1.a[i]) + std::norm(d.d1.b[i]) + std::norm(d.d2.a[i]) +
               std::norm(d.d2.b[i]);
  return out;
}

inline SpinorField dirac(const SpinorField& phi, const SpinFrame& fr) {
  SpinDeriv d = spin_covariant_derivative(phi, fr);
  SpinorField out(fr.n, fr.spin);
  for (size_t i = 0; i < out.a.size(); ++i) {
    cplx a1, b1, a2, b2;
    gamma1(d.d1.a[i], d.d1.b[i], a1, b1);
    gamma2(d.d2.a[i], d.d2.b[i], a2, b2);
    out.a[i] = a1 + a2;
    out.b[i] = b1 + b2;
  }
  return out;
}

// Full second covariant derivative, frame components d(i,j) = grad^2_{E_i,E_j}.
struct SecondDeriv {
  SpinorField d11, d12, d21, d22;

  // |grad^2 phi|^2 = sum of squared components
  ScalarField norm2() const {
    ScalarField out(d11.n);
    for (size_t i = 0; i < out.size(); ++i)
      out.v[i] = std::norm(d11.a[i]) + std::norm(d11.b[i]) + std::norm(d12.a[i]) +
                 std::norm(d12.b[i]) + std::norm(d21.a[i]) + std::norm(d21.b[i]) +
                 std::norm(d22.a[i]) + std::norm(d22.b[i]);
    return out;
  }
};

inline SecondDeriv second_covariant_derivative_from(const SpinDeriv& d, const SpinFrame& fr) {
  SpinorPartials p1 = spinor_partials(d.d1), p2 = spinor_partials(d.d2);
  SpinorField n11 = spin_frame_derivative_from(d.d1, p1, fr, 0);
  SpinorField n12 = spin_frame_derivative_from(d.d2, p2, fr, 0);
  SpinorField n21 = spin_frame_derivative_from(d.d1, p1, fr, 1);
  SpinorField n22 = spin_frame_derivative_from(d.d2, p2, fr, 1);
  // subtract grad phi ( grad_{E_i} E_j ): grad_{E_i} E_1 = w_i E_2, grad_{E_i} E_2 = -w_i E_1
  SecondDeriv out{SpinorField(fr.n, fr.spin), SpinorField(fr.n, fr.spin),
                  SpinorField(fr.n, fr.spin), SpinorField(fr.n, fr.spin)};
  for (size_t i = 0; i < n11.a.size(); ++i) {
    double wi1 = fr.w1.v[i], wi2 = fr.w2.v[i];
    out.d11.a[i] = n11.a[i] - wi1 * d.d2.a[i];
    out.d11.b[i] = n11.b[i] - wi1 * d.d2.b[i];
    out.d12.a[i] = n12.a[i] + wi1 * d.d1.a[i];
    out.d12.b[i] = n12.b[i] + wi1 * d.d1.b[i];
    out.d21.a[i] = n21.a[i] - wi2 * d.d2.a[i];
    out.d21.b[i] = n21.b[i] - wi2 * d.d2.b[i];
    out.d22.a[i] = n22.a[i] + wi2 * d.d1.a[i];
    out.d22.b[i] = n22.b[i] + wi2 * d.d1.b[i];
  }
  return out;
}

inline SecondDeriv second_covariant_derivative(const SpinorField& phi, const SpinFrame& fr) {
  return second_covariant_derivative_from(spin_covariant_derivative(phi, fr), fr);
}

// Symmetric / antisymmetric split; the halves satisfy the exact Pythagoras
// identity |grad^2 phi|^2 = |sym|^2 + |asym|^2. The curvature identity
// |grad^2_{12} - grad^2_{21}|^2 (+ transpose) = R^2/8 holds for the unhalved
// commutator, i.e. 4 |asym|^2 = R^2 / 8 on unit spinors.
struct SymAsymSplit {
  SecondDeriv sym;   // sym.d12 == sym.d21
  SecondDeriv asym;  // asym.d11 == asym.d22 == 0
};

inline SymAsymSplit sym_asym_split(const SecondDeriv& s) {
  SymAsymSplit out;
  out.sym = s;
  out.asym = s;
  for (size_t i = 0; i < s.d11.a.size(); ++i) {
    cplx ha = 0.5 * (s.d12.a[i] + s.d21.a[i]), hb = 0.5 * (s.d12.b[i] + s.d21.b[i]);
    cplx aa = 0.5 * (s.d12.a[i] - s.d21.a[i]), ab = 0.5 * (s.d12.b[i] - s.d21.b[i]);
    out.sym.d12.a[i] = out.sym.d21.a[i] = ha;
    out.sym.d12.b[i] = out.sym.d21.b[i] = hb;
    out.asym.d12.a[i] = aa;
    out.asym.d12.b[i] = ab;
    out.asym.d21.a[i] = -aa;
    out.asym.d21.b[i] = -ab;
    out.asym.d11.a[i] = out.asym.d11.b[i] = 0.0;
    out.asym.d22.a[i] = out.asym.d22.b[i] = 0.0;
  }
  return out;
}

// Connection Laplacian grad* grad phi = -(grad^2_{11} + grad^2_{22}) phi.
inline SpinorField connection_laplacian(const SpinorField& phi, const SpinFrame& fr) {
  SecondDeriv s = second_covariant_derivative(phi, fr);
  SpinorField out(fr.n, fr.spin);
  for (size_t i = 0; i < out.a.size(); ++i) {
    out.a[i] = -(s.d11.a[i] + s.d22.a[i]);
    out.b[i] = -(s.d11.b[i] + s.d22.b[i]);
  }
  return out;
}

// T(X,Y,Z) = sym_{Y,Z} <X.Y.phi, grad_Z phi>, stored by frame components with
// the Y,Z symmetry explicit: t[i][0] = T_i11, t[i][1] = T_i12, t[i][2] = T_i22.
struct TTensor {
  ScalarField t[2][3];
};

namespace detail {

// gamma_i gamma_j applied to (a,b)
inline void gamma_pair(int i, int j, cplx a, cplx b, cplx& oa, cplx& ob) {
  cplx ta, tb;
  if (j == 0)
    gamma1(a, b, ta, tb);
  else
    gamma2(a, b, ta, tb);
  if (i == 0)
    gamma1(ta, tb, oa, ob);
  else
    gamma2(ta, tb, oa, ob);
}

}  // namespace detail

inline TTensor tensor_T_from(const SpinorField& phi, const SpinDeriv& d, const SpinFrame& fr) {
  TTensor T;
  for (int i = 0; i < 2; ++i)
    for (int jk = 0; jk < 3; ++jk) T.t[i][jk] = ScalarField(fr.n);
  const SpinorField* ds[2] = {&d.d1, &d.d2};
  for (size_t p = 0; p < phi.a.size(); ++p) {
    for (int i = 0; i < 2; ++i) {
      cplx g1a, g1b, g2a, g2b;  // gamma_i gamma_1 phi and gamma_i gamma_2 phi
      detail::gamma_pair(i, 0, phi.a[p], phi.b[p], g1a, g1b);
      detail::gamma_pair(i, 1, phi.a[p], phi.b[p], g2a, g2b);
      // T_ijk = (1/2)( Re<gamma_i gamma_j phi, d_k> + Re<gamma_i gamma_k phi, d_j> )
      double t11 = herm(g1a, g1b, ds[0]->a[p], ds[0]->b[p]).real();
      double t12 = 0.5 * (herm(g1a, g1b, ds[1]->a[p], ds[1]->b[p]).real() +
                          herm(g2a, g2b, ds[0]->a[p], ds[0]->b[p]).real());
      double t22 = herm(g2a, g2b, ds[1]->a[p], ds[1]->b[p]).real();
      T.t[i][0].v[p] = t11;
      T.t[i][1].v[p] = t12;
      T.t[i][2].v[p] = t22;
    }
  }
  return T;
}

inline TTensor tensor_T(const SpinorField& phi, const SpinFrame& fr) {
  return tensor_T_from(phi, spin_covariant_derivative(phi, fr), fr);
}

// Symmetric 2-tensor in frame components.
struct Sym2Frame {
  ScalarField m11, m12, m22;
  explicit Sym2Frame(int n) : m11(n), m12(n), m22(n) {}
};

// div T, contracting the first slot with the project's divergence convention
// (div T)_{jk} = -sum_i (grad_{E_i} T)(E_i, E_j, E_k); the sign is pinned by
// the trace identity and the energy-gradient oracle.
inline Sym2Frame div_T_from(const TTensor& T, const SpinFrame& fr) {
  // directional derivatives E_l(T_{l jk}), partials pair-packed
  auto dir = [&](const ScalarField& fx, const ScalarField& fy, int which) {
    const ScalarField& ex = which == 0 ? fr.e1x : fr.e2x;
    const ScalarField& ey = which == 0 ? fr.e1y : fr.e2y;
    ScalarField out(fr.n);
    for (size_t i = 0; i < out.size(); ++i) out.v[i] = ex.v[i] * fx.v[i] + ey.v[i] * fy.v[i];
    return out;
  };
  ScalarField px[2][3], py[2][3];
  for (int jk = 0; jk < 3; ++jk) {
    deriv_pair(T.t[0][jk], T.t[1][jk], 0, px[0][jk], px[1][jk]);
    deriv_pair(T.t[0][jk], T.t[1][jk], 1, py[0][jk], py[1][jk]);
  }
  ScalarField d1_11 = dir(px[0][0], py[0][0], 0), d1_12 = dir(px[0][1], py[0][1], 0),
              d1_22 = dir(px[0][2], py[0][2], 0);
  ScalarField d2_11 = dir(px[1][0], py[1][0], 1), d2_12 = dir(px[1][1], py[1][1], 1),
              d2_22 = dir(px[1][2], py[1][2], 1);

  Sym2Frame out(fr.n);
  // connection corrections: rotating an index 1 -> 2 contributes +w_l T(..2..),
  // rotating 2 -> 1 contributes -w_l T(..1..); all three slots rotate.
  auto Tat = [&](int i, int j, int k, size_t p) {
    int jk = (j == 0 && k == 0) ? 0 : (j == 1 && k == 1) ? 2 : 1;
    return T.t[i][jk].v[p];
  };
  for (size_t p = 0; p < out.m11.size(); ++p) {
    double w[2] = {fr.w1.v[p], fr.w2.v[p]};
    auto covdiv = [&](int j, int k) {
      double s = (j == 0 && k == 0)   ? d1_11.v[p]
                 : (j == 1 && k == 1) ? d1_22.v[p]
                                      : d1_12.v[p];
      double s2 = (j == 0 && k == 0)   ? d2_11.v[p]
                  : (j == 1 && k == 1) ? d2_22.v[p]
                                       : d2_12.v[p];
      double acc = 0.0;
      for (int l = 0; l < 2; ++l) {
        double el = l == 0 ? s : s2;
        // slot 1 rotation (the contracted slot i = l)
        double corr = (l == 0 ? Tat(1, j, k, p) : -Tat(0, j, k, p));
        // slot 2 rotation
        corr += (j == 0 ? Tat(l, 1, k, p) : -Tat(l, 0, k, p));
        // slot 3 rotation
        corr += (k == 0 ? Tat(l, j, 1, p) : -Tat(l, j, 0, p));
        acc += el - w[l] * corr;
      }
      return -acc;
    };
    out.m11.v[p] = covdiv(0, 0);
    out.m12.v[p] = covdiv(0, 1);
    out.m22.v[p] = covdiv(1, 1);
  }
  return out;
}

inline Sym2Frame div_T(const SpinorField& phi, const SpinFrame& fr) {
  return div_T_from(tensor_T(phi, fr), fr);
}

struct Q1Result {
  Sym2Frame frame;       // frame components
  SymTensorField coord;  // coordinate components (covariant)
  ScalarField trace_g;   // tr_g Q1 = sum of frame diagonal

  explicit Q1Result(int n) : frame(n), coord(n), trace_g(n) {}
};

// Metric gradient of the spinor energy:
// Q1 = -(1/4)|grad phi|^2 g - (1/4) div T + (1/2) <grad phi (x) grad phi>.
inline Q1Result q1_from(const SpinorField& phi, const SpinDeriv& d, const SpinFrame& fr) {
  check_unit(phi, 0.05);  // loose: mid-step states drift before renormalization
  ScalarField n2 = spin_deriv_norm2(d);
  Sym2Frame divt = div_T_from(tensor_T_from(phi, d, fr), fr);
  Q1Result out(fr.n);
  for (size_t p = 0; p < n2.size(); ++p) {
    double q11 = -0.25 * n2.v[p] - 0.25 * divt.m11.v[p] +
                 0.5 * herm(d.d1.a[p], d.d1.b[p], d.d1.a[p], d.d1.b[p]).real();
    double q12 = -0.25 * divt.m12.v[p] +
                 0.5 * herm(d.d1.a[p], d.d1.b[p], d.d2.a[p], d.d2.b[p]).real();
    double q22 = -0.25 * n2.v[p] - 0.25 * divt.m22.v[p] +
                 0.5 * herm(d.d2.a[p], d.d2.b[p], d.d2.a[p], d.d2.b[p]).real();
    out.frame.m11.v[p] = q11;
    out.frame.m12.v[p] = q12;
    out.frame.m22.v[p] = q22;
    out.trace_g.v[p] = q11 + q22;
    // coordinates: Q_ab = Q_ij sigma^i_a sigma^j_b
    double s1x = fr.s1x.v[p], s1y = fr.s1y.v[p], s2x = fr.s2x.v[p], s2y = fr.s2y.v[p];
    out.coord.xx.v[p] = q11 * s1x * s1x + 2.0 * q12 * s1x * s2x + q22 * s2x * s2x;
    out.coord.xy.v[p] = q11 * s1x * s1y + q12 * (s1x * s2y + s2x * s1y) + q22 * s2x * s2y;
    out.coord.yy.v[p] = q11 * s1y * s1y + 2.0 * q12 * s1y * s2y + q22 * s2y * s2y;
  }
  return out;
}

inline Q1Result q1(const SpinorField& phi, const SpinFrame& fr) {
  return q1_from(phi, spin_covariant_derivative(phi, fr), fr);
}

// Spinor gradient Q2 = -grad*grad phi + |grad phi|^2 phi; tangent to the unit
// sphere constraint pointwise.
inline SpinorField q2_from(const SpinorField& phi, const SpinDeriv& d, const SpinFrame& fr) {
  check_unit(phi, 0.05);
  SecondDeriv s2 = second_covariant_derivative_from(d, fr);
  ScalarField n2 = spin_deriv_norm2(d);
  SpinorField out(fr.n, fr.spin);
  for (size_t i = 0; i < out.a.size(); ++i) {
    out.a[i] = (s2.d11.a[i] + s2.d22.a[i]) + n2.v[i] * phi.a[i];
    out.b[i] = (s2.d11.b[i] + s2.d22.b[i]) + n2.v[i] * phi.b[i];
  }
  return out;
}

inline SpinorField q2(const SpinorField& phi, const SpinFrame& fr) {
  return q2_from(phi, spin_covariant_derivative(phi, fr), fr);
}

// Both gradients sharing one covariant-derivative evaluation (the flows'
// inner loop).
struct SpinorGradients {
  SpinDeriv d;
  Q1Result q1;
  SpinorField q2;
  SpinorGradients(int n, SpinStructure s)
      : d{SpinorField(n, s), SpinorField(n, s)}, q1(n), q2(n, s) {}
};

inline SpinorGradients spinor_gradients(const SpinorField& phi, const SpinFrame& fr) {
  SpinorGradients out(fr.n, fr.spin);
  out.d = spin_covariant_derivative(phi, fr);
  out.q1 = q1_from(phi, out.d, fr);
  out.q2 = q2_from(phi, out.d, fr);
  return out;
}

// E = (1/2) int |grad phi|^2 vol_g.
inline double spinor_energy(const SpinorField& phi, const SpinFrame& fr) {
  SpinDeriv d = spin_covariant_derivative(phi, fr);
  ScalarField n2 = spin_deriv_norm2(d);
  double s = 0.0;
  for (size_t i = 0; i < n2.size(); ++i) s += n2.v[i] * fr.dens.v[i];
  return 0.5 * s / (static_cast<double>(fr.n) * fr.n);
}

enum class LieFlat { flat_base, full_metric };

// Spinorial Lie derivative L_X phi = grad^g_X phi - (1/4) dX^flat . phi.
// The flavor picks the metric used for the musical isomorphism and d.
inline SpinorField spin_lie_derivative_from(const VectorField& X, const SpinorField& phi,
                                            const SpinDeriv& d, const ConformalMetric& cm,
                                            const SpinFrame& fr,
                                            LieFlat flavor = LieFlat::flat_base) {
  const FlatMetric& G = cm.base;
  const int n = fr.n;
  // lowered components
  ScalarField wx(n), wy(n);
  for (size_t i = 0; i < wx.size(); ++i) {
    double e = flavor == LieFlat::full_metric ? std::exp(2.0 * cm.u.v[i]) : 1.0;
    wx.v[i] = e * (G.g11 * X.x.v[i] + G.g12 * X.y.v[i]);
    wy.v[i] = e * (G.g12 * X.x.v[i] + G.g22 * X.y.v[i]);
  }
  ScalarField curl = deriv(wy, 0);
  ScalarField cy = deriv(wx, 1);
  for (size_t i = 0; i < curl.size(); ++i) curl.v[i] -= cy.v[i];
  // 2-form coefficient against the volume form of the chosen metric
  ScalarField b(n);
  const double sd = std::sqrt(G.det());
  for (size_t i = 0; i < b.size(); ++i) {
    double volc = flavor == LieFlat::full_metric ? std::exp(2.0 * cm.u.v[i]) * sd : sd;
    b.v[i] = curl.v[i] / volc;
  }
  SpinorField out(n, fr.spin);
  for (size_t i = 0; i < out.a.size(); ++i) {
    double X1 = fr.s1x.v[i] * X.x.v[i] + fr.s1y.v[i] * X.y.v[i];
    double X2 = fr.s2x.v[i] * X.x.v[i] + fr.s2y.v[i] * X.y.v[i];
    cplx oa, ob;
    vol_elem(phi.a[i], phi.b[i], oa, ob);
    out.a[i] = X1 * d.d1.a[i] + X2 * d.d2.a[i] - 0.25 * b.v[i] * oa;
    out.b[i] = X1 * d.d1.b[i] + X2 * d.d2.b[i] - 0.25 * b.v[i] * ob;
  }
  return out;
}

inline SpinorField spin_lie_derivative(const VectorField& X, const SpinorField& phi,
                                       const ConformalMetric& cm, const SpinFrame& fr,
                                       LieFlat flavor = LieFlat::flat_base) {
  return spin_lie_derivative_from(X, phi, spin_covariant_derivative(phi, fr), cm, fr, flavor);
}

// Gauge function of the rewritten split system, assembled from the spinor:
// Delta rt = delta[ Qring1(gradbar u, .) ] with zero mean.
inline RhoSolution solve_rho_tilde(const ConformalMetric& cm, const SpinorField& phi) {
  SpinFrame fr = make_spin_frame(cm, phi.spin);
  Q1Result q = q1(phi, fr);
  SymTensorField qring = trace_free_part(q.coord, cm);
  return solve_rho_tilde_data(qring, cm);
}

}  // namespace torusflow
