#pragma once

// Conformal metrics g = e^{2u} G on the torus and the differential operators
// the flows and gauge solvers are built from.
//
// Sign conventions used throughout the project:
//   * positive Laplacian       Delta f = -G^{ab} d_a d_b f
//   * scalar curvature         R = 2K,  R_g = e^{-2u} (R_G + 2 Delta_G u)
//   * Killing operator         delta* X = L_X g    (no 1/2)
//   * tensor divergence        (delta h)_a = -g^{bc} grad_b h_ca
// With these, delta* and delta pair as <delta* X, h> = <X, 2 delta h> in
// L^2(g); the factor 2 is pinned by the adjointness test.

#include <cmath>
#include <stdexcept>

#include "torusflow/flat_metric.hpp"
#include "torusflow/grid.hpp"

namespace torusflow {

struct ConformalMetric {
  FlatMetric base;
  ScalarField u;

  ConformalMetric() = default;
  ConformalMetric(FlatMetric g, ScalarField u_) : base(g), u(std::move(u_)) {}
  int n() const { return u.n; }
};

// Delta_G f = -G^{ab} d_a d_b f; spectral, zero-mean output.
inline ScalarField laplacian_flat(const ScalarField& f, const FlatMetric& G) {
  auto gi = G.inv();
  auto a = detail::to_complex(f);
  detail::apply_multiplier(a, f.n, [&gi](int k1, int k2, int, int) -> cplx {
    return kTwoPi * kTwoPi * (gi[0] * k1 * k1 + 2.0 * gi[1] * k1 * k2 + gi[2] * k2 * k2);
  });
  return detail::to_real(a, f.n);
}

// R_g = e^{-2u}(R_G + 2 Delta_G u) with R_G = 0 on the torus.
inline ScalarField scalar_curvature(const ConformalMetric& cm) {
  ScalarField r = laplacian_flat(cm.u, cm.base);
  for (size_t i = 0; i < r.size(); ++i) r.v[i] = 2.0 * std::exp(-2.0 * cm.u.v[i]) * r.v[i];
  return r;
}

// Riemann sum of f against vol_g = e^{2u} sqrt(det G) dx dy.
inline double integrate(const ScalarField& f, const ConformalMetric& cm) {
  const double w = std::sqrt(cm.base.det()) / (static_cast<double>(f.n) * f.n);
  double s = 0.0;
  for (size_t i = 0; i < f.size(); ++i) s += f.v[i] * std::exp(2.0 * cm.u.v[i]);
  return s * w;
}

inline double volume(const ConformalMetric& cm) {
  ScalarField one(cm.n(), 1.0);
  return integrate(one, cm);
}

// Pointwise squared norms with indices raised by the full metric g.
inline ScalarField pointwise_norm2(const ScalarField& f, const ConformalMetric&) {
  ScalarField out = f;
  for (auto& x : out.v) x = x * x;
  return out;
}

inline ScalarField pointwise_norm2(const OneFormField& w, const ConformalMetric& cm) {
  auto gi = cm.base.inv();
  ScalarField out(w.n());
  for (size_t i = 0; i < out.size(); ++i) {
    double e = std::exp(-2.0 * cm.u.v[i]);
    out.v[i] = e * (gi[0] * w.x.v[i] * w.x.v[i] + 2.0 * gi[1] * w.x.v[i] * w.y.v[i] +
                    gi[2] * w.y.v[i] * w.y.v[i]);
  }
  return out;
}

inline ScalarField pointwise_norm2(const VectorField& X, const ConformalMetric& cm) {
  const FlatMetric& G = cm.base;
  ScalarField out(X.n());
  for (size_t i = 0; i < out.size(); ++i) {
    double e = std::exp(2.0 * cm.u.v[i]);
    out.v[i] = e * (G.g11 * X.x.v[i] * X.x.v[i] + 2.0 * G.g12 * X.x.v[i] * X.y.v[i] +
                    G.g22 * X.y.v[i] * X.y.v[i]);
  }
  return out;
}

inline ScalarField pointwise_norm2(const SymTensorField& h, const ConformalMetric& cm) {
  auto gi = cm.base.inv();
  ScalarField out(h.n());
  for (size_t i = 0; i < out.size(); ++i) {
    // |h|^2 = g^{ac} g^{bd} h_ab h_cd with g^{-1} = e^{-2u} G^{-1}.
    double a = h.xx.v[i], b = h.xy.v[i], c = h.yy.v[i];
    double m11 = gi[0] * a + gi[1] * b;   // (G^{-1} h)_1^1
    double m12 = gi[0] * b + gi[1] * c;
    double m21 = gi[1] * a + gi[2] * b;
    double m22 = gi[1] * b + gi[2] * c;
    double tr = m11 * m11 + 2.0 * m12 * m21 + m22 * m22;
    double e = std::exp(-4.0 * cm.u.v[i]);
    out.v[i] = e * tr;
  }
  return out;
}

enum class NormMetric { full, flat_base };

// (int |f|_g^p vol_g)^{1/p}; p = inf gives the grid sup of |f|_g.
// With NormMetric::flat_base both the pointwise norm and the volume element
// are taken with respect to the flat background (used for reference norms).
template <class FieldT>
inline double lp_norm(const FieldT& f, const ConformalMetric& cm, double p,
                      NormMetric wrt = NormMetric::full) {
  ConformalMetric ref = cm;
  if (wrt == NormMetric::flat_base)
    for (auto& x : ref.u.v) x = 0.0;
  ScalarField n2 = pointwise_norm2(f, ref);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : n2.v) m = std::max(m, x);
    return std::sqrt(m);
  }
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  ScalarField integrand(n2.n);
  for (size_t i = 0; i < n2.size(); ++i) integrand.v[i] = std::pow(n2.v[i], 0.5 * p);
  return std::pow(integrate(integrand, ref), 1.0 / p);
}

// grad_g f = e^{-2u} G^{ab} d_b f.
inline VectorField gradient(const ScalarField& f, const ConformalMetric& cm) {
  auto gi = cm.base.inv();
  ScalarField fx = deriv(f, 0), fy = deriv(f, 1);
  VectorField out(f.n);
  for (size_t i = 0; i < f.size(); ++i) {
    double e = std::exp(-2.0 * cm.u.v[i]);
    out.x.v[i] = e * (gi[0] * fx.v[i] + gi[1] * fy.v[i]);
    out.y.v[i] = e * (gi[1] * fx.v[i] + gi[2] * fy.v[i]);
  }
  return out;
}

// killing_operator(X) = L_X g, componentwise for g = e^{2u} G.
inline SymTensorField killing_operator(const VectorField& X, const ConformalMetric& cm) {
  const FlatMetric& G = cm.base;
  ScalarField xx = deriv(X.x, 0), xy = deriv(X.x, 1), yx = deriv(X.y, 0), yy = deriv(X.y, 1);
  ScalarField ux = deriv(cm.u, 0), uy = deriv(cm.u, 1);
  SymTensorField out(X.n());
  for (size_t i = 0; i < out.xx.size(); ++i) {
    double e = std::exp(2.0 * cm.u.v[i]);
    double Xu = X.x.v[i] * ux.v[i] + X.y.v[i] * uy.v[i];
    out.xx.v[i] = e * (2.0 * Xu * G.g11 + 2.0 * (G.g11 * xx.v[i] + G.g12 * yx.v[i]));
    out.xy.v[i] = e * (2.0 * Xu * G.g12 + (G.g11 * xy.v[i] + G.g12 * yy.v[i]) +
                       (G.g12 * xx.v[i] + G.g22 * yx.v[i]));
    out.yy.v[i] = e * (2.0 * Xu * G.g22 + 2.0 * (G.g12 * xy.v[i] + G.g22 * yy.v[i]));
  }
  return out;
}

inline ScalarField trace_g(const SymTensorField& h, const ConformalMetric& cm) {
  auto gi = cm.base.inv();
  ScalarField out(h.n());
  for (size_t i = 0; i < out.size(); ++i)
    out.v[i] = std::exp(-2.0 * cm.u.v[i]) *
               (gi[0] * h.xx.v[i] + 2.0 * gi[1] * h.xy.v[i] + gi[2] * h.yy.v[i]);
  return out;
}

// h - (1/2) tr_g(h) g. The result is independent of u: the trace split is
// conformally invariant, so it reduces to the G-trace-free part.
inline SymTensorField trace_free_part(const SymTensorField& h, const ConformalMetric& cm) {
  const FlatMetric& G = cm.base;
  auto gi = G.inv();
  SymTensorField out(h.n());
  for (size_t i = 0; i < out.xx.size(); ++i) {
    double trG = gi[0] * h.xx.v[i] + 2.0 * gi[1] * h.xy.v[i] + gi[2] * h.yy.v[i];
    out.xx.v[i] = h.xx.v[i] - 0.5 * trG * G.g11;
    out.xy.v[i] = h.xy.v[i] - 0.5 * trG * G.g12;
    out.yy.v[i] = h.yy.v[i] - 0.5 * trG * G.g22;
  }
  return out;
}

// Flat-background divergence (delta_G h)_a = -G^{bc} d_b h_ca.
inline OneFormField divergence_sym_flat(const SymTensorField& h, const FlatMetric& G) {
  auto gi = G.inv();
  ScalarField hxx_x = deriv(h.xx, 0), hxy_x = deriv(h.xy, 0), hxy_y = deriv(h.xy, 1),
              hyy_y = deriv(h.yy, 1), hxx_y = deriv(h.xx, 1), hyy_x = deriv(h.yy, 0);
  OneFormField out(h.n());
  for (size_t i = 0; i < out.x.size(); ++i) {
    out.x.v[i] = -(gi[0] * hxx_x.v[i] + gi[1] * (hxy_x.v[i] + hxx_y.v[i]) + gi[2] * hxy_y.v[i]);
    out.y.v[i] = -(gi[0] * hxy_x.v[i] + gi[1] * (hyy_x.v[i] + hxy_y.v[i]) + gi[2] * hyy_y.v[i]);
  }
  return out;
}

// Flat divergence of a one-form: delta w = -G^{ab} d_a w_b.
inline ScalarField divergence_oneform_flat(const OneFormField& w, const FlatMetric& G) {
  auto gi = G.inv();
  ScalarField wxx = deriv(w.x, 0), wxy = deriv(w.x, 1), wyx = deriv(w.y, 0), wyy = deriv(w.y, 1);
  ScalarField out(w.n());
  for (size_t i = 0; i < out.size(); ++i)
    out.v[i] = -(gi[0] * wxx.v[i] + gi[1] * (wxy.v[i] + wyx.v[i]) + gi[2] * wyy.v[i]);
  return out;
}

// Conformal Christoffel symbols enter the full-metric divergence and Hessian:
// Gamma^c_ab = delta^c_a u_b + delta^c_b u_a - G_ab G^{cd} u_d.
inline OneFormField divergence_sym(const SymTensorField& h, const ConformalMetric& cm) {
  const FlatMetric& G = cm.base;
  auto gi = G.inv();
  OneFormField flat = divergence_sym_flat(h, G);
  ScalarField ux = deriv(cm.u, 0), uy = deriv(cm.u, 1);
  ScalarField trG(h.n());
  for (size_t i = 0; i < trG.size(); ++i)
    trG.v[i] = gi[0] * h.xx.v[i] + 2.0 * gi[1] * h.xy.v[i] + gi[2] * h.yy.v[i];
  OneFormField out(h.n());
  for (size_t i = 0; i < out.x.size(); ++i) {
    // -g^{bc} grad_b h_ca = e^{-2u} [ (delta_G h)_a + tr_G(h) u_a ]; the
    // Christoffel contractions of the trace-free part cancel in 2D.
    double e = std::exp(-2.0 * cm.u.v[i]);
    out.x.v[i] = e * (flat.x.v[i] + trG.v[i] * ux.v[i]);
    out.y.v[i] = e * (flat.y.v[i] + trG.v[i] * uy.v[i]);
  }
  return out;
}

// H^2 Sobolev norm of a scalar with respect to g (covariant Hessian).
inline double sobolev_h2_norm(const ScalarField& f, const ConformalMetric& cm);

// Covariant Hessian of f with respect to g.
inline SymTensorField hessian(const ScalarField& f, const ConformalMetric& cm) {
  const FlatMetric& G = cm.base;
  auto gi = G.inv();
  ScalarField fxx = deriv2(f, 0, 0), fxy = deriv2(f, 0, 1), fyy = deriv2(f, 1, 1);
  ScalarField fx = deriv(f, 0), fy = deriv(f, 1);
  ScalarField ux = deriv(cm.u, 0), uy = deriv(cm.u, 1);
  SymTensorField out(f.n);
  for (size_t i = 0; i < out.xx.size(); ++i) {
    double gux = gi[0] * ux.v[i] + gi[1] * uy.v[i];
    double guy = gi[1] * ux.v[i] + gi[2] * uy.v[i];
    double udotf = gux * fx.v[i] + guy * fy.v[i];
    out.xx.v[i] = fxx.v[i] - (2.0 * ux.v[i] * fx.v[i] - G.g11 * udotf);
    out.xy.v[i] = fxy.v[i] - (ux.v[i] * fy.v[i] + uy.v[i] * fx.v[i] - G.g12 * udotf);
    out.yy.v[i] = fyy.v[i] - (2.0 * uy.v[i] * fy.v[i] - G.g22 * udotf);
  }
  return out;
}

inline double sobolev_h2_norm(const ScalarField& f, const ConformalMetric& cm) {
  OneFormField df(f.n);
  df.x = deriv(f, 0);
  df.y = deriv(f, 1);
  SymTensorField H = hessian(f, cm);
  ScalarField integrand = pointwise_norm2(df, cm);
  ScalarField h2 = pointwise_norm2(H, cm);
  for (size_t i = 0; i < integrand.size(); ++i)
    integrand.v[i] += f.v[i] * f.v[i] + h2.v[i];
  return std::sqrt(integrate(integrand, cm));
}

}  // namespace torusflow
