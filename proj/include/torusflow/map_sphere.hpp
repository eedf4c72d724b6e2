#pragma once

// Harmonic-map machinery for maps into the round S^2 in R^3: energy density,
// Dirichlet energy, tension field and the stress term d phi (x) d phi.

#include <stdexcept>

#include "torusflow/conformal.hpp"
#include "torusflow/spin_frame.hpp"

namespace torusflow {

inline void check_unit(const MapField& phi, double tol = 1e-8) {
  for (size_t i = 0; i < phi.x.size(); ++i) {
    double n2 = phi.x.v[i] * phi.x.v[i] + phi.y.v[i] * phi.y.v[i] + phi.z.v[i] * phi.z.v[i];
    if (!(std::abs(n2 - 1.0) < tol)) throw std::invalid_argument("map is not unit norm");
  }
}

struct MapDeriv {
  ScalarField xx, yx, zx;  // d_x of the three components
  ScalarField xy, yy, zy;  // d_y
  explicit MapDeriv(const MapField& phi)
      : xx(deriv(phi.x, 0)),
        yx(deriv(phi.y, 0)),
        zx(deriv(phi.z, 0)),
        xy(deriv(phi.x, 1)),
        yy(deriv(phi.y, 1)),
        zy(deriv(phi.z, 1)) {}
};

// (d phi (x) d phi)_ab = <d_a phi, d_b phi>_{R^3}
inline SymTensorField dphi_tensor(const MapField& phi) {
  MapDeriv d(phi);
  SymTensorField out(phi.n());
  for (size_t i = 0; i < out.xx.size(); ++i) {
    out.xx.v[i] = d.xx.v[i] * d.xx.v[i] + d.yx.v[i] * d.yx.v[i] + d.zx.v[i] * d.zx.v[i];
    out.xy.v[i] = d.xx.v[i] * d.xy.v[i] + d.yx.v[i] * d.yy.v[i] + d.zx.v[i] * d.zy.v[i];
    out.yy.v[i] = d.xy.v[i] * d.xy.v[i] + d.yy.v[i] * d.yy.v[i] + d.zy.v[i] * d.zy.v[i];
  }
  return out;
}

inline ScalarField map_energy_density(const MapField& phi, const ConformalMetric& cm) {
  return trace_g(dphi_tensor(phi), cm);
}

inline double map_energy(const MapField& phi, const ConformalMetric& cm) {
  return 0.5 * integrate(map_energy_density(phi, cm), cm);
}

// tau_g(phi) = -Delta_g phi + |d phi|^2_g phi; vanishes on harmonic maps and
// points down the energy gradient (constant maps are stationary).
inline MapField tension(const MapField& phi, const ConformalMetric& cm) {
  ScalarField e = map_energy_density(phi, cm);
  MapField out(phi.n());
  const ScalarField* in[3] = {&phi.x, &phi.y, &phi.z};
  ScalarField* res[3] = {&out.x, &out.y, &out.z};
  for (int c = 0; c < 3; ++c) {
    ScalarField lap = laplacian_flat(*in[c], cm.base);
    for (size_t i = 0; i < lap.size(); ++i)
      res[c]->v[i] = -std::exp(-2.0 * cm.u.v[i]) * lap.v[i] + e.v[i] * in[c]->v[i];
  }
  return out;
}

// General-metric versions against a frame field (used by the unsplit flow).
inline ScalarField map_energy_density(const MapField& phi, const SpinFrame& fr) {
  MapDeriv d(phi);
  ScalarField out(phi.n());
  for (size_t i = 0; i < out.size(); ++i) {
    // |d phi|^2_g = sum_i |E_i(phi)|^2
    double e1x = fr.e1x.v[i], e1y = fr.e1y.v[i], e2x = fr.e2x.v[i], e2y = fr.e2y.v[i];
    double a1 = e1x * d.xx.v[i] + e1y * d.xy.v[i];
    double a2 = e1x * d.yx.v[i] + e1y * d.yy.v[i];
    double a3 = e1x * d.zx.v[i] + e1y * d.zy.v[i];
    double b1 = e2x * d.xx.v[i] + e2y * d.xy.v[i];
    double b2 = e2x * d.yx.v[i] + e2y * d.yy.v[i];
    double b3 = e2x * d.zx.v[i] + e2y * d.zy.v[i];
    out.v[i] = a1 * a1 + a2 * a2 + a3 * a3 + b1 * b1 + b2 * b2 + b3 * b3;
  }
  return out;
}

inline double map_energy(const MapField& phi, const SpinFrame& fr) {
  ScalarField e = map_energy_density(phi, fr);
  double s = 0.0;
  for (size_t i = 0; i < e.size(); ++i) s += e.v[i] * fr.dens.v[i];
  return 0.5 * s / static_cast<double>(e.size());
}

inline MapField tension(const MapField& phi, const SpinFrame& fr) {
  MapDeriv d(phi);
  ScalarField e = map_energy_density(phi, fr);
  // Laplace-Beltrami: Delta^{lb} f = (1/sqrt g) d_a ( sqrt g g^{ab} d_b f )
  auto lb = [&](const ScalarField& fx, const ScalarField& fy) {
    ScalarField px(phi.n()), py(phi.n());
    for (size_t i = 0; i < px.size(); ++i) {
      double g11 = fr.e1x.v[i] * fr.e1x.v[i] + fr.e2x.v[i] * fr.e2x.v[i];
      double g12 = fr.e1x.v[i] * fr.e1y.v[i] + fr.e2x.v[i] * fr.e2y.v[i];
      double g22 = fr.e1y.v[i] * fr.e1y.v[i] + fr.e2y.v[i] * fr.e2y.v[i];
      px.v[i] = fr.dens.v[i] * (g11 * fx.v[i] + g12 * fy.v[i]);
      py.v[i] = fr.dens.v[i] * (g12 * fx.v[i] + g22 * fy.v[i]);
    }
    ScalarField div = deriv(px, 0);
    ScalarField divy = deriv(py, 1);
    for (size_t i = 0; i < div.size(); ++i) div.v[i] = (div.v[i] + divy.v[i]) / fr.dens.v[i];
    return div;
  };
  MapField out(phi.n());
  ScalarField lx = lb(d.xx, d.xy), ly = lb(d.yx, d.yy), lz = lb(d.zx, d.zy);
  for (size_t i = 0; i < out.x.size(); ++i) {
    out.x.v[i] = lx.v[i] + e.v[i] * phi.x.v[i];
    out.y.v[i] = ly.v[i] + e.v[i] * phi.y.v[i];
    out.z.v[i] = lz.v[i] + e.v[i] * phi.z.v[i];
  }
  return out;
}

inline SymTensorField dphi_tensor_general(const MapField& phi) { return dphi_tensor(phi); }

}  // namespace torusflow
