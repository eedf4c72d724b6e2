#pragma once

// Constant flat background metrics on the torus. The unit-determinant
// representatives are the moduli the split flows move through.

#include <array>
#include <cmath>
#include <stdexcept>

namespace torusflow {

struct FlatMetric {
  double g11 = 1.0, g12 = 0.0, g22 = 1.0;

  FlatMetric() = default;
  FlatMetric(double a, double b, double c) : g11(a), g12(b), g22(c) {}

  double det() const { return g11 * g22 - g12 * g12; }

  bool positive_definite() const { return g11 > 0.0 && det() > 0.0; }

  // Inverse components G^{ab}.
  std::array<double, 3> inv() const {
    double d = det();
    return {g22 / d, -g12 / d, g11 / d};
  }

  // Largest eigenvalue of G^{-1} (controls the stiffest spectral mode).
  double inv_spectral_radius() const {
    auto gi = inv();
    double tr = gi[0] + gi[2], dd = gi[0] * gi[2] - gi[1] * gi[1];
    return 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * dd)));
  }

  // Lower-triangular Cholesky factor L with G = L L^T.
  std::array<double, 3> cholesky() const {  // (l11, l21, l22)
    if (!positive_definite()) throw std::invalid_argument("FlatMetric: not positive definite");
    double l11 = std::sqrt(g11);
    double l21 = g12 / l11;
    double l22 = std::sqrt(g22 - l21 * l21);
    return {l11, l21, l22};
  }

  // Scales to det = 1; returns the factor |det - 1| that was removed.
  double renormalize_det() {
    double d = det();
    if (d <= 0.0) throw std::invalid_argument("FlatMetric: nonpositive determinant");
    double s = 1.0 / std::sqrt(d);
    g11 *= s;
    g12 *= s;
    g22 *= s;
    return std::abs(d - 1.0);
  }

  // Squared length of the lattice vector (p,q).
  double q(double p, double r) const { return g11 * p * p + 2.0 * g12 * p * r + g22 * r * r; }
};

}  // namespace torusflow
