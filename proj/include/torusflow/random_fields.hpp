#pragma once

// Seed-deterministic band-limited random fields for tests, presets and the
// acceptance suite. All randomness in the project flows through these.

#include <random>

#include "torusflow/grid.hpp"

namespace torusflow {

// Zero-mean real field with Gaussian coefficients on modes |k1|,|k2| <= kcut,
// scaled so that max|f| = amplitude (amplitude 0 gives the zero field).
inline ScalarField random_band_limited(int n, int kcut, double amplitude, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ScalarField f(n);
  for (int k1 = -kcut; k1 <= kcut; ++k1)
    for (int k2 = -kcut; k2 <= kcut; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;  // one per conjugate pair
      double cr = gauss(rng), ci = gauss(rng);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double ph = kTwoPi * (k1 * i + k2 * j) / n;
          f(i, j) += cr * std::cos(ph) - ci * std::sin(ph);
        }
    }
  double m = max_abs(f);
  if (m > 0.0 && amplitude > 0.0) {
    double s = amplitude / m;
    for (auto& x : f.v) x *= s;
  } else if (amplitude == 0.0) {
    for (auto& x : f.v) x = 0.0;
  }
  return f;
}

inline VectorField random_vector_field(int n, int kcut, double amplitude, std::mt19937_64& rng) {
  VectorField X(n);
  X.x = random_band_limited(n, kcut, amplitude, rng);
  X.y = random_band_limited(n, kcut, amplitude, rng);
  return X;
}

inline SymTensorField random_sym_tensor(int n, int kcut, double amplitude, std::mt19937_64& rng) {
  SymTensorField h(n);
  h.xx = random_band_limited(n, kcut, amplitude, rng);
  h.xy = random_band_limited(n, kcut, amplitude, rng);
  h.yy = random_band_limited(n, kcut, amplitude, rng);
  return h;
}

// Unit map into S^2: smooth perturbation of the north pole, renormalized.
inline MapField random_map_field(int n, int kcut, double amplitude, std::mt19937_64& rng) {
  MapField phi(n);
  ScalarField px = random_band_limited(n, kcut, amplitude, rng);
  ScalarField py = random_band_limited(n, kcut, amplitude, rng);
  ScalarField pz = random_band_limited(n, kcut, 0.25 * amplitude, rng);
  for (size_t i = 0; i < phi.x.size(); ++i) {
    double vx = px.v[i], vy = py.v[i], vz = 1.0 + pz.v[i];
    double r = std::sqrt(vx * vx + vy * vy + vz * vz);
    phi.x.v[i] = vx / r;
    phi.y.v[i] = vy / r;
    phi.z.v[i] = vz / r;
  }
  return phi;
}

// Unit spinor: smooth perturbation of the constant spinor (1,0). Antiperiodic
// directions get the matching lowest twisted mode so the field lies in the
// right boundary class.
inline SpinorField random_spinor_field(int n, SpinStructure s, int kcut, double amplitude,
                                       std::mt19937_64& rng) {
  SpinorField phi(n, s);
  ScalarField ar = random_band_limited(n, kcut, amplitude, rng);
  ScalarField ai = random_band_limited(n, kcut, amplitude, rng);
  ScalarField br = random_band_limited(n, kcut, amplitude, rng);
  ScalarField bi = random_band_limited(n, kcut, amplitude, rng);
  const double ex = 0.5 * s.parity_x, ey = 0.5 * s.parity_y;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      size_t id = static_cast<size_t>(i) * n + j;
      cplx tw(1.0, 0.0);
      if (s.parity_x || s.parity_y) {
        double ph = kTwoPi * (ex * i + ey * j) / n;
        tw = cplx(std::cos(ph), std::sin(ph));
      }
      cplx va = tw * (1.0 + cplx(ar.v[id], ai.v[id]));
      cplx vb = tw * cplx(br.v[id], bi.v[id]);
      double r = std::sqrt(std::norm(va) + std::norm(vb));
      phi.a[id] = va / r;
      phi.b[id] = vb / r;
    }
  return phi;
}

}  // namespace torusflow
