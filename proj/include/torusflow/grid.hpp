#pragma once

// Periodic grid on the unit square torus and the field containers every
// module works with. Node (i,j) sits at (i*h, j*h), h = 1/n, row-major
// storage with index i*n + j.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "torusflow/fft.hpp"

namespace torusflow {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

struct TorusGrid {
  int n = 0;
  double h = 0.0;

  TorusGrid() = default;
  explicit TorusGrid(int n_) : n(n_), h(1.0 / n_) {
    if (n_ < 8) throw std::invalid_argument("TorusGrid: n must be >= 8");
    if ((n_ & (n_ - 1)) != 0) throw std::invalid_argument("TorusGrid: n must be a power of two");
  }
  size_t size() const { return static_cast<size_t>(n) * n; }
  double x(int i) const { return i * h; }
  double y(int j) const { return j * h; }
};

struct ScalarField {
  int n = 0;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(int n_, double fill = 0.0) : n(n_), v(static_cast<size_t>(n_) * n_, fill) {}
  double& operator()(int i, int j) { return v[static_cast<size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return v[static_cast<size_t>(i) * n + j]; }
  size_t size() const { return v.size(); }
};

// Contravariant components X^a.
struct VectorField {
  ScalarField x, y;
  VectorField() = default;
  explicit VectorField(int n) : x(n), y(n) {}
  int n() const { return x.n; }
};

// Covariant components w_a.
struct OneFormField {
  ScalarField x, y;
  OneFormField() = default;
  explicit OneFormField(int n) : x(n), y(n) {}
  int n() const { return x.n; }
};

// Covariant symmetric 2-tensor, components (h11, h12, h22).
struct SymTensorField {
  ScalarField xx, xy, yy;
  SymTensorField() = default;
  explicit SymTensorField(int n) : xx(n), xy(n), yy(n) {}
  int n() const { return xx.n; }
};

// Map into the unit sphere S^2 in R^3; unit length enforced by the flows.
struct MapField {
  ScalarField x, y, z;
  MapField() = default;
  explicit MapField(int n) : x(n), y(n), z(n) {}
  int n() const { return x.n; }
};

// Boundary phases of the spin structure: parity bit 1 = antiperiodic.
struct SpinStructure {
  uint8_t parity_x = 0;
  uint8_t parity_y = 0;
  bool operator==(const SpinStructure&) const = default;
};

// Two-component complex field with spin structure phases.
struct SpinorField {
  int n = 0;
  SpinStructure spin;
  std::vector<cplx> a, b;

  SpinorField() = default;
  SpinorField(int n_, SpinStructure s)
      : n(n_), spin(s), a(static_cast<size_t>(n_) * n_), b(static_cast<size_t>(n_) * n_) {}
  size_t size() const { return a.size(); }
};

inline bool finite(const ScalarField& f) {
  for (double x : f.v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double field_mean(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.v) s += x;
  return s / static_cast<double>(f.size());
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

// ---------------------------------------------------------------------------
// Spectral derivatives (exact on band-limited data).

namespace detail {

// Applies a complex multiplier mult(k1,k2) in Fourier space, in place.
template <class Mult>
inline void apply_multiplier(std::vector<cplx>& a, int n, Mult mult) {
  fft2(a, n, FFTW_FORWARD);
  const double norm = 1.0 / (static_cast<double>(n) * n);
  for (int m1 = 0; m1 < n; ++m1) {
    const int k1 = fft_freq(m1, n);
    for (int m2 = 0; m2 < n; ++m2) {
      const int k2 = fft_freq(m2, n);
      a[static_cast<size_t>(m1) * n + m2] *= mult(k1, k2, m1, m2) * norm;
    }
  }
  fft2(a, n, FFTW_BACKWARD);
}

inline std::vector<cplx> to_complex(const ScalarField& f) {
  std::vector<cplx> a(f.size());
  for (size_t i = 0; i < f.size(); ++i) a[i] = f.v[i];
  return a;
}

inline ScalarField to_real(const std::vector<cplx>& a, int n) {
  ScalarField f(n);
  for (size_t i = 0; i < a.size(); ++i) f.v[i] = a[i].real();
  return f;
}

}  // namespace detail

// d/dx_axis. The Nyquist mode of the differentiated axis is zeroed (standard
// choice keeping real fields real; band-limited inputs are untouched).
inline ScalarField deriv(const ScalarField& f, int axis) {
  auto a = detail::to_complex(f);
  detail::apply_multiplier(a, f.n, [axis, n = f.n](int k1, int k2, int, int) -> cplx {
    int k = axis == 0 ? k1 : k2;
    if (k == -n / 2) return 0.0;
    return cplx(0.0, kTwoPi * k);
  });
  return detail::to_real(a, f.n);
}

// Mixed/pure second derivative d^2/(dx_a dx_b).
inline ScalarField deriv2(const ScalarField& f, int a_axis, int b_axis) {
  auto a = detail::to_complex(f);
  detail::apply_multiplier(a, f.n, [a_axis, b_axis, n = f.n](int k1, int k2, int, int) -> cplx {
    double ka = a_axis == 0 ? k1 : k2;
    double kb = b_axis == 0 ? k1 : k2;
    if (a_axis != b_axis && (k1 == -n / 2 || k2 == -n / 2)) return 0.0;
    return -kTwoPi * kTwoPi * ka * kb;
  });
  return detail::to_real(a, f.n);
}

// Derivatives of two real fields packed into one complex transform; both
// multipliers map real fields to real fields, so the parts separate cleanly.
inline void deriv_pair(const ScalarField& f, const ScalarField& g, int axis, ScalarField& df,
                       ScalarField& dg) {
  const int n = f.n;
  std::vector<cplx> a(f.size());
  for (size_t i = 0; i < a.size(); ++i) a[i] = cplx(f.v[i], g.v[i]);
  detail::apply_multiplier(a, n, [axis, n](int k1, int k2, int, int) -> cplx {
    int k = axis == 0 ? k1 : k2;
    if (k == -n / 2) return 0.0;
    return cplx(0.0, kTwoPi * k);
  });
  df = ScalarField(n);
  dg = ScalarField(n);
  for (size_t i = 0; i < a.size(); ++i) {
    df.v[i] = a[i].real();
    dg.v[i] = a[i].imag();
  }
}

// Twisted spectral derivative of a spinor component: antiperiodic directions
// carry half-integer modes, realized by phase twisting before the transform.
inline std::vector<cplx> deriv_spinor_comp(const std::vector<cplx>& comp, int n, SpinStructure s,
                                           int axis) {
  std::vector<cplx> a = comp;
  const double ex = 0.5 * s.parity_x, ey = 0.5 * s.parity_y;
  if (s.parity_x || s.parity_y) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double phase = -kTwoPi * (ex * i + ey * j) / n;
        a[static_cast<size_t>(i) * n + j] *= cplx(std::cos(phase), std::sin(phase));
      }
  }
  detail::apply_multiplier(a, n, [axis, ex, ey, n](int k1, int k2, int, int) -> cplx {
    double k = axis == 0 ? k1 + ex : k2 + ey;
    if (axis == 0 && k1 == -n / 2 && ex == 0.0) return 0.0;
    if (axis == 1 && k2 == -n / 2 && ey == 0.0) return 0.0;
    return cplx(0.0, kTwoPi * k);
  });
  if (s.parity_x || s.parity_y) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double phase = kTwoPi * (ex * i + ey * j) / n;
        a[static_cast<size_t>(i) * n + j] *= cplx(std::cos(phase), std::sin(phase));
      }
  }
  return a;
}

}  // namespace torusflow
