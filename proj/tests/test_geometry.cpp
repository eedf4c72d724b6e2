#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "torusflow/conformal.hpp"
#include "torusflow/random_fields.hpp"

using namespace torusflow;

namespace {

ScalarField mode_field(int n, int k1, int k2, double amp, double phase = 0.0) {
  ScalarField f(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = amp * std::sin(kTwoPi * (k1 * i + k2 * j) / n + phase);
  return f;
}

double linf_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

double dot_flat(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.v[i] * b.v[i];
  return s / static_cast<double>(a.size());
}

// L^2(g) pairing of symmetric tensors.
double pair_sym(const SymTensorField& h, const SymTensorField& k, const ConformalMetric& cm) {
  auto gi = cm.base.inv();
  ScalarField integrand(h.n());
  for (size_t i = 0; i < integrand.size(); ++i) {
    double e = std::exp(-4.0 * cm.u.v[i]);
    double h11 = h.xx.v[i], h12 = h.xy.v[i], h22 = h.yy.v[i];
    double k11 = k.xx.v[i], k12 = k.xy.v[i], k22 = k.yy.v[i];
    // g^{ac} g^{bd} h_ab k_cd
    double a11 = gi[0] * h11 + gi[1] * h12, a12 = gi[0] * h12 + gi[1] * h22;
    double a21 = gi[1] * h11 + gi[2] * h12, a22 = gi[1] * h12 + gi[2] * h22;
    double b11 = gi[0] * k11 + gi[1] * k12, b12 = gi[0] * k12 + gi[1] * k22;
    double b21 = gi[1] * k11 + gi[2] * k12, b22 = gi[1] * k12 + gi[2] * k22;
    integrand.v[i] = e * (a11 * b11 + a12 * b21 + a21 * b12 + a22 * b22);
  }
  return integrate(integrand, cm);
}

// L^2(g) pairing of one-forms.
double pair_oneform(const OneFormField& a, const OneFormField& b, const ConformalMetric& cm) {
  auto gi = cm.base.inv();
  ScalarField integrand(a.n());
  for (size_t i = 0; i < integrand.size(); ++i) {
    double e = std::exp(-2.0 * cm.u.v[i]);
    integrand.v[i] = e * (gi[0] * a.x.v[i] * b.x.v[i] + gi[1] * (a.x.v[i] * b.y.v[i] + a.y.v[i] * b.x.v[i]) +
                          gi[2] * a.y.v[i] * b.y.v[i]);
  }
  return integrate(integrand, cm);
}

OneFormField lower(const VectorField& X, const ConformalMetric& cm) {
  OneFormField w(X.n());
  for (size_t i = 0; i < w.x.size(); ++i) {
    double e = std::exp(2.0 * cm.u.v[i]);
    w.x.v[i] = e * (cm.base.g11 * X.x.v[i] + cm.base.g12 * X.y.v[i]);
    w.y.v[i] = e * (cm.base.g12 * X.x.v[i] + cm.base.g22 * X.y.v[i]);
  }
  return w;
}

}  // namespace

TEST_CASE("flat Laplacian: constants, Fourier symbols, anisotropy") {
  const int n = 64;
  FlatMetric id;
  ScalarField one(n, 1.0);
  CHECK(max_abs(laplacian_flat(one, id)) < 1e-12);

  ScalarField sx = mode_field(n, 1, 0, 1.0);
  ScalarField lap = laplacian_flat(sx, id);
  ScalarField expect = mode_field(n, 1, 0, kTwoPi * kTwoPi);
  CHECK(linf_diff(lap, expect) < 1e-10);

  // G = diag(2, 1/2): G^{22} = 2 scales the y mode.
  FlatMetric aniso(2.0, 0.0, 0.5);
  ScalarField sy = mode_field(n, 0, 1, 1.0);
  ScalarField lap2 = laplacian_flat(sy, aniso);
  ScalarField expect2 = mode_field(n, 0, 1, 2.0 * kTwoPi * kTwoPi);
  CHECK(linf_diff(lap2, expect2) < 1e-10);

  // output mean vanishes
  std::mt19937_64 rng(11);
  ScalarField f = random_band_limited(n, 5, 1.0, rng);
  CHECK(std::abs(field_mean(laplacian_flat(f, aniso))) < 1e-13);
}

TEST_CASE("flat Laplacian is self-adjoint") {
  const int n = 64;
  std::mt19937_64 rng(3);
  FlatMetric G(1.3, 0.2, (1.0 + 0.2 * 0.2) / 1.3);
  G.renormalize_det();
  ScalarField f = random_band_limited(n, 6, 1.0, rng);
  ScalarField g = random_band_limited(n, 6, 1.0, rng);
  double lhs = dot_flat(laplacian_flat(f, G), g);
  double rhs = dot_flat(f, laplacian_flat(g, G));
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(std::abs(lhs), 1.0));
}

TEST_CASE("scalar curvature: flat cases and the conformal formula") {
  const int n = 64;
  FlatMetric id;

  ConformalMetric flat(id, ScalarField(n, 0.0));
  CHECK(max_abs(scalar_curvature(flat)) < 1e-12);

  ConformalMetric shifted(id, ScalarField(n, 0.7));
  CHECK(max_abs(scalar_curvature(shifted)) < 1e-12);

  // u = 0.1 sin(2 pi x): R = 0.8 pi^2 sin(2 pi x) exp(-0.2 sin(2 pi x))
  ConformalMetric cm(id, mode_field(n, 1, 0, 0.1));
  ScalarField R = scalar_curvature(cm);
  double at_quarter = R(n / 4, 0);
  double expect = 0.8 * kPi * kPi * std::exp(-0.2);
  CHECK(std::abs(at_quarter - expect) < 1e-10);
  CHECK(std::abs(expect - 6.4643) < 5e-4);  // value quoted to 5 digits

  // R(u + c) = e^{-2c} R(u) pointwise
  ScalarField uc = cm.u;
  for (auto& x : uc.v) x += 0.5;
  ScalarField Rc = scalar_curvature(ConformalMetric(id, uc));
  for (size_t i = 0; i < Rc.size(); ++i) Rc.v[i] *= std::exp(1.0);
  CHECK(linf_diff(Rc, R) < 1e-12 * (1.0 + max_abs(R)));
}

TEST_CASE("integrate: volumes and Gauss-Bonnet") {
  const int n = 64;
  FlatMetric id;
  ScalarField one(n, 1.0);

  CHECK(std::abs(integrate(one, ConformalMetric(id, ScalarField(n, 0.0))) - 1.0) < 1e-14);
  CHECK(std::abs(integrate(one, ConformalMetric(id, ScalarField(n, 0.3))) - std::exp(0.6)) < 1e-12);

  // total volume does not depend on the unit-determinant base
  std::mt19937_64 rng(5);
  ScalarField u = random_band_limited(n, 4, 0.4, rng);
  FlatMetric skew(1.4, 0.3, (1.0 + 0.09) / 1.4);
  skew.renormalize_det();
  double v1 = volume(ConformalMetric(id, u));
  double v2 = volume(ConformalMetric(skew, u));
  CHECK(std::abs(v1 - v2) < 1e-12 * v1);

  // Gauss-Bonnet: integral of R vanishes for every conformal metric
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r2(100 + seed);
    ScalarField uu = random_band_limited(n, 5, 0.5, r2);
    ConformalMetric cm(seed % 2 ? skew : id, uu);
    ScalarField R = scalar_curvature(cm);
    ScalarField absR = R;
    for (auto& x : absR.v) x = std::abs(x);
    double total = integrate(R, cm);
    double l1 = integrate(absR, cm);
    CHECK(std::abs(total) < 1e-8 * l1);
  }
}

TEST_CASE("lp norms") {
  const int n = 64;
  FlatMetric id;
  ConformalMetric flat(id, ScalarField(n, 0.0));

  ScalarField two(n, 2.0);
  CHECK(std::abs(lp_norm(two, flat, 2.0) - 2.0) < 1e-13);

  ScalarField sx = mode_field(n, 1, 0, 1.0);
  CHECK(std::abs(lp_norm(sx, flat, std::numeric_limits<double>::infinity()) - 1.0) < 1e-13);

  // |du|^2_g = e^{-2u} G^{11} (2 pi c cos 2 pi x)^2 for u = c sin(2 pi x)
  const double c = 0.3;
  ConformalMetric cm(id, mode_field(n, 1, 0, c));
  OneFormField du(n);
  du.x = deriv(cm.u, 0);
  du.y = deriv(cm.u, 1);
  ScalarField n2 = pointwise_norm2(du, cm);
  ScalarField expect(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x = static_cast<double>(i) / n;
      double d = kTwoPi * c * std::cos(kTwoPi * x);
      expect(i, j) = std::exp(-2.0 * c * std::sin(kTwoPi * x)) * d * d;
    }
  CHECK(linf_diff(n2, expect) < 1e-10);
}

TEST_CASE("Killing operator, trace-free projection, divergence adjointness") {
  const int n = 64;
  std::mt19937_64 rng(17);
  FlatMetric G(1.2, -0.15, 0.9);
  G.renormalize_det();
  ScalarField u = random_band_limited(n, 4, 0.35, rng);
  ConformalMetric cm(G, u);

  // constant fields are Killing for constant u
  VectorField cx(n);
  for (auto& x : cx.x.v) x = 0.7;
  for (auto& y : cx.y.v) y = -0.2;
  SymTensorField lie = killing_operator(cx, ConformalMetric(G, ScalarField(n, 0.0)));
  CHECK(max_abs(lie.xx) + max_abs(lie.xy) + max_abs(lie.yy) < 1e-12);

  // pure trace inputs project to zero, and the projection is idempotent
  std::mt19937_64 rng2(18);
  ScalarField rho = random_band_limited(n, 4, 1.0, rng2);
  SymTensorField pure(n);
  for (size_t i = 0; i < pure.xx.size(); ++i) {
    double e = rho.v[i] * std::exp(2.0 * u.v[i]);
    pure.xx.v[i] = e * G.g11;
    pure.xy.v[i] = e * G.g12;
    pure.yy.v[i] = e * G.g22;
  }
  SymTensorField tf = trace_free_part(pure, cm);
  CHECK(max_abs(tf.xx) + max_abs(tf.xy) + max_abs(tf.yy) < 1e-10);

  SymTensorField h = random_sym_tensor(n, 4, 1.0, rng);
  SymTensorField p1 = trace_free_part(h, cm);
  SymTensorField p2 = trace_free_part(p1, cm);
  CHECK(linf_diff(p1.xx, p2.xx) + linf_diff(p1.xy, p2.xy) + linf_diff(p1.yy, p2.yy) < 1e-12);
  CHECK(max_abs(trace_g(p1, cm)) < 1e-11);

  // adjointness: <delta* X, h>_{L2(g)} = factor * <X^flat, delta h>_{L2(g)};
  // with delta* X = L_X g the factor is 2.
  VectorField X = random_vector_field(n, 4, 0.8, rng);
  SymTensorField dstar = killing_operator(X, cm);
  OneFormField dh = divergence_sym(h, cm);
  double lhs = pair_sym(dstar, h, cm);
  double rhs = pair_oneform(lower(X, cm), dh, cm);
  CHECK(std::abs(lhs - 2.0 * rhs) < 1e-8 * std::max({std::abs(lhs), std::abs(rhs), 1.0}));
}

TEST_CASE("Hessian reduces to flat second derivatives and traces to the Laplacian") {
  const int n = 64;
  std::mt19937_64 rng(23);
  FlatMetric G(0.8, 0.1, (1.0 + 0.01) / 0.8);
  G.renormalize_det();
  ScalarField f = random_band_limited(n, 5, 1.0, rng);

  ConformalMetric flat(G, ScalarField(n, 0.0));
  SymTensorField H = hessian(f, flat);
  CHECK(linf_diff(H.xx, deriv2(f, 0, 0)) < 1e-11);
  CHECK(linf_diff(H.xy, deriv2(f, 0, 1)) < 1e-11);
  CHECK(linf_diff(H.yy, deriv2(f, 1, 1)) < 1e-11);

  // -tr_g hessian = -Delta_g f  (positive Laplacian), conformal case
  ScalarField u = random_band_limited(n, 4, 0.3, rng);
  ConformalMetric cm(G, u);
  SymTensorField Hc = hessian(f, cm);
  ScalarField tr = trace_g(Hc, cm);
  ScalarField lap = laplacian_flat(f, G);
  for (size_t i = 0; i < lap.size(); ++i) lap.v[i] = -std::exp(-2.0 * u.v[i]) * lap.v[i];
  CHECK(linf_diff(tr, lap) < 1e-9);
}

TEST_CASE("spectral derivative of spinor components honors boundary phases") {
  const int n = 32;
  SpinStructure ap{1, 0};
  // lowest twisted mode e^{i pi x}: derivative multiplies by i*pi
  std::vector<cplx> comp(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double ph = kPi * static_cast<double>(i) / n;
      comp[static_cast<size_t>(i) * n + j] = cplx(std::cos(ph), std::sin(ph));
    }
  auto d = deriv_spinor_comp(comp, n, ap, 0);
  double err = 0.0;
  for (size_t i = 0; i < comp.size(); ++i) err = std::max(err, std::abs(d[i] - cplx(0.0, kPi) * comp[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("reference-metric norm flavor ignores the conformal factor") {
  const int n = 64;
  std::mt19937_64 rng(29);
  FlatMetric G(1.2, -0.1, (1.0 + 0.01) / 1.2);
  G.renormalize_det();
  ScalarField u = random_band_limited(n, 3, 0.4, rng);
  ScalarField f = random_band_limited(n, 4, 1.0, rng);
  ConformalMetric cm(G, u), flat(G, ScalarField(n, 0.0));
  CHECK(lp_norm(f, cm, 2.0, NormMetric::flat_base) == lp_norm(f, flat, 2.0));
  CHECK(lp_norm(f, cm, 2.0) != lp_norm(f, flat, 2.0));
}
