#include <gtest/gtest.h>

#include "mhs/elliptic2d.hpp"

using namespace mhs;

namespace {

// Closed form of r^2 u'' + r u' - k^2 u = r^2 j, u(1) = u(L) = 0, k != 0, 2.
double mode_closed_form(int k, double L, double j, double r) {
  const double a = L;
  const double den = std::pow(a, k) - std::pow(a, -k);
  const double c1 = (std::pow(a, -k) - a * a) / den * j / (4.0 - k * k);
  const double c2 = (a * a - std::pow(a, k)) / den * j / (4.0 - k * k);
  return c1 * std::pow(r, k) + c2 * std::pow(r, -k) + r * r * j / (4.0 - k * k);
}

// Resonant k = 2 branch with r^2 ln r particular solution.
double mode2_closed_form(double L, double j, double r) {
  const double c1 = -(j / 4.0) * L * L * std::log(L) / (L * L - 1.0 / (L * L));
  return c1 * r * r - c1 / (r * r) + (j / 4.0) * r * r * std::log(r);
}

double manufactured(double r, double phi, double L) { return (r - 1) * (L - r) * std::cos(phi); }
double manufactured_source(double r, double phi, double L) {
  const double g = (r - 1) * (L - r), gp = -2 * r + L + 1, gpp = -2.0;
  return (gpp + gp / r - g / (r * r)) * std::cos(phi);
}
// (r - 1)(L - r) e^r cos(phi): not reproduced exactly by the three-point stencil.
double manufactured_exp(double r, double phi, double L) { return (r - 1) * (L - r) * std::exp(r) * std::cos(phi); }
double manufactured_exp_source(double r, double phi, double L) {
  const double q = (r - 1) * (L - r), qp = -2 * r + L + 1, qpp = -2.0;
  const double e = std::exp(r);
  const double g = q * e, gp = (qp + q) * e, gpp = (qpp + 2 * qp + q) * e;
  return (gpp + gp / r - g / (r * r)) * std::cos(phi);
}

}  // namespace

TEST(Elliptic2D, ModeK1ConstantSourceMatchesClosedForm) {
  const double L = 2.0;
  auto src = [](double) { return Complex(1.0); };
  auto cheb = solve_poisson_mode(1, src, {0.0, 0.0}, L, 48, RadialSpacing::chebyshev);
  double err = 0.0;
  for (int i = 0; i < 48; ++i) err = std::max(err, std::abs(cheb.values[i] - mode_closed_form(1, L, 1.0, cheb.r[i])));
  EXPECT_LT(err, 1e-12);
  EXPECT_EQ(cheb.values[0], Complex(0.0));
  EXPECT_EQ(cheb.values[47], Complex(0.0));
  // second-order finite differences
  double e[2];
  int n[2] = {64, 128};
  for (int t = 0; t < 2; ++t) {
    auto fd = solve_poisson_mode(1, src, {0.0, 0.0}, L, n[t]);
    e[t] = 0.0;
    for (int i = 0; i < n[t]; ++i) e[t] = std::max(e[t], std::abs(fd.values[i] - mode_closed_form(1, L, 1.0, fd.r[i])));
  }
  EXPECT_GT(std::log2(e[0] / e[1]), 1.9);
}

TEST(Elliptic2D, HomogeneousK3) {
  auto p = solve_poisson_mode(3, [](double) { return Complex(0.0); }, {1.0, 0.0}, 2.0, 40, RadialSpacing::chebyshev);
  const double c1 = -1.0 / 63, c2 = 64.0 / 63;
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(p.values[i].real(), c1 * std::pow(p.r[i], 3) + c2 * std::pow(p.r[i], -3), 1e-12);
}

TEST(Elliptic2D, ResonantK2Branch) {
  const double L = 2.0;
  auto src = [](double) { return Complex(1.0); };
  auto cheb = solve_poisson_mode(2, src, {0.0, 0.0}, L, 48, RadialSpacing::chebyshev);
  auto fd = solve_poisson_mode(2, src, {0.0, 0.0}, L, 1024);
  const double scale = std::abs(mode2_closed_form(L, 1.0, 1.5));
  double ec = 0.0, ef = 0.0;
  for (int i = 0; i < 48; ++i) ec = std::max(ec, std::abs(cheb.values[i] - mode2_closed_form(L, 1.0, cheb.r[i])));
  for (int i = 0; i < 1024; ++i) ef = std::max(ef, std::abs(fd.values[i] - mode2_closed_form(L, 1.0, fd.r[i])));
  EXPECT_LT(ec / scale, 1e-12);
  EXPECT_LT(ef / scale, 1e-6);
}

TEST(Elliptic2D, PoissonZeroAndModeSources) {
  auto g = make_grid(AnnulusSpec{2.0}, 32, 4, RadialSpacing::chebyshev);
  BoundaryFourier zero(4);
  auto u0 = solve_poisson(RealMatrix::Zero(32, g.n_phi), zero, zero, g);
  EXPECT_EQ(max_abs(u0.values), 0.0);
  RealMatrix j(32, g.n_phi);
  for (int i = 0; i < 32; ++i)
    for (int k = 0; k < g.n_phi; ++k) j(i, k) = std::cos(3 * g.phi(k));
  auto u = solve_poisson(j, zero, zero, g);
  double err = 0.0;
  for (int i = 0; i < 32; ++i)
    for (int k = 0; k < g.n_phi; ++k)
      err = std::max(err, std::abs(u.values(i, k) - mode_closed_form(3, 2.0, 1.0, g.r[i]) * std::cos(3 * g.phi(k))));
  EXPECT_LT(err, 1e-12);
  // mode decoupling: only |m| = 3 carries energy
  ComplexMatrix c = u.modes();
  double other = 0.0, total = 0.0;
  for (int k = 0; k < g.n_phi; ++k) {
    const double e = c.col(k).squaredNorm();
    total += e;
    if (k != 3 && k != g.n_phi - 3) other += e;
  }
  EXPECT_LT(other / total, 1e-24);
}

TEST(Elliptic2D, QuadraticManufacturedSolutionIsExact) {
  const double L = 2.0;
  auto g = make_grid(AnnulusSpec{L}, 64, 4);
  RealMatrix j(64, g.n_phi);
  for (int i = 0; i < 64; ++i)
    for (int k = 0; k < g.n_phi; ++k) j(i, k) = manufactured_source(g.r[i], g.phi(k), L);
  auto u = solve_poisson(j, BoundaryFourier(4), BoundaryFourier(4), g);
  double e = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int k = 0; k < g.n_phi; ++k) e = std::max(e, std::abs(u.values(i, k) - manufactured(g.r[i], g.phi(k), L)));
  EXPECT_LT(e, 1e-11);
}

TEST(Elliptic2D, ManufacturedSolutionSecondOrder) {
  const double L = 2.0;
  std::vector<double> errs;
  for (int n : {64, 128, 256}) {
    auto g = make_grid(AnnulusSpec{L}, n, 4);
    RealMatrix j(n, g.n_phi);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < g.n_phi; ++k) j(i, k) = manufactured_exp_source(g.r[i], g.phi(k), L);
    auto u = solve_poisson(j, BoundaryFourier(4), BoundaryFourier(4), g);
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < g.n_phi; ++k) e = std::max(e, std::abs(u.values(i, k) - manufactured_exp(g.r[i], g.phi(k), L)));
    errs.push_back(e);
  }
  EXPECT_GT(std::log2(errs[0] / errs[1]), 1.9);
  EXPECT_GT(std::log2(errs[1] / errs[2]), 1.9);
  EXPECT_LT(errs[2], 1e-4);
}

TEST(Elliptic2D, NeumannTraceInner) {
  const double L = 2.0;
  for (auto sp : {RadialSpacing::uniform, RadialSpacing::chebyshev}) {
    auto g = make_grid(AnnulusSpec{L}, 64, 4, sp);
    ScalarField2D u{g, RealMatrix(64, g.n_phi)}, v{g, RealMatrix(64, g.n_phi)};
    for (int i = 0; i < 64; ++i)
      for (int k = 0; k < g.n_phi; ++k) {
        u.values(i, k) = std::log(g.r[i]) / std::log(L);
        v.values(i, k) = (g.r[i] - 1) * std::cos(g.phi(k));
      }
    auto tu = neumann_trace_inner(u);
    auto tv = neumann_trace_inner(v);
    const double tol = sp == RadialSpacing::chebyshev ? 1e-12 : 1e-5;
    EXPECT_NEAR(tu[0].real(), -1.0 / std::log(L), tol);
    EXPECT_NEAR(tu[1].real(), 0.0, 1e-14);
    EXPECT_NEAR(tv.eval_real(0.4), -std::cos(0.4), 1e-11);
    EXPECT_EQ(neumann_trace_inner(ScalarField2D{g, RealMatrix::Zero(64, g.n_phi)}).norm_inf(), 0.0);
  }
}

TEST(Elliptic2D, HarmonicExtension) {
  const double L = 2.0;
  auto g = make_grid(AnnulusSpec{L}, 40, 4, RadialSpacing::chebyshev);
  auto v = harmonic_extension(BoundaryFourier::constant(4, 1.0), BoundaryFourier(4), g);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(v.values(i, 3), 1.0 - std::log(g.r[i]) / std::log(L), 1e-13);
  auto w = harmonic_extension(BoundaryFourier::trig(4, 1, 1.0, 0.0), BoundaryFourier(4), g);
  for (int i = 0; i < 40; ++i)
    EXPECT_NEAR(w.values(i, 5), (-g.r[i] / 3.0 + 4.0 / (3.0 * g.r[i])) * std::cos(g.phi(5)), 1e-13);
  auto z = harmonic_extension(BoundaryFourier(4), BoundaryFourier(4), g);
  EXPECT_EQ(max_abs(z.values), 0.0);
  // maximum principle
  auto mp = harmonic_extension(BoundaryFourier::trig(4, 2, 0.7, 0.2), BoundaryFourier::trig(4, 3, -0.4, 0.1), g);
  EXPECT_LE(mp.values.maxCoeff(), std::hypot(0.7, 0.2) + 1e-10);
  EXPECT_GE(mp.values.minCoeff(), -std::hypot(0.7, 0.2) - 1e-10);
}

namespace {
RealMatrix smooth_source(const TensorGrid2D& g) {
  RealMatrix j(g.n_r(), g.n_phi);
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) j(i, k) = std::exp(-g.r[i]) * (1 + std::cos(g.phi(k)) + 0.3 * std::sin(2 * g.phi(k)));
  return j;
}
}  // namespace

TEST(Elliptic2D, VariableCoeffIdentityMatchesPoisson) {
  auto g = make_grid(AnnulusSpec{2.0}, 64, 8);
  RealMatrix j = smooth_source(g);
  auto in = BoundaryFourier::trig(8, 1, 0.2, 0.1), out = BoundaryFourier::constant(8, 0.3);
  auto ref = solve_poisson(j, in, out, g);
  auto var = solve_variable_coeff(j, identity_map(2.0), {in, out}, g);
  EXPECT_LT(max_abs(ref.values - var.values), 1e-9);
}

TEST(Elliptic2D, VariableCoeffRotationIsIsometric) {
  auto g = make_grid(AnnulusSpec{2.0}, 48, 8);
  const double rot = 0.61;
  RealMatrix jrot(g.n_r(), g.n_phi);
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      // physical source s(y) = r e^{-r} cos(theta), pulled back through the rotation
      jrot(i, k) = g.r[i] * std::exp(-g.r[i]) * std::cos(g.phi(k) + rot);
    }
  auto ref = solve_poisson(jrot, BoundaryFourier(8), BoundaryFourier(8), g);
  auto var = solve_variable_coeff(jrot, rotation_map(rot, 2.0), {BoundaryFourier(8), BoundaryFourier(8)}, g);
  EXPECT_LT(max_abs(ref.values - var.values), 1e-9);
}

TEST(Elliptic2D, VariableCoeffManufacturedThroughBumpMap) {
  const double L = 2.0;
  auto map = radial_bump_map(L, 0.05);
  PlanarDomain dom{L, map};
  // v*(r, phi) in reference coordinates; source = Laplacian in the image domain
  auto vstar = [L](double r, double p) { return (r - 1) * (L - r) * (1.0 + 0.5 * std::cos(p)); };
  auto grad = [L](double r, double p) {
    return Vec2((L + 1 - 2 * r) * (1.0 + 0.5 * std::cos(p)), -(r - 1) * (L - r) * 0.5 * std::sin(p));
  };
  auto flux = [&](double r, double p) {
    auto m = polar_metric(dom, r, p);
    return Vec2(m.sqrt_g * (m.g_inv * grad(r, p)));
  };
  auto source = [&](double r, double p) {
    const double h = 1e-5;
    const double div = (flux(r + h, p).x() - flux(r - h, p).x()) / (2 * h) + (flux(r, p + h).y() - flux(r, p - h).y()) / (2 * h);
    return div / polar_metric(dom, r, p).sqrt_g;
  };
  std::vector<double> errs;
  for (int n : {64, 128, 256}) {
    auto g = make_grid(AnnulusSpec{L}, n, 8);
    RealMatrix j(n, g.n_phi);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < g.n_phi; ++k) j(i, k) = source(g.r[i], g.phi(k));
    auto v = solve_variable_coeff(j, map, {BoundaryFourier(8), BoundaryFourier(8)}, g);
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < g.n_phi; ++k) e = std::max(e, std::abs(v.values(i, k) - vstar(g.r[i], g.phi(k))));
    errs.push_back(e);
  }
  EXPECT_GT(std::log2(errs[0] / errs[1]), 1.8);
  EXPECT_GT(std::log2(errs[1] / errs[2]), 1.8);
}
