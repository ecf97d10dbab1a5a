#include <gtest/gtest.h>

#include "mhs/divcurl2d.hpp"

using namespace mhs;

namespace {
TensorGrid2D cheb_grid(double L = 2.0, int nr = 48, int K = 8) {
  return make_grid(AnnulusSpec{L}, nr, K, RadialSpacing::chebyshev);
}
}  // namespace

TEST(DivCurl, PotentialsOfReferenceData) {
  const double L = 2.0;
  FluxData f{BoundaryFourier::constant(4, -1.0), BoundaryFourier::constant(4, 1.0 / L)};
  auto p = boundary_potentials(f, L);
  EXPECT_NEAR(p.lambda, 0.5, 1e-15);
  EXPECT_NEAR(p.inner_flux, -kTwoPi, 1e-14);
  EXPECT_LT(p.h_minus.norm_inf(), 1e-15);
  EXPECT_LT(p.h_plus.norm_inf(), 1e-15);
}

TEST(DivCurl, PotentialsOfCosineData) {
  // f_minus = -1 + a cos(phi): h_minus = a sin(phi)
  const double L = 3.0, a = 0.2;
  FluxData f{BoundaryFourier::trig(4, 1, a, 0.0) + BoundaryFourier::constant(4, -1.0),
             BoundaryFourier::constant(4, 1.0 / L) + BoundaryFourier::trig(4, 2, 0.0, 0.1)};
  auto p = boundary_potentials(f, L);
  for (double phi : {0.0, 0.7, 2.5}) {
    EXPECT_NEAR(p.h_minus.eval_real(phi), a * std::sin(phi), 1e-14);
    // d_phi h_plus = -L * 0.1 sin(2 phi)
    EXPECT_NEAR(p.h_plus.eval_real(phi), L * 0.05 * std::cos(2 * phi), 1e-14);
  }
}

TEST(DivCurl, IncompatibleFluxThrows) {
  FluxData f{BoundaryFourier::constant(2, -1.0), BoundaryFourier::constant(2, 1.0)};
  EXPECT_THROW(boundary_potentials(f, 2.0), CompatibilityError);
}

TEST(DivCurl, MonopoleFluxAndHarmonicCirculation) {
  auto grid = cheb_grid();
  auto m = monopole_nodal(grid, 1.0);
  auto h = harmonic_tangent_field(grid);
  const double lnL = std::log(grid.outer_radius);
  for (int i : {0, 10, grid.n_r() - 1}) {
    double flux = 0.0, circ = 0.0;
    for (int c = 0; c < grid.n_phi; ++c) {
      flux += m.br(i, c) * grid.r[i] * grid.dphi();
      circ += h.bphi(i, c) * grid.r[i] * grid.dphi();
    }
    EXPECT_NEAR(flux, 4 * kPi, 1e-12);
    EXPECT_NEAR(circ, kTwoPi / lnL, 1e-12);
  }
  RadialCalculus calc(grid.r, grid.spacing);
  EXPECT_LT(interior_max(divergence(m, calc.d1())), 1e-10);
  EXPECT_LT(interior_max(curl(h, calc.d1())), 1e-10);
  EXPECT_LT(interior_max(divergence(h, calc.d1())), 1e-12);
}

TEST(DivCurl, ReconstructsReferenceField) {
  auto grid = cheb_grid();
  PoissonSolver solver(grid);
  auto b0 = sample_field(SpiralField{}, grid);
  auto f = flux_data_of(b0, grid.K);
  auto r = solve_divcurl(RealMatrix::Zero(grid.n_r(), grid.n_phi), f, {0.5, 0.0}, solver);
  EXPECT_LT(max_difference(r.field, b0), 1e-12);
}

TEST(DivCurl, ReconstructsSpiralCirculation) {
  // spiral beta: B = B0 + beta e_phi / r, i.e. J = beta ln L
  const double beta = 0.3;
  auto grid = cheb_grid();
  PoissonSolver solver(grid);
  auto b = sample_field(SpiralField{beta, 1.0}, grid);
  auto f = flux_data_of(b, grid.K);
  auto r = solve_divcurl(RealMatrix::Zero(grid.n_r(), grid.n_phi), f,
                         {0.5, beta * std::log(grid.outer_radius)}, solver);
  EXPECT_LT(max_difference(r.field, b), 1e-12);
}

TEST(DivCurl, MatchesPrescribedCurlAndFlux) {
  // nodal curl applies the collocation derivative twice; roundoff grows like N_r^4
  auto grid = cheb_grid(2.0, 32, 8);
  PoissonSolver solver(grid);
  RadialCalculus calc(grid.r, grid.spacing);
  RealMatrix j(grid.n_r(), grid.n_phi);
  for (int i = 0; i < grid.n_r(); ++i)
    for (int c = 0; c < grid.n_phi; ++c) j(i, c) = std::cos(grid.phi(c)) * grid.r[i] + 0.1 * std::sin(2 * grid.phi(c));
  FluxData f{BoundaryFourier::constant(8, -1.0) + BoundaryFourier::trig(8, 1, 0.05, 0.0),
             BoundaryFourier::constant(8, 0.5) + BoundaryFourier::trig(8, 3, 0.0, 0.02)};
  auto r = solve_divcurl(j, f, {0.5, 0.1}, solver);
  EXPECT_LT(interior_max(divergence(r.field, calc.d1())), 1e-9);
  EXPECT_LT(interior_max(curl(r.field, calc.d1()) - j), 1e-8);
  auto back = flux_data_of(r.field, 8);
  EXPECT_LT((back.inner - f.inner).norm_inf(), 1e-11);
  EXPECT_LT((back.outer - f.outer).norm_inf(), 1e-11);
}

TEST(DivCurl, LinearInCurrent) {
  auto grid = cheb_grid();
  PoissonSolver solver(grid);
  FluxData zero{BoundaryFourier(4), BoundaryFourier(4)};
  RealMatrix j1 = RealMatrix::Random(grid.n_r(), grid.n_phi), j2 = RealMatrix::Random(grid.n_r(), grid.n_phi);
  auto a = solve_divcurl(j1, zero, {0, 0}, solver).field;
  auto b = solve_divcurl(j2, zero, {0, 0}, solver).field;
  auto ab = solve_divcurl(RealMatrix(2 * j1 - 3 * j2), zero, {0, 0}, solver).field;
  EXPECT_LT(max_difference(ab, 2.0 * a - 3.0 * b), 1e-10);
}

TEST(DivCurl, AnalyticFieldValues) {
  EXPECT_NEAR((monopole_field({1, 0}) - Vec2(2, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((monopole_field({0, 2}) - Vec2(0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((reference_field({2, 0}) - Vec2(0.5, 0)).norm(), 0.0, 1e-15);
  EXPECT_THROW(reference_field({0, 0}), PreconditionError);
  auto grid = cheb_grid();
  auto b0 = sample_field(SpiralField{}, grid);
  auto rep = check_field_admissible(b0);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.min_norm, 0.5, 1e-15);
}

TEST(DivCurl, GaugeOnlyGivesHarmonicField) {
  auto grid = cheb_grid();
  PoissonSolver solver(grid);
  FluxData zero{BoundaryFourier(4), BoundaryFourier(4)};
  auto r = solve_divcurl(RealMatrix::Zero(grid.n_r(), grid.n_phi), zero, {0.0, 1.0}, solver);
  EXPECT_LT(max_difference(r.field, harmonic_tangent_field(grid)), 1e-13);
  const auto [in, out] = normal_traces(r.field);
  for (int c = 0; c < grid.n_phi; ++c) {
    EXPECT_LT(std::abs(in[c]), 1e-12);
    EXPECT_LT(std::abs(out[c]), 1e-12);
  }
}

TEST(DivCurl, AdmissibilityLocatesZero) {
  auto grid = cheb_grid();
  // B0 + uniform field (-0.8, 0) vanishes at x = (1.25, 0)
  auto b = sample_field(sum_fields(SpiralField{}, UniformField{Vec2(-0.8, 0.0)}, 1.0), grid);
  auto rep = check_field_admissible(b);
  EXPECT_FALSE(rep.pass);
  const double r = grid.r[rep.min_norm_i], phi = grid.phi(rep.min_norm_j);
  EXPECT_LT((polar_to_cartesian(r, phi) - Vec2(1.25, 0)).norm(), 0.1);
}
