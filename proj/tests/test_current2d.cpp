#include <gtest/gtest.h>

#include "mhs/gradrubin2d.hpp"

using namespace mhs;

TEST(Current, ClosedFormMultiplierValues) {
  EXPECT_NEAR(closed_form_multiplier(1, 2.0), -5.0 / 9.0, 1e-15);
  const double e = std::exp(1.0);
  EXPECT_NEAR(closed_form_multiplier(0, e), (3.0 - e * e) / 4.0, 1e-14);
  EXPECT_NEAR(closed_form_multiplier(-1, 2.0), closed_form_multiplier(1, 2.0), 0.0);
  EXPECT_LT(std::abs(closed_form_multiplier(200, 2.0)), 1e-2);
}

TEST(Current, MultiplierMatchesRadialSolve) {
  for (int k : {0, 1, 2, 3, 7}) {
    for (double L : {1.5, 2.0, 4.0}) {
      auto prof = solve_poisson_mode(k, [](double) { return Complex(1.0); }, {0.0, 0.0}, L, 64,
                                     RadialSpacing::chebyshev);
      RadialCalculus calc(prof.r, RadialSpacing::chebyshev);
      const Complex du = calc.d1().row(0).cast<Complex>().dot(prof.values);
      EXPECT_NEAR(du.real(), closed_form_multiplier(k, L), 1e-10) << k << " " << L;
    }
  }
}

TEST(Current, OperatorOfReferenceFieldIsDiagonal) {
  const double L = 2.0;
  const int K = 16;
  auto grid = make_grid(AnnulusSpec{L}, 256, K, RadialSpacing::chebyshev);
  PoissonSolver solver(grid);
  auto A = assemble_A(AnalyticVelocity{SpiralField{}}, K, solver);
  auto ref = closed_form_operator(K, L);
  for (int k = -K; k <= K; ++k) EXPECT_NEAR(std::abs(A.entry(k, k) - ref.entry(k, k)), 0.0, 1e-6) << k;
  EXPECT_LT(A.off_diagonal_mass(), 1e-8);
  EXPECT_LT(A.condition_number(), 1e4);
}

TEST(Current, ComputeJDegenerate) {
  BoundaryFourier a = BoundaryFourier::constant(2, 1.0), b = BoundaryFourier::trig(2, 1, 1.0, 0.0);
  EXPECT_THROW(compute_J(a, b, BoundaryFourier::constant(2, -1.0), BoundaryFourier::constant(0, 1.0)),
               DegeneracyError);
  EXPECT_NEAR(compute_J(a, a, BoundaryFourier::constant(2, -1.0), BoundaryFourier::constant(0, 1.0)), 1.0, 1e-15);
}

TEST(Current, EquationResidualAndCirculation) {
  auto A = closed_form_operator(4, 2.0);
  CurrentEquationData d;
  d.g = BoundaryFourier::trig(4, 1, 0.0, 0.01);
  d.mono_tangent = BoundaryFourier(4);
  d.v_trace = BoundaryFourier::trig(4, 2, 0.003, 0.0);
  d.phi_trace = BoundaryFourier::constant(4, -1.0 / std::log(2.0));
  d.f_inner = BoundaryFourier::constant(4, -1.0) + BoundaryFourier::trig(4, 1, 0.01, 0.0);
  d.arclength = BoundaryFourier::constant(0, 1.0);
  auto s = solve_current_equation(A, d, JMode::pressure_J);
  EXPECT_LT(s.residual, 1e-14);
  EXPECT_NEAR(detail::boundary_product(d.f_inner, s.j0, d.arclength).real(), 0.0, 1e-14);
  auto fixed = solve_current_equation(A, d, JMode::fixed_J, 0.25);
  EXPECT_EQ(fixed.J, 0.25);
  EXPECT_LT(fixed.residual, 1e-14);
}

TEST(Current, SingularOperatorRejected) {
  OperatorMatrix A{1, ComplexMatrix::Zero(3, 3), 0};
  CurrentEquationData d{BoundaryFourier(1), 0.0, BoundaryFourier(1), BoundaryFourier(1),
                        BoundaryFourier(1), BoundaryFourier(1), BoundaryFourier(0)};
  EXPECT_THROW(solve_current_equation(A, d, JMode::fixed_J), DegeneracyError);
}

TEST(GradRubin, ReferenceFieldIsFixedPoint) {
  SolverConfig cfg;
  cfg.N_r = 48;
  cfg.K = 8;
  auto data = reference_data(cfg.K, cfg.outer_radius);
  auto res = solve_fixed_point(data, cfg);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LE(res.report.records.size(), 2u);
  EXPECT_LT(res.field.max_norm() - 1.0, 1e-12);
  EXPECT_LT(res.pressure.values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradRubin, SmallPerturbationConverges) {
  SolverConfig cfg;
  cfg.N_r = 48;
  cfg.K = 8;
  cfg.tol_fixed_point = 1e-10;
  auto data = reference_data(cfg.K, cfg.outer_radius);
  data.f.inner = data.f.inner + BoundaryFourier::trig(cfg.K, 1, 0.01, 0.0);
  data.g = BoundaryFourier::trig(cfg.K, 1, 0.0, 0.01);
  auto res = solve_fixed_point(data, cfg);
  ASSERT_TRUE(res.report.converged) << res.report.message;
  const auto& last = res.report.records.back();
  EXPECT_LT(res.report.max_contraction(), 0.5);
  EXPECT_LT(last.residuals.normal_inner, 1e-9);
  EXPECT_LT(last.residuals.normal_outer, 1e-9);
  EXPECT_LT(last.residuals.tangential_inner, 1e-9);
  EXPECT_LT(last.residuals.div, 1e-8);
  EXPECT_LT(last.loop_defect, 1e-8);
  EXPECT_LT(last.residuals.force, 1e-8);
  EXPECT_LT(last.residuals.curl_minus_j, 1e-8);
}

TEST(GradRubin, OversizedDataRejected) {
  SolverConfig cfg;
  cfg.N_r = 32;
  cfg.K = 4;
  auto data = reference_data(cfg.K, cfg.outer_radius);
  data.g = BoundaryFourier::trig(cfg.K, 1, 0.5, 0.0);
  EXPECT_THROW(solve_fixed_point(data, cfg), PreconditionError);
}

TEST(Current, SingleModeInversionOfReferenceOperator) {
  const double L = 2.0;
  const int K = 4;
  auto A = closed_form_operator(K, L);
  CurrentEquationData d{BoundaryFourier::mode(K, 3, Complex(1e-3, 2e-3)), 0.0, BoundaryFourier(K),
                        BoundaryFourier(K), BoundaryFourier::constant(K, -1.0 / std::log(L)),
                        BoundaryFourier::constant(K, -1.0), BoundaryFourier::constant(0, 1.0)};
  auto s = solve_current_equation(A, d, JMode::fixed_J, 0.0);
  // g = s A j0 with A's entry s m_k
  EXPECT_NEAR(std::abs(s.j0[3] - d.g[3] / closed_form_multiplier(3, L)), 0.0, 1e-15);
  for (int k = -K; k <= K; ++k)
    if (k != 3) EXPECT_EQ(s.j0[k], Complex(0.0));
}

TEST(Current, DenominatorOfReferenceOperator) {
  const double L = 2.0;
  const int K = 4;
  auto A = closed_form_operator(K, L);
  const auto f = BoundaryFourier::constant(K, -1.0) + BoundaryFourier::trig(K, 2, 0.1, 0.0);
  CurrentEquationData d{BoundaryFourier(K), 0.5, BoundaryFourier(K), BoundaryFourier(K),
                        BoundaryFourier::constant(K, -1.0 / std::log(L)), f, BoundaryFourier::constant(0, 1.0)};
  auto s = solve_current_equation(A, d, JMode::pressure_J);
  EXPECT_EQ(s.J, 0.0);
  // b = A^{-1} phi_trace is the constant (-1/ln L)/(s m_0)
  const double want = kTwoPi * (-1.0) * (-1.0 / std::log(L)) / (kInnerRadialSign * closed_form_multiplier(0, L));
  EXPECT_NEAR(s.denominator, want, 1e-13);
  d.f_inner = BoundaryFourier::trig(K, 1, 1.0, 0.0);
  EXPECT_THROW(solve_current_equation(A, d, JMode::pressure_J), DegeneracyError);
}

TEST(Current, SpiralOperatorUnderRefinement) {
  const double L = 2.0;
  const int K = 6;
  auto make = [&](int nr) {
    PoissonSolver solver(make_grid(AnnulusSpec{L}, nr, K, RadialSpacing::chebyshev));
    return assemble_A(AnalyticVelocity{SpiralField{0.5, 1.0}}, K, solver);
  };
  const auto a = make(64), b = make(128);
  EXPECT_LT((a.m - b.m).cwiseAbs().maxCoeff(), 1e-6);
  // rotation invariant field: diagonal, with complex multipliers
  EXPECT_LT(a.off_diagonal_mass(), 1e-10 * a.diagonal_mass());
  EXPECT_GT(std::abs(a.entry(3, 3).imag()), 1e-3 * std::abs(a.entry(3, 3)));
  for (int k = -K; k <= K; ++k) {
    for (int q = -K; q <= K; ++q) EXPECT_NEAR(std::abs(a.entry(-k, -q) - std::conj(a.entry(k, q))), 0.0, 1e-12);
    double row = 0.0;
    for (int q = -K; q <= K; ++q)
      if (q != k) row += std::abs(a.entry(k, q));
    EXPECT_GT(std::abs(a.entry(k, k)), row);
  }
}

TEST(Current, OperatorContinuousInField) {
  const double L = 2.0;
  const int K = 6;
  PoissonSolver solver(make_grid(AnnulusSpec{L}, 64, K, RadialSpacing::chebyshev));
  const auto a0 = assemble_A(AnalyticVelocity{SpiralField{}}, K, solver);
  std::vector<double> c;
  for (double beta : {0.005, 0.01, 0.02}) {
    const auto a = assemble_A(AnalyticVelocity{SpiralField{beta, 1.0}}, K, solver);
    c.push_back((a.m - a0.m).cwiseAbs().maxCoeff() / beta);
  }
  EXPECT_NEAR(c[0] / c[2], 1.0, 0.1);
  EXPECT_NEAR(c[1] / c[2], 1.0, 0.1);
}
