#include <gtest/gtest.h>

#include "mhs/verify.hpp"

using namespace mhs;

TEST(Verify, OneSidedLogDecaysLikeLogOverXi) {
  auto f = kernel_ft_decay(KernelKind::one_sided_log);
  EXPECT_EQ(f.model, DecayModel::log_over_inverse);
  EXPECT_GT(f.ratio(), 10.0);
  EXPECT_FALSE(f.inconclusive);
}

TEST(Verify, SymmetricLogDecaysLikeInverse) {
  auto f = kernel_ft_decay(KernelKind::symmetric_log);
  EXPECT_EQ(f.model, DecayModel::inverse);
  // classical transform of ln|z|: -pi/|xi|
  EXPECT_NEAR(f.constant, kPi, 1e-6);
}

TEST(Verify, PowerKernelSlope) {
  // |z|^{-p} in one variable transforms like |xi|^{p-1}
  auto f = kernel_ft_decay(KernelKind::power);
  EXPECT_NEAR(f.slope, -0.5, 0.025);
}

TEST(Verify, DecayModelStableUnderRefinement) {
  KernelOptions fine;
  fine.n_xi = 65;
  fine.max_phase_per_panel = 4.0;
  fine.xi_max = 1e6;
  KernelOptions coarse = fine;
  coarse.n_xi = 33;
  for (auto kind : {KernelKind::one_sided_log, KernelKind::symmetric_log}) {
    EXPECT_EQ(kernel_ft_decay(kind, 1 << 16, coarse).model, kernel_ft_decay(kind, 1 << 17, fine).model);
  }
}

TEST(Verify, KernelPreconditions) {
  EXPECT_THROW(kernel_ft_decay(KernelKind::one_sided_log, 1000), PreconditionError);
  KernelOptions narrow;
  narrow.xi_max = 10 * narrow.xi_min;
  EXPECT_THROW(kernel_ft_decay(KernelKind::one_sided_log, 1 << 16, narrow), PreconditionError);
}

TEST(Verify, PredictedSymbol) {
  const auto p = probe_inner(SpiralField{});
  EXPECT_NEAR(p.n_dot_b, -1.0, 1e-15);
  EXPECT_NEAR(p.sin_theta, 1.0, 1e-15);
  EXPECT_NEAR(std::abs(predicted_symbol(p.n_dot_b, p.b_norm, p.cos_theta, p.sin_theta, 5) + 0.2), 0.0, 1e-15);
  const auto q = probe_inner(SpiralField{0.5, 1.0});
  EXPECT_NEAR(q.cos_theta, 0.5 / std::sqrt(1.25), 1e-15);
  EXPECT_NEAR(std::arg(predicted_symbol(-1, q.b_norm, q.cos_theta, q.sin_theta, 3) / -1.0), -std::atan(0.5), 1e-14);
}

TEST(Verify, ReferenceSymbolDeviationShrinks) {
  const int K = 32;
  PoissonSolver solver(make_grid(AnnulusSpec{2.0}, 128, K, RadialSpacing::chebyshev));
  auto A = assemble_A(AnalyticVelocity{SpiralField{}}, K, solver);
  std::vector<int> ks;
  for (int k = 1; k <= K; ++k) ks.push_back(k);
  auto s = numeric_symbol2d(A, probe_inner(SpiralField{}), ks);
  // exact: |k| m_k = -k/(k-2) for large k
  EXPECT_NEAR(s[31].measured.real() * 32, -32.0 / 30.0, 1e-6);
  EXPECT_GT(s[0].deviation(), 0.2);
  for (size_t i = 17; i + 3 < s.size(); ++i) {
    const double a = s[i - 1].deviation() + s[i].deviation() + s[i + 1].deviation();
    const double b = s[i].deviation() + s[i + 1].deviation() + s[i + 2].deviation();
    EXPECT_LE(b, a);
  }
}

TEST(Verify, SpiralSymbolPhase) {
  const int K = 32;
  PoissonSolver solver(make_grid(AnnulusSpec{2.0}, 128, K, RadialSpacing::chebyshev));
  const SpiralField spiral{0.5, 1.0};
  auto A = assemble_A(AnalyticVelocity{spiral}, K, solver);
  auto s = numeric_symbol2d(A, probe_inner(spiral), {-32, 8, 16, 32});
  EXPECT_NEAR(s[0].phase_error(), s[3].phase_error(), 1e-10);
  EXPECT_LT(s[3].phase_error(), s[2].phase_error());
  EXPECT_LT(s[2].phase_error(), s[1].phase_error());
  EXPECT_LT(s[3].phase_error(), 0.06);
  EXPECT_THROW(numeric_symbol2d(A, probe_inner(spiral), {0}), PreconditionError);
}

TEST(Verify, Symbol3DGrowsLinearly) {
  for (double L : {2.0, 10.0}) {
    auto f = numeric_symbol3d(L, 128, 256);
    EXPECT_NEAR(f.slope, 1.0, 0.03) << L;
    EXPECT_GT(f.c, 0.0);
  }
  // reported, not asserted: the slope over small l is lower
  EXPECT_LT(numeric_symbol3d(2.0, 3, 32).slope, 0.97);
  EXPECT_THROW(numeric_symbol3d(2.0, 1, 32), PreconditionError);
}
