#include <gtest/gtest.h>

#include "mhs/mapped2d.hpp"

using namespace mhs;

TEST(Mapped2D, IdentityOperatorMatchesClosedForm) {
  MappedAnnulus U(std::nullopt, 2.0, 64, 8);
  const auto A = U.radial_operator(8);
  for (int k = 0; k <= 8; ++k)
    EXPECT_NEAR((kInnerRadialSign * A.entry(k, k)).real(), closed_form_multiplier(k, 2.0), 5e-4) << k;
  // radial footpoints on the exact annulus: no mode coupling
  EXPECT_LT(std::abs(A.entry(1, 3)), 1e-10);
}

TEST(Mapped2D, ReferenceFieldIsB0OnAnnulus) {
  MappedAnnulus U(std::nullopt, 2.0, 64, 8);
  const auto& b = U.reference_field();
  for (int i = 0; i < U.grid().n_r(); i += 9) EXPECT_NEAR(b.br(i, 3), 1.0 / U.grid().r[i], 2e-4);
  EXPECT_LT(b.bphi.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mapped2D, OperatorDifferenceIsLinearInEpsilon) {
  const auto c = mapped_operator_comparison({0.02, 0.05, 0.1});
  ASSERT_EQ(c.size(), 3u);
  double lo = 1e300, hi = 0.0;
  for (const auto& x : c) {
    EXPECT_GT(x.difference, 0.0);
    lo = std::min(lo, x.constant);
    hi = std::max(hi, x.constant);
  }
  const double mid = 0.5 * (lo + hi);
  EXPECT_LT((hi - lo) / mid, 0.4);
}

TEST(Mapped2D, PotentialsRejectIncompatibleFlux) {
  MappedAnnulus U(radial_bump_map(2.0, 0.05), 2.0, 32, 6);
  auto d = perturbed_mapped_data(U, 0.0);
  d.f_outer[0] += 0.1;
  EXPECT_THROW(U.potentials(d), CompatibilityError);
}

TEST(Mapped2D, UnperturbedDataReproduceReferenceField) {
  MappedAnnulus U(radial_bump_map(2.0, 0.05), 2.0, 48, 6);
  const auto d = perturbed_mapped_data(U, 0.0);
  const auto p = U.potentials(d);
  EXPECT_NEAR(p.lambda, 0.5, 1e-12);
  const auto w = U.divcurl(RealMatrix::Zero(U.grid().n_r(), U.grid().n_phi), p, 0.0);
  EXPECT_LT(max_difference(w, U.reference_field()), 1e-4);
}

TEST(Mapped2D, FixedPointConverges) {
  MappedAnnulus U(radial_bump_map(2.0, 0.05), 2.0, 64, 8);
  const auto d = perturbed_mapped_data(U, 0.005);
  SolverConfig cfg;
  cfg.K = 8;
  cfg.N_r = 64;
  cfg.tol_fixed_point = 1e-9;
  cfg.max_iter = 20;
  const auto r = solve_mapped_fixed_point(U, d, cfg);
  ASSERT_TRUE(r.converged) << r.message;
  ASSERT_GE(r.records.size(), 3u);
  EXPECT_LT(r.records[2].contraction, 0.1);
  EXPECT_LT(r.records.back().tangential_error, 1e-10);
  EXPECT_LT(r.records.back().normal_error, 1e-4);
  EXPECT_GT(r.current.cwiseAbs().maxCoeff(), 1e-4);
}
