#include <gtest/gtest.h>

#include "mhs/elliptic2d.hpp"
#include "mhs/transport2d.hpp"

using namespace mhs;

TEST(Transport2D, MonopoleCharacteristicClosedForm) {
  const double L = 2.0;
  auto path = trace_characteristic(velocity_of(SpiralField{}), 0.0, TraceDirection::forward, L);
  EXPECT_NEAR(path.exit_s, (L * L - 1) / 2, 1e-9);
  EXPECT_NEAR(path.r.back(), L, 1e-12);
  for (size_t k = 0; k < path.s.size(); ++k) {
    EXPECT_NEAR(path.r[k], std::sqrt(1 + 2 * path.s[k]), 1e-9);
    EXPECT_NEAR(path.phi[k], 0.0, 1e-14);
    EXPECT_LE(path.r[k], L + 1e-9);
  }
}

TEST(Transport2D, UniformFieldGivesStraightLine) {
  auto path = trace_characteristic(velocity_of(UniformField{}), 0.3, TraceDirection::forward, 2.0);
  const double y0 = std::sin(0.3);
  for (size_t k = 0; k < path.s.size(); ++k) EXPECT_NEAR(path.r[k] * std::sin(path.phi[k]), y0, 1e-9);
}

TEST(Transport2D, SpiralAngleIncrement) {
  const double L = 2.0;
  auto fwd = trace_characteristic(velocity_of(SpiralField{0.5}), 1.0, TraceDirection::forward, L);
  EXPECT_NEAR(fwd.exit_angle - 1.0, 0.5 * std::log(L), 1e-9);
  auto bwd = trace_characteristic(velocity_of(SpiralField{0.5}), 1.0, TraceDirection::backward, L);
  EXPECT_NEAR(bwd.exit_angle - 1.0, -0.5 * std::log(L), 1e-9);
  EXPECT_NEAR(bwd.r.back(), 1.0, 1e-12);
}

TEST(Transport2D, TraceFailures) {
  EXPECT_THROW(trace_characteristic(velocity_of(UniformField{Vec2(0.0, 0.0)}), 0.0, TraceDirection::forward, 2.0),
               DegeneracyError);
  TraceOptions tight;
  tight.max_steps = 3;
  EXPECT_THROW(trace_characteristic(velocity_of(SpiralField{}), 0.0, TraceDirection::forward, 2.0, tight),
               ConvergenceError);
  // field with an interior zero at (1.5, 0): the path stalls before it
  auto stalled = sum_fields(SpiralField{}, UniformField{Vec2(-2.0 / 3.0, 0.0)});
  TraceOptions budget;
  budget.max_steps = 2000;
  EXPECT_ANY_THROW(trace_characteristic(velocity_of(stalled), 0.0, TraceDirection::forward, 2.0, budget));
}

TEST(Transport2D, FootpointsOfClosedFormFields) {
  auto g = make_grid(AnnulusSpec{2.0}, 24, 4, RadialSpacing::chebyshev);
  auto mono = footpoints(velocity_of(SpiralField{}), g);
  auto spiral = footpoints(velocity_of(SpiralField{0.5}), g);
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      EXPECT_NEAR(mono.theta(i, k), g.phi(k), 1e-12);
      EXPECT_NEAR(mono.s(i, k), (g.r[i] * g.r[i] - 1) / 2, 1e-9);
      const double expect = wrap_angle(g.phi(k) - 0.5 * std::log(g.r[i]));
      double d = std::abs(spiral.theta(i, k) - expect);
      d = std::min(d, kTwoPi - d);
      EXPECT_LT(d, 1e-9);
    }
  for (int k = 0; k < g.n_phi; ++k) {
    EXPECT_EQ(spiral.theta(0, k), g.phi(k));
    EXPECT_EQ(spiral.s(0, k), 0.0);
  }
  auto per_node = footpoints(velocity_of(SpiralField{0.5}), g, {}, FootpointMethod::backward_per_node);
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      double d = std::abs(per_node.theta(i, k) - spiral.theta(i, k));
      EXPECT_LT(std::min(d, kTwoPi - d), 1e-8);
      EXPECT_NEAR(per_node.s(i, k), spiral.s(i, k), 1e-8);
    }
}

TEST(Transport2D, TangentialInflowRejected) {
  auto g = make_grid(AnnulusSpec{2.0}, 16, 4);
  EXPECT_THROW(footpoints(velocity_of(UniformField{}), g), DegeneracyError);
}

TEST(Transport2D, TransportScalar) {
  auto g = make_grid(AnnulusSpec{2.0}, 24, 4, RadialSpacing::chebyshev);
  auto mono = footpoints(velocity_of(SpiralField{}), g);
  auto spiral = footpoints(velocity_of(SpiralField{0.5}), g);
  auto one = transport_scalar(BoundaryFourier::constant(4, 1.0), spiral);
  EXPECT_LT(max_abs(one.values.array() - 1.0), 1e-14);
  auto jm = transport_complex(BoundaryFourier::mode(4, 3), mono);
  auto js = transport_complex(BoundaryFourier::mode(4, 1), spiral);
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      EXPECT_LT(std::abs(jm(i, k) - std::polar(1.0, 3 * g.phi(k))), 1e-11);
      EXPECT_LT(std::abs(js(i, k) - std::polar(1.0, g.phi(k) - 0.5 * std::log(g.r[i]))), 1e-9);
    }
  auto real = transport_scalar(BoundaryFourier::trig(4, 2, 0.7, -0.3) + BoundaryFourier::constant(4, 0.1), spiral);
  const double hi = 0.1 + std::hypot(0.7, 0.3), lo = 0.1 - std::hypot(0.7, 0.3);
  EXPECT_LE(real.values.maxCoeff(), hi + 1e-10);
  EXPECT_GE(real.values.minCoeff(), lo - 1e-10);
}

TEST(Transport2D, InterpolatedNodalFieldReproducesFootpoints) {
  auto g = make_grid(AnnulusSpec{2.0}, 48, 8, RadialSpacing::chebyshev);
  Field2D f = sample_field(SpiralField{0.5}, g);
  FieldInterpolant interp(f);
  Vec2 v = interp.velocity(1.37, 0.91);
  Vec2 exact = polar_velocity(SpiralField{0.5}, 1.37, 0.91);
  EXPECT_LT((v - exact).norm(), 1e-10);
  const Vec2 x(1.2, 0.5);
  EXPECT_LT((interp.jacobian(x) - SpiralField{0.5}.jacobian(x)).cwiseAbs().maxCoeff(), 1e-8);
  auto fp = footpoints(interp, g);
  auto ref = footpoints(velocity_of(SpiralField{0.5}), g);
  double worst = 0.0;
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      const double d = std::abs(fp.theta(i, k) - ref.theta(i, k));
      worst = std::max(worst, std::min(d, kTwoPi - d));
    }
  EXPECT_LT(worst, 1e-9);
}

TEST(Transport2D, FlowJacobianIdentity) {
  EXPECT_LT(flow_jacobian_check(SpiralField{}, 2.0, 20), 1e-8);
  EXPECT_LT(flow_jacobian_check(SpiralField{0.5}, 2.0, 20), 1e-7);
  EXPECT_GT(flow_jacobian_check(RadialUnitField{}, 2.0, 8), 0.5);
}

TEST(Transport2D, DirectionalResidualSecondOrder) {
  std::vector<double> res;
  for (int n : {32, 64, 128}) {
    auto g = make_grid(AnnulusSpec{2.0}, n, 4);
    auto fp = footpoints(velocity_of(SpiralField{0.5}), g);
    auto j = transport_scalar(BoundaryFourier::trig(4, 2, 1.0, 0.0), fp);
    RadialCalculus calc(g.r, g.spacing);
    res.push_back(directional_residual(sample_field(SpiralField{0.5}, g), j.values, calc.d1()));
  }
  EXPECT_GT(std::log2(res[0] / res[1]), 1.9);
  EXPECT_GT(std::log2(res[1] / res[2]), 1.9);
}
