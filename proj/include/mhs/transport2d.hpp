#pragma once

// Characteristics of B and transport of the scalar current along them.

#include <boost/numeric/odeint.hpp>

#include <array>

#include "mhs/fields.hpp"
#include "mhs/spectral.hpp"

namespace mhs {

namespace odeint = boost::numeric::odeint;

/// Anything exposing the reference-coordinate flow velocity (dr/ds, dphi/ds).
template <typename V>
concept VelocityField = requires(const V& v, double r, double phi) {
  { v.velocity(r, phi) } -> std::convertible_to<Vec2>;
};

/// Adapter turning an analytic planar field into a velocity field on the annulus.
template <PlanarField F>
struct AnalyticVelocity {
  F field;
  Vec2 velocity(double r, double phi) const { return polar_velocity(field, r, phi); }
};

template <PlanarField F>
AnalyticVelocity<F> velocity_of(F f) {
  return {std::move(f)};
}

enum class TraceDirection { forward, backward };

struct TraceOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  int max_steps = 200000;
  double initial_step = 1e-3;
  double vanish_floor = 1e-12;
  double tangency_floor = 1e-6;  // relative to max |B| on the inflow circle
};

struct CharacteristicPath {
  std::vector<double> s;
  std::vector<double> r;
  std::vector<double> phi;
  double exit_s = 0.0;
  double exit_angle = 0.0;  // unwrapped
};

namespace detail {

using State2 = std::array<double, 2>;

template <VelocityField V>
CharacteristicPath trace_between(const V& field, double r0, double phi0, double r_target, double sign,
                                 const TraceOptions& opt) {
  auto rhs = [&](const State2& x, State2& dx, double) {
    const Vec2 v = field.velocity(x[0], x[1]);
    if (std::hypot(v.x(), x[0] * v.y()) < opt.vanish_floor)
      throw DegeneracyError("field vanishes along the characteristic");
    dx[0] = sign * v.x();
    dx[1] = sign * v.y();
  };
  auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State2>());
  CharacteristicPath path;
  State2 x{r0, phi0};
  stepper.initialize(x, 0.0, opt.initial_step);
  path.s.push_back(0.0);
  path.r.push_back(r0);
  path.phi.push_back(phi0);
  const double dir = r_target > r0 ? 1.0 : -1.0;
  for (int step = 0; step < opt.max_steps; ++step) {
    auto [t0, t1] = stepper.do_step(rhs);
    const State2& cur = stepper.current_state();
    if (dir * (cur[0] - r_target) >= 0.0) {
      double a = t0, b = t1;
      State2 mid;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
        const double m = 0.5 * (a + b);
        stepper.calc_state(m, mid);
        if (dir * (mid[0] - r_target) >= 0.0)
          b = m;
        else
          a = m;
      }
      stepper.calc_state(b, mid);
      path.s.push_back(b);
      path.r.push_back(mid[0]);
      path.phi.push_back(mid[1]);
      path.exit_s = b;
      path.exit_angle = mid[1];
      return path;
    }
    path.s.push_back(t1);
    path.r.push_back(cur[0]);
    path.phi.push_back(cur[1]);
  }
  throw ConvergenceError("characteristic failed to exit within the step budget");
}

}  // namespace detail

/// Integrates dPhi/ds = B(Phi) from the inflow circle (forward) or from the
/// outflow circle with reversed orientation (backward) until the opposite
/// boundary is crossed; the crossing is bisected on the dense output.
template <VelocityField V>
CharacteristicPath trace_characteristic(const V& field, double start_angle, TraceDirection direction,
                                        double outer_radius, const TraceOptions& opt = {}) {
  AnnulusSpec{outer_radius}.validate();
  if (direction == TraceDirection::forward)
    return detail::trace_between(field, 1.0, start_angle, outer_radius, 1.0, opt);
  return detail::trace_between(field, outer_radius, start_angle, 1.0, -1.0, opt);
}

/// Backward trace from an interior point to the inflow circle.
template <VelocityField V>
CharacteristicPath trace_to_inflow(const V& field, double r, double phi, const TraceOptions& opt = {}) {
  if (r <= 1.0) {
    CharacteristicPath p;
    p.s = {0.0};
    p.r = {r};
    p.phi = {phi};
    p.exit_angle = phi;
    return p;
  }
  return detail::trace_between(field, r, phi, 1.0, -1.0, opt);
}

struct FootpointMap {
  TensorGrid2D grid;
  RealMatrix theta;  // footpoint angle in [0, 2 pi)
  RealMatrix s;      // arrival parameter
  bool valid = false;
};

enum class FootpointMethod { forward_sweep, backward_per_node };

namespace detail {

template <VelocityField V>
void check_inflow(const V& field, const TensorGrid2D& grid, const TraceOptions& opt) {
  double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.n_phi; ++j) {
    const double vr = field.velocity(1.0, grid.phi(j)).x();
    vmax = std::max(vmax, std::abs(vr));
    vmin = std::min(vmin, vr);
  }
  if (!(vmin > opt.tangency_floor * vmax))
    throw DegeneracyError("field is tangent to or leaves through the inflow circle (min radial speed " +
                          std::to_string(vmin) + ")");
}

}  // namespace detail

/// Footpoint angle and arrival parameter at every grid node.
template <VelocityField V>
FootpointMap footpoints(const V& field, const TensorGrid2D& grid, const TraceOptions& opt = {},
                        FootpointMethod method = FootpointMethod::forward_sweep) {
  detail::check_inflow(field, grid, opt);
  const int nr = grid.n_r(), np = grid.n_phi;
  FootpointMap fp{grid, RealMatrix::Zero(nr, np), RealMatrix::Zero(nr, np), false};

  if (method == FootpointMethod::backward_per_node) {
    parallel_for(static_cast<std::ptrdiff_t>(nr) * np, [&](std::ptrdiff_t idx) {
      const int i = static_cast<int>(idx / np), j = static_cast<int>(idx % np);
      auto path = trace_to_inflow(field, grid.r[i], grid.phi(j), opt);
      fp.theta(i, j) = wrap_angle(path.exit_angle);
      fp.s(i, j) = path.exit_s;
    });
    fp.valid = true;
    return fp;
  }

  // Forward sweep with r as the independent variable: dphi/dr = v_phi / v_r,
  // ds/dr = 1 / v_r, recorded at every grid radius.
  RealMatrix end_phi(nr, np), end_s(nr, np);
  parallel_for(np, [&](std::ptrdiff_t j) {
    using State = std::array<double, 2>;
    auto rhs = [&](const State& x, State& dx, double r) {
      const Vec2 v = field.velocity(r, x[0]);
      if (!(v.x() > opt.vanish_floor))
        throw DegeneracyError("radial speed of the field is not positive inside the annulus");
      dx[0] = v.y() / v.x();
      dx[1] = 1.0 / v.x();
    };
    State x{grid.phi(static_cast<int>(j)), 0.0};
    int col = 0;
    auto observe = [&](const State& st, double) {
      end_phi(col, j) = st[0];
      end_s(col, j) = st[1];
      ++col;
    };
    odeint::integrate_times(odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>()),
                            rhs, x, grid.r.begin(), grid.r.end(), std::min(opt.initial_step, grid.r[1] - grid.r[0]),
                            observe, odeint::max_step_checker(opt.max_steps));
  });

  parallel_for(nr, [&](std::ptrdiff_t ii) {
    const int i = static_cast<int>(ii);
    if (i == 0) {
      for (int j = 0; j < np; ++j) fp.theta(0, j) = grid.phi(j);
      return;
    }
    std::vector<double> drift(np), arrival(np);
    for (int j = 0; j < np; ++j) {
      drift[j] = end_phi(i, j) - grid.phi(j);
      arrival[j] = end_s(i, j);
    }
    TrigInterpolant d(drift), sv(arrival);
    for (int j = 0; j < np; ++j) {
      const double target = grid.phi(j);
      double th = target - d.eval(target).first;
      for (int it = 0; it < 50; ++it) {
        auto [dv, dd] = d.eval(th);
        const double step = (th + dv - target) / (1.0 + dd);
        th -= step;
        if (std::abs(step) < 1e-14) break;
      }
      fp.theta(i, j) = wrap_angle(th);
      fp.s(i, j) = sv.eval(th).first;
    }
  });
  fp.valid = true;
  return fp;
}

struct CurrentScalar2D {
  TensorGrid2D grid;
  RealMatrix values;
};

/// j(x) = j0(theta*(x)), complex-valued.
inline ComplexMatrix transport_complex(const BoundaryFourier& j0, const FootpointMap& fp) {
  if (!fp.valid) throw PreconditionError("footpoint map is not valid");
  ComplexMatrix out(fp.theta.rows(), fp.theta.cols());
  for (int j = 0; j < fp.theta.cols(); ++j)
    for (int i = 0; i < fp.theta.rows(); ++i) out(i, j) = j0.eval(fp.theta(i, j));
  return out;
}

inline CurrentScalar2D transport_scalar(const BoundaryFourier& j0, const FootpointMap& fp) {
  return {fp.grid, transport_complex(j0, fp).real()};
}

/// max_s |J(omega, s) - B(omega).n(omega)| along n_samples characteristics
/// started at uniform angles on the inflow circle, J = det(dPhi/dtheta, B(Phi))
/// from the variational equation.
template <PlanarField F>
double flow_jacobian_check(const F& field, double outer_radius, int n_samples = 100, const TraceOptions& opt = {}) {
  using State = std::array<double, 4>;
  std::vector<double> dev(n_samples, 0.0);
  parallel_for(n_samples, [&](std::ptrdiff_t k) {
    const double th = kTwoPi * k / n_samples;
    const Vec2 x0 = polar_to_cartesian(1.0, th);
    const Vec2 n0 = -x0;
    const double bn = field.cartesian(x0).dot(n0);
    auto rhs = [&](const State& x, State& dx, double) {
      const Vec2 p(x[0], x[1]);
      const Vec2 b = field.cartesian(p);
      const Vec2 d = field.jacobian(p) * Vec2(x[2], x[3]);
      dx = {b.x(), b.y(), d.x(), d.y()};
    };
    auto stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
    State x{x0.x(), x0.y(), -std::sin(th), std::cos(th)};
    stepper.initialize(x, 0.0, opt.initial_step);
    double worst = 0.0;
    for (int step = 0; step < opt.max_steps; ++step) {
      stepper.do_step(rhs);
      const State& c = stepper.current_state();
      const Vec2 p(c[0], c[1]);
      if (p.norm() > outer_radius) break;
      const Vec2 b = field.cartesian(p);
      const double jac = c[2] * b.y() - c[3] * b.x();
      worst = std::max(worst, std::abs(jac - bn));
      if (step + 1 == opt.max_steps) throw ConvergenceError("characteristic failed to exit within the step budget");
    }
    dev[k] = worst;
  });
  return *std::max_element(dev.begin(), dev.end());
}

/// Max over interior nodes of |(B . grad) j| using spectral angular and grid
/// radial derivatives; a consistency diagnostic of the transport.
inline double directional_residual(const Field2D& b, const RealMatrix& j, const RealMatrix& d1) {
  const RealMatrix jr = d1 * j;
  const RealMatrix jp = angular_derivative(j);
  double worst = 0.0;
  for (int i = 1; i + 1 < b.grid.n_r(); ++i)
    for (int k = 0; k < b.grid.n_phi; ++k)
      worst = std::max(worst, std::abs(b.br(i, k) * jr(i, k) + b.bphi(i, k) * jp(i, k) / b.grid.r[i]));
  return worst;
}

}  // namespace mhs
