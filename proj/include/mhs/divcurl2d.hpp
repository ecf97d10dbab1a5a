#pragma once

// Divergence-free fields with prescribed curl and normal trace on the annulus:
// W = lambda B_mono + rot grad u + J H, with H the harmonic field tangent to
// both circles and rot grad = (-d_y, d_x).

#include "mhs/elliptic2d.hpp"
#include "mhs/fields.hpp"
#include "mhs/transport2d.hpp"

namespace mhs {

struct GaugeConstants {
  double lambda = 0.0;
  double J = 0.0;
};

/// Normal-flux data f = B.n (outward n) on both circles, as functions of angle.
struct FluxData {
  BoundaryFourier inner;
  BoundaryFourier outer;
};

struct BoundaryPotentials {
  BoundaryFourier h_minus;
  BoundaryFourier h_plus;
  double lambda = 0.0;
  double inner_flux = 0.0;  // integral of f over the inner circle (arclength)
  double outer_flux = 0.0;
};

/// lambda from the inner flux against B_mono.n = -2, then zero-mean antiderivatives:
/// d_phi h_minus = f_minus - lambda B_mono.n on r = 1 and
/// d_phi h_plus = -L (f_plus - lambda B_mono.n) on r = L.
inline BoundaryPotentials boundary_potentials(const FluxData& f, double L, double tol = 1e-10) {
  AnnulusSpec{L}.validate();
  BoundaryPotentials out;
  out.inner_flux = kTwoPi * f.inner[0].real();
  out.outer_flux = kTwoPi * L * f.outer[0].real();
  const double scale = std::max({1.0, f.inner.norm_inf(), L * f.outer.norm_inf()});
  if (std::abs(out.inner_flux + out.outer_flux) > tol * kTwoPi * scale)
    throw CompatibilityError("total boundary flux does not vanish (" + std::to_string(out.inner_flux + out.outer_flux) + ")");
  out.lambda = out.inner_flux / (-2.0 * kTwoPi);
  BoundaryFourier fin = f.inner, fout = f.outer;
  fin[0] += 2.0 * out.lambda;
  fout[0] -= 2.0 * out.lambda / L;
  if (std::abs(fin[0]) > tol * scale || std::abs(fout[0]) > tol * scale)
    throw CompatibilityError("component flux does not vanish after monopole correction");
  fin[0] = 0.0;
  fout[0] = 0.0;
  out.h_minus = fin.antiderivative();
  out.h_plus = Complex(-L) * fout.antiderivative();
  return out;
}

/// e_phi / (r ln L): rotated gradient of ln r / ln L.
inline Field2D harmonic_tangent_field(const TensorGrid2D& grid) {
  Field2D h = Field2D::zeros(grid, PlanarDomain{grid.outer_radius, std::nullopt});
  const double lnL = std::log(grid.outer_radius);
  for (int i = 0; i < grid.n_r(); ++i) h.bphi.row(i).setConstant(1.0 / (grid.r[i] * lnL));
  return h;
}

inline Field2D monopole_nodal(const TensorGrid2D& grid, double lambda = 1.0) {
  Field2D m = Field2D::zeros(grid, PlanarDomain{grid.outer_radius, std::nullopt});
  for (int i = 0; i < grid.n_r(); ++i) m.br.row(i).setConstant(2.0 * lambda / grid.r[i]);
  return m;
}

/// Nodal rotated gradient (B_r, B_phi) = (-(1/r) d_phi u, d_r u).
inline Field2D rotated_gradient(const ScalarField2D& u, const RadialCalculus& calc) {
  Field2D w = Field2D::zeros(u.grid, PlanarDomain{u.grid.outer_radius, std::nullopt});
  const RealMatrix up = angular_derivative(u.values);
  w.bphi = calc.d1() * u.values;
  for (int i = 0; i < u.grid.n_r(); ++i) w.br.row(i) = -up.row(i) / u.grid.r[i];
  return w;
}

struct DivCurlResult {
  Field2D field;
  ScalarField2D stream;  // u
  GaugeConstants gauges;
  BoundaryPotentials potentials;
};

/// W = lambda B_mono + rot grad u + J H with Delta u = j, u = h_pm on the circles.
inline DivCurlResult solve_divcurl(const RealMatrix& j, const FluxData& f, const GaugeConstants& gauges,
                                   const PoissonSolver& solver) {
  const auto& grid = solver.grid();
  auto pots = boundary_potentials(f, grid.outer_radius);
  auto u = solver.solve(j, pots.h_minus, pots.h_plus);
  Field2D w = rotated_gradient(u, solver.radial().calculus());
  w += monopole_nodal(grid, pots.lambda);
  if (gauges.J != 0.0) w += gauges.J * harmonic_tangent_field(grid);
  return {w, u, GaugeConstants{pots.lambda, gauges.J}, pots};
}

/// Polar divergence and curl on interior nodes.
inline RealMatrix divergence(const Field2D& b, const RealMatrix& d1) {
  const auto& r = b.grid.r;
  RealMatrix rbr = b.br;
  for (int i = 0; i < b.grid.n_r(); ++i) rbr.row(i) *= r[i];
  RealMatrix out = d1 * rbr + angular_derivative(b.bphi);
  for (int i = 0; i < b.grid.n_r(); ++i) out.row(i) /= r[i];
  return out;
}

inline RealMatrix curl(const Field2D& b, const RealMatrix& d1) {
  const auto& r = b.grid.r;
  RealMatrix rbp = b.bphi;
  for (int i = 0; i < b.grid.n_r(); ++i) rbp.row(i) *= r[i];
  RealMatrix out = d1 * rbp - angular_derivative(b.br);
  for (int i = 0; i < b.grid.n_r(); ++i) out.row(i) /= r[i];
  return out;
}

inline double interior_max(const RealMatrix& m) {
  if (m.rows() <= 2) return 0.0;
  return m.middleRows(1, m.rows() - 2).cwiseAbs().maxCoeff();
}

/// Outward normal traces of a nodal field on the two circles.
inline std::pair<std::vector<double>, std::vector<double>> normal_traces(const Field2D& b) {
  const int np = b.grid.n_phi, nr = b.grid.n_r();
  std::vector<double> in(np), out(np);
  for (int j = 0; j < np; ++j) {
    in[j] = -b.br(0, j);
    out[j] = b.br(nr - 1, j);
  }
  return {in, out};
}

/// Component along the counterclockwise tangent of the inner circle.
inline std::vector<double> inner_tangential_trace(const Field2D& b) {
  std::vector<double> t(b.grid.n_phi);
  for (int j = 0; j < b.grid.n_phi; ++j) t[j] = b.bphi(0, j);
  return t;
}

inline FluxData flux_data_of(const Field2D& b, int K) {
  auto [in, out] = normal_traces(b);
  return {BoundaryFourier::from_samples(in, K), BoundaryFourier::from_samples(out, K)};
}

}  // namespace mhs
