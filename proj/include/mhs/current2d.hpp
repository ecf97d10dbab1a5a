#pragma once

// The boundary operator A[B]: inflow current data j0 -> outward normal
// derivative on the inner circle of the Dirichlet Poisson solve of the
// transported current. Closed-form multipliers for B0, the current equation,
// and the pressure constant J.

#include <Eigen/SVD>

#include <cstring>
#include <functional>

#include "mhs/divcurl2d.hpp"

namespace mhs {

struct OperatorMatrix {
  int K = 0;
  ComplexMatrix m;  // (2K+1) x (2K+1), row = output mode + K, column = input mode + K
  std::size_t fingerprint = 0;

  Complex entry(int k_out, int k_in) const { return m(k_out + K, k_in + K); }
  BoundaryFourier apply(const BoundaryFourier& j0) const {
    return BoundaryFourier::from_vector(m * j0.resized(K).vector());
  }
  double diagonal_mass() const { return m.diagonal().cwiseAbs().sum(); }
  double off_diagonal_mass() const { return m.cwiseAbs().sum() - diagonal_mass(); }
  double condition_number() const {
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const auto& s = svd.singularValues();
    return s[s.size() - 1] > 0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
  }
};

/// Hash of nodal data, used to tag operators with the field they belong to.
inline std::size_t fingerprint(const RealMatrix& a, const RealMatrix& b) {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](const RealMatrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      std::size_t v;
      const double d = m.data()[i];
      std::memcpy(&v, &d, sizeof v);
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
  };
  mix(a);
  mix(b);
  return h;
}

inline std::size_t fingerprint(const Field2D& f) { return fingerprint(f.br, f.bphi); }

/// d/drho at rho = 1 of the solution of r^2 u'' + r u' - k^2 u = r^2 e^{ik phi},
/// u = 0 at r = 1 and r = L: the multiplier of A[B0] on mode k in the radial
/// derivative convention (the operator matrix stores kInnerRadialSign times it).
inline double closed_form_multiplier(int k, double L) {
  AnnulusSpec{L}.validate();
  k = std::abs(k);
  const double lnL = std::log(L);
  if (k == 0) return (1.0 - L * L + 2.0 * lnL) / (4.0 * lnL);
  if (k == 2) {
    const double d = 1.0 / (L * L) - L * L;
    return (4.0 * L * L * lnL + d) / (4.0 * d);
  }
  // scaled by L^{-k} to stay finite for large k
  const double lk = std::pow(L, -k);
  const double num = (k - 2.0) * lk * lk + (k + 2.0) - 2.0 * k * L * L * lk;
  const double den = (4.0 - double(k) * k) * (1.0 - lk * lk);
  return num / den;
}

/// Assembles A on modes |k| <= K from a footpoint map; columns +-k share one
/// transport via conjugation (B real).
inline OperatorMatrix assemble_A(const FootpointMap& fp, int K, const PoissonSolver& solver,
                                 std::size_t field_fingerprint = 0) {
  if (!fp.valid) throw PreconditionError("footpoint map is not valid");
  const auto& grid = solver.grid();
  if (fp.theta.rows() != grid.n_r() || fp.theta.cols() != grid.n_phi)
    throw PreconditionError("footpoint map does not match the solver grid");
  if (2 * K + 1 > grid.n_phi) throw PreconditionError("assemble_A: K too large for the angular grid");
  const int nr = grid.n_r(), np = grid.n_phi;
  AngularTransform t(np);
  OperatorMatrix A{K, ComplexMatrix::Zero(2 * K + 1, 2 * K + 1), field_fingerprint};
  // trace functionals per slot, interior rows only (zero Dirichlet data)
  std::vector<RealVector> tf(np);
  for (int slot = 0; slot < np; ++slot) {
    tf[slot] = solver.radial().inner_trace_functional(t.mode_of(slot));
    tf[slot][0] = 0.0;
    tf[slot][nr - 1] = 0.0;
  }
  parallel_for(K + 1, [&](std::ptrdiff_t kk) {
    const int k = static_cast<int>(kk);
    ComplexMatrix j(nr, np);
    for (int c = 0; c < np; ++c)
      for (int i = 0; i < nr; ++i) j(i, c) = std::polar(1.0, k * fp.theta(i, c));
    const ComplexMatrix modes = rows_forward(j);
    for (int m = -K; m <= K; ++m) {
      const int slot = t.slot_of(m);
      const Complex tr = kInnerRadialSign * tf[slot].dot(modes.col(slot).real()) +
                         Complex(0.0, kInnerRadialSign * tf[slot].dot(modes.col(slot).imag()));
      A.m(m + K, k + K) = tr;
      if (k > 0) A.m(-m + K, -k + K) = std::conj(tr);
    }
  });
  return A;
}

template <VelocityField V>
OperatorMatrix assemble_A(const V& field, int K, const PoissonSolver& solver, const TraceOptions& opt = {}) {
  return assemble_A(footpoints(field, solver.grid(), opt), K, solver);
}

/// Diagonal operator of B0 from the closed forms (outward-normal convention).
inline OperatorMatrix closed_form_operator(int K, double L) {
  OperatorMatrix A{K, ComplexMatrix::Zero(2 * K + 1, 2 * K + 1), 0};
  for (int k = -K; k <= K; ++k) A.m(k + K, k + K) = kInnerRadialSign * closed_form_multiplier(k, L);
  return A;
}

enum class JMode { fixed_J, pressure_J };

struct CurrentEquationData {
  BoundaryFourier g;            // tangential field on the inner circle
  double lambda = 0.0;          // monopole strength
  BoundaryFourier mono_tangent; // B_mono tangential trace (zero on the exact circle)
  BoundaryFourier v_trace;      // outward normal derivative of the harmonic extension of h
  BoundaryFourier phi_trace;    // outward normal derivative of the Dirichlet harmonic 0/1
  BoundaryFourier f_inner;      // inner normal flux density (per unit arclength)
  BoundaryFourier arclength;    // |dy/dphi| on the inner curve (1 on the exact circle)
};

struct CurrentEquationSolution {
  BoundaryFourier j0;
  double J = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  double condition = 0.0;
  double denominator = 0.0;  // integral of f A^{-1}(phi_trace)
};

namespace detail {
/// integral over the inner curve of a * b with arclength density w, from modes.
inline Complex boundary_product(const BoundaryFourier& a, const BoundaryFourier& b, const BoundaryFourier& w) {
  const int n = 4 * std::max({a.K(), b.K(), w.K(), 1}) + 4;
  const auto av = a.samples(n), bv = b.samples(n), wv = w.samples(n);
  Complex s = 0.0;
  for (int j = 0; j < n; ++j) s += av[j] * bv[j] * wv[j];
  return s * kTwoPi / double(n);
}
}  // namespace detail

/// J such that the circulation of j0 f around the inner curve vanishes.
inline double compute_J(const BoundaryFourier& a, const BoundaryFourier& b, const BoundaryFourier& f,
                        const BoundaryFourier& arclength, double* denominator = nullptr) {
  const double num = detail::boundary_product(f, a, arclength).real();
  const double den = detail::boundary_product(f, b, arclength).real();
  if (denominator) *denominator = den;
  if (std::abs(den) < 1e-10 * std::max(1.0, f.norm_inf()))
    throw DegeneracyError("integral of f A^{-1}(n.grad phi) vanishes; pressure constant undefined");
  return num / den;
}

/// Solves g = lambda B_mono,t + s (v_trace + J phi_trace + A j0), s = kInnerRadialSign,
/// for j0 (and J in pressure mode).
inline CurrentEquationSolution solve_current_equation(const OperatorMatrix& A, const CurrentEquationData& d,
                                                      JMode mode, double J = 0.0, double max_condition = 1e12) {
  const int K = A.K;
  CurrentEquationSolution out;
  out.lambda = d.lambda;
  out.condition = A.condition_number();
  if (!(out.condition < max_condition))
    throw DegeneracyError("operator A is singular or ill-conditioned (condition " + std::to_string(out.condition) + ")");
  Eigen::PartialPivLU<ComplexMatrix> lu(A.m);
  BoundaryFourier rhs = Complex(kInnerRadialSign) * (d.g.resized(K) - Complex(d.lambda) * d.mono_tangent.resized(K)) -
                        d.v_trace.resized(K);
  const BoundaryFourier a = BoundaryFourier::from_vector(lu.solve(rhs.vector()));
  const BoundaryFourier b = BoundaryFourier::from_vector(lu.solve(d.phi_trace.resized(K).vector()));
  if (mode == JMode::pressure_J) {
    J = compute_J(a, b, d.f_inner, d.arclength.K() == 0 && d.arclength[0] == Complex(0.0) ? BoundaryFourier::constant(0, 1.0)
                                                                                            : d.arclength,
                  &out.denominator);
  }
  out.J = J;
  out.j0 = a - Complex(J) * b;
  const BoundaryFourier full_rhs = rhs - Complex(J) * d.phi_trace.resized(K);
  out.residual = (A.m * out.j0.vector() - full_rhs.vector()).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace mhs
