#pragma once

// Grad-Rubin pieces on a mapped annulus U = gamma(Omega), discretized in
// reference coordinates with the pullback operator. Fields are stored in the
// frame rotated by the reference angle, as for the exact annulus.

#include "mhs/gradrubin2d.hpp"

namespace mhs {

/// Boundary data on U as functions of the reference angle: normal flux
/// densities per unit arclength and the tangential field on the inner curve.
struct MappedData {
  BoundaryFourier f_inner, f_outer, g;
};

class MappedAnnulus {
 public:
  MappedAnnulus(std::optional<DiffeoMap> map, double L, int n_r, int K, double gmres_tol = 1e-11, int n_phi = 0)
      : grid_(make_grid(AnnulusSpec{L}, n_r, K, RadialSpacing::uniform, n_phi)),
        dom_{L, std::move(map)},
        solver_(grid_, dom_, gmres_tol, 2000),
        calc_(grid_.r, RadialSpacing::uniform) {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    jinv_t_.resize(nr * np);
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < nr; ++i) jinv_t_[i * np + j] = dom_.polar_jacobian(grid_.r[i], grid_.phi(j)).inverse().transpose();
    for (int j = 0; j < np; ++j) {
      const double phi = grid_.phi(j);
      ds_in_.push_back(dom_.arclength_density(BoundaryId::inner, phi));
      ds_out_.push_back(dom_.arclength_density(BoundaryId::outer, phi));
    }
    phi_u_ = solver_.solve(RealMatrix::Zero(nr, np), BoundaryFourier::constant(K, 0.0), BoundaryFourier::constant(K, 1.0))
                 .values;
    const double lnL = std::log(L);
    const Field2D grad = gradient(phi_u_);
    reference_ = lnL * grad;
    monopole_ = (2.0 * lnL) * grad;
    harmonic_ = rotate(grad);
    phi_trace_ = trace_modes(solver_.inner_normal_derivative(phi_u_));
    mono_tangent_ = trace_modes(tangential_trace_inner(monopole_));
    const auto mn = normal_trace(monopole_, BoundaryId::inner);
    mono_flux_ = integrate(mn, ds_in_);
  }

  const TensorGrid2D& grid() const { return grid_; }
  const PlanarDomain& domain() const { return dom_; }
  const VariableCoeffSolver& solver() const { return solver_; }
  int K() const { return grid_.K; }

  /// ln L grad phi_U with phi_U harmonic, 0 on the inner and 1 on the outer curve;
  /// equals B0 on the exact annulus.
  const Field2D& reference_field() const { return reference_; }
  const Field2D& monopole_field() const { return monopole_; }
  const Field2D& harmonic_field() const { return harmonic_; }

  /// Physical gradient of a nodal scalar, in the rotated frame.
  Field2D gradient(const RealMatrix& v) const {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    const RealMatrix vr = calc_.d1() * v, vp = angular_derivative(v);
    Field2D g = Field2D::zeros(grid_, dom_);
    for (int j = 0; j < np; ++j) {
      const Mat2 ft = polar_frame(grid_.phi(j)).transpose();
      for (int i = 0; i < nr; ++i) {
        const Vec2 c = ft * (jinv_t_[i * np + j] * Vec2(vr(i, j), vp(i, j)));
        g.br(i, j) = c.x();
        g.bphi(i, j) = c.y();
      }
    }
    return g;
  }

  /// Quarter turn (x, y) -> (-y, x); commutes with the frame rotation.
  static Field2D rotate(Field2D f) {
    RealMatrix br = -f.bphi;
    f.bphi = f.br;
    f.br = br;
    return f;
  }

  std::vector<double> normal_trace(const Field2D& b, BoundaryId id) const {
    const int row = id == BoundaryId::inner ? 0 : grid_.n_r() - 1;
    std::vector<double> out(grid_.n_phi);
    for (int j = 0; j < grid_.n_phi; ++j) out[j] = b.cartesian(row, j).dot(dom_.normal(id, grid_.phi(j)));
    return out;
  }
  /// B . tau on the inner curve, tau the unit tangent along increasing angle.
  std::vector<double> tangential_trace_inner(const Field2D& b) const {
    std::vector<double> out(grid_.n_phi);
    for (int j = 0; j < grid_.n_phi; ++j) out[j] = b.cartesian(0, j).dot(dom_.tangent(BoundaryId::inner, grid_.phi(j)));
    return out;
  }

  /// Boundary data of a nodal field, for round trips.
  MappedData data_of(const Field2D& b) const {
    return {trace_modes(normal_trace(b, BoundaryId::inner)), trace_modes(normal_trace(b, BoundaryId::outer)),
            trace_modes(tangential_trace_inner(b))};
  }

  BoundaryFourier inner_arclength() const { return trace_modes(ds_in_); }

  /// Samples on the angular grid to modes |k| <= K.
  BoundaryFourier trace_modes(const std::vector<double>& s) const {
    return BoundaryFourier::from_samples(std::vector<Complex>(s.begin(), s.end()), grid_.K);
  }
  BoundaryFourier full_modes(const std::vector<double>& s) const {
    return BoundaryFourier::from_samples(std::vector<Complex>(s.begin(), s.end()), grid_.n_phi / 2 - 1);
  }

  /// A^U on a footpoint map: Dirichlet pullback solve of the transported mode,
  /// outward normal derivative on the inner curve, projected on |k| <= K.
  OperatorMatrix assemble(const FootpointMap& fp, int K, std::size_t fingerprint_value = 0) const {
    if (!fp.valid) throw PreconditionError("footpoint map is not valid");
    const int nr = grid_.n_r(), np = grid_.n_phi;
    OperatorMatrix A{K, ComplexMatrix::Zero(2 * K + 1, 2 * K + 1), fingerprint_value};
    const BoundaryFourier zero(K);
    for (int k = 0; k <= K; ++k) {
      RealMatrix jr(nr, np), ji(nr, np);
      for (int c = 0; c < np; ++c)
        for (int i = 0; i < nr; ++i) {
          jr(i, c) = std::cos(k * fp.theta(i, c));
          ji(i, c) = std::sin(k * fp.theta(i, c));
        }
      const auto tr = solver_.inner_normal_derivative(solver_.solve(jr, zero, zero).values);
      std::vector<Complex> tc(np);
      if (k == 0) {
        for (int c = 0; c < np; ++c) tc[c] = tr[c];
      } else {
        const auto ti = solver_.inner_normal_derivative(solver_.solve(ji, zero, zero).values);
        for (int c = 0; c < np; ++c) tc[c] = Complex(tr[c], ti[c]);
      }
      const auto col = BoundaryFourier::from_samples(tc, K);
      for (int m = -K; m <= K; ++m) {
        A.m(m + K, k + K) = col[m];
        if (k > 0) A.m(-m + K, -k + K) = std::conj(col[m]);
      }
    }
    return A;
  }

  /// A^U for a field whose characteristics are the images of rays, such as
  /// the pushforward of B0: the footpoint of (r, phi) is phi.
  OperatorMatrix radial_operator(int K) const {
    FootpointMap fp{grid_, RealMatrix(grid_.n_r(), grid_.n_phi), RealMatrix::Zero(grid_.n_r(), grid_.n_phi), true};
    for (int c = 0; c < grid_.n_phi; ++c) fp.theta.col(c).setConstant(grid_.phi(c));
    return assemble(fp, K);
  }

  struct Potentials {
    double lambda = 0.0;
    BoundaryFourier h_minus, h_plus;
  };

  /// lambda from the inner flux against the monopole's; h from the arclength
  /// weighted, lambda-corrected densities (W.n = d_phi u / |dy/dphi| on the inner
  /// curve and -d_phi u / |dy/dphi| on the outer one).
  Potentials potentials(const MappedData& d, double tol = 1e-9) const {
    const int np = grid_.n_phi;
    const auto fin = d.f_inner.real_samples(np), fout = d.f_outer.real_samples(np);
    const auto min = normal_trace(monopole_, BoundaryId::inner), mout = normal_trace(monopole_, BoundaryId::outer);
    Potentials p;
    p.lambda = integrate(fin, ds_in_) / mono_flux_;
    std::vector<double> qin(np), qout(np);
    for (int j = 0; j < np; ++j) {
      qin[j] = ds_in_[j] * (fin[j] - p.lambda * min[j]);
      qout[j] = -ds_out_[j] * (fout[j] - p.lambda * mout[j]);
    }
    const double total = integrate(fin, ds_in_) + integrate(fout, ds_out_);
    const double scale = std::max({1.0, d.f_inner.norm_inf(), d.f_outer.norm_inf()});
    if (std::abs(total) > tol * kTwoPi * scale)
      throw CompatibilityError("total boundary flux does not vanish (" + std::to_string(total) + ")");
    auto bin = full_modes(qin), bout = full_modes(qout);
    bin[0] = 0.0;
    bout[0] = 0.0;
    p.h_minus = bin.antiderivative();
    p.h_plus = bout.antiderivative();
    return p;
  }

  CurrentEquationData equation_data(const MappedData& d, const Potentials& p) const {
    const int np = grid_.n_phi;
    const auto v = solver_.solve(RealMatrix::Zero(grid_.n_r(), np), p.h_minus, p.h_plus).values;
    CurrentEquationData e;
    e.g = d.g.resized(grid_.K);
    e.lambda = p.lambda;
    e.mono_tangent = mono_tangent_;
    e.v_trace = trace_modes(solver_.inner_normal_derivative(v));
    e.phi_trace = phi_trace_;
    e.f_inner = d.f_inner.resized(grid_.K);
    e.arclength = inner_arclength();
    return e;
  }

  /// W = lambda M + grad-perp u + J grad-perp phi_U with Delta u = j, u = h on the boundary.
  Field2D divcurl(const RealMatrix& j, const Potentials& p, double J) const {
    const auto u = solver_.solve(j, p.h_minus, p.h_plus).values;
    return p.lambda * monopole_ + rotate(gradient(u)) + J * harmonic_;
  }

 private:
  double integrate(const std::vector<double>& f, const std::vector<double>& ds) const {
    double s = 0.0;
    for (size_t j = 0; j < f.size(); ++j) s += f[j] * ds[j];
    return s * grid_.dphi();
  }

  TensorGrid2D grid_;
  PlanarDomain dom_;
  VariableCoeffSolver solver_;
  RadialCalculus calc_;
  std::vector<Mat2> jinv_t_;
  std::vector<double> ds_in_, ds_out_;
  RealMatrix phi_u_;
  Field2D reference_, monopole_, harmonic_;
  BoundaryFourier phi_trace_, mono_tangent_;
  double mono_flux_ = 0.0;
};

/// Discrete reference data with an inner perturbation: f_- = B~0.n + delta (cos phi - c)
/// with c the arclength mean of cos phi, g = B~0.tau + delta sin phi, and f_+ = B~0.n
/// shifted by a constant so the discrete total flux vanishes.
inline MappedData perturbed_mapped_data(const MappedAnnulus& U, double delta) {
  auto d = U.data_of(U.reference_field());
  const int np = U.grid().n_phi, K = U.K();
  const auto& dom = U.domain();
  double cs = 0.0, len_in = 0.0, len_out = 0.0, total = 0.0;
  const auto fi = d.f_inner.real_samples(np), fo = d.f_outer.real_samples(np);
  for (int j = 0; j < np; ++j) {
    const double phi = U.grid().phi(j);
    const double si = dom.arclength_density(BoundaryId::inner, phi), so = dom.arclength_density(BoundaryId::outer, phi);
    cs += std::cos(phi) * si;
    len_in += si;
    len_out += so;
    total += fi[j] * si + fo[j] * so;
  }
  const double c = cs / len_in;
  BoundaryFourier bump(K), wave(K);
  bump[0] = -c;
  bump[1] = bump[-1] = 0.5;
  wave[1] = Complex(0.0, -0.5);
  wave[-1] = Complex(0.0, 0.5);
  d.f_inner = d.f_inner + delta * bump;
  d.g = d.g + delta * wave;
  d.f_outer[0] -= total / len_out;
  return d;
}

struct MappedComparison {
  double epsilon = 0.0;
  double difference = 0.0;  // max |A^U - A^Omega|
  double constant = 0.0;    // difference / epsilon
};

/// Max-norm distance between A^U[gamma_* B0] and the exact-annulus operator on
/// the same discretization, over a list of bump amplitudes.
inline std::vector<MappedComparison> mapped_operator_comparison(const std::vector<double>& epsilons, double L = 2.0,
                                                                int K = 8, int n_r = 64) {
  const auto ref = MappedAnnulus(std::nullopt, L, n_r, K).radial_operator(K);
  std::vector<MappedComparison> out;
  for (double eps : epsilons) {
    if (!(eps > 0)) throw PreconditionError("bump amplitude must be positive");
    const auto a = MappedAnnulus(radial_bump_map(L, eps), L, n_r, K).radial_operator(K);
    const double d = (a.m - ref.m).cwiseAbs().maxCoeff();
    out.push_back({eps, d, d / eps});
  }
  return out;
}

struct MappedIterationRecord {
  int iteration = 0;
  double increment = 0.0;
  double contraction = 0.0;
  double lambda = 0.0, J = 0.0, condition = 0.0;
  double normal_error = 0.0;      // max |W.n - f| on both curves
  double tangential_error = 0.0;  // max |W.tau - g| on the inner curve, modes |k| <= K
};

struct MappedResult {
  Field2D field;
  RealMatrix current;
  std::vector<MappedIterationRecord> records;
  bool converged = false;
  std::string message;
};

/// Picard iteration on U from the reference field.
inline MappedResult solve_mapped_fixed_point(const MappedAnnulus& U, const MappedData& data, const SolverConfig& cfg) {
  cfg.validate();
  const auto pots = U.potentials(data);
  const auto eq = U.equation_data(data, pots);
  const int K = U.K();
  Field2D b = U.reference_field();
  MappedResult out{b, RealMatrix::Zero(U.grid().n_r(), U.grid().n_phi), {}, false, ""};
  double prev = 0.0;
  int bad = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto adm = check_field_admissible(b);
    if (!adm.pass) throw OrientationError("field not admissible on the mapped domain");
    FieldInterpolant interp(b);
    const auto fp = footpoints(interp, U.grid(), cfg.trace);
    const auto A = U.assemble(fp, K, fingerprint(b));
    const auto sol = solve_current_equation(A, eq, cfg.mode, cfg.fixed_J);
    const RealMatrix j = transport_scalar(sol.j0, fp).values;
    Field2D next = U.divcurl(j, pots, sol.J);
    if (cfg.damping < 1.0) next = cfg.damping * next + (1.0 - cfg.damping) * b;
    MappedIterationRecord rec;
    rec.iteration = it;
    rec.increment = max_difference(next, b);
    rec.contraction = it > 1 && prev > 0 ? rec.increment / prev : 0.0;
    rec.lambda = sol.lambda;
    rec.J = sol.J;
    rec.condition = sol.condition;
    const auto got = U.data_of(next);
    rec.normal_error = std::max((got.f_inner - data.f_inner.resized(K)).norm_inf(),
                                (got.f_outer - data.f_outer.resized(K)).norm_inf());
    rec.tangential_error = (got.g - data.g.resized(K)).norm_inf();
    out.records.push_back(rec);
    b = next;
    out.field = next;
    out.current = j;
    if (rec.increment < cfg.tol_fixed_point) {
      out.converged = true;
      out.message = "converged";
      return out;
    }
    if (it > 1 && prev > 100.0 * cfg.tol_fixed_point && rec.contraction >= 1.0) {
      if (++bad >= 3) throw ConvergenceError("non-contraction on the mapped domain");
    } else {
      bad = 0;
    }
    prev = rec.increment;
  }
  out.message = "maximum number of iterations reached";
  return out;
}

}  // namespace mhs
