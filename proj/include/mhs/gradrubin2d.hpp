#pragma once

// Grad-Rubin fixed point B -> T[B] on the annulus: transport, boundary
// integral equation for j0, div-curl reconstruction; pressure and residuals.

#include <optional>

#include "mhs/current2d.hpp"

namespace mhs {

struct SolverConfig {
  int K = 16;
  int N_r = 128;
  double outer_radius = 2.0;
  RadialSpacing spacing = RadialSpacing::chebyshev;
  double tol_fixed_point = 1e-10;
  double tol_residual = 1e-8;
  int max_iter = 50;
  double damping = 1.0;
  double perturbation_size = 0.05;  // bound on |f - B0.n| + |g|
  JMode mode = JMode::pressure_J;
  double fixed_J = 0.0;  // used in fixed_J mode
  bool reuse_initial_operator = false;
  TraceOptions trace;

  void validate() const {
    AnnulusSpec{outer_radius}.validate();
    if (K < 1) throw PreconditionError("K must be at least 1");
    if (N_r < 16) throw PreconditionError("N_r must be at least 16");
    if (!(tol_fixed_point > 0) || !(tol_residual > 0)) throw PreconditionError("tolerances must be positive");
    if (max_iter < 1) throw PreconditionError("max_iter must be at least 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw PreconditionError("damping must lie in (0, 1]");
    if (!(perturbation_size >= 0.0)) throw PreconditionError("perturbation size must be nonnegative");
  }
};

/// Grad-Rubin boundary data: flux densities on both circles and the
/// tangential field on the inner circle.
struct GradRubinData {
  FluxData f;
  BoundaryFourier g;
};

/// Data of B0 = x/|x|^2 plus perturbations.
inline GradRubinData reference_data(int K, double L) {
  return {{BoundaryFourier::constant(K, -1.0), BoundaryFourier::constant(K, 1.0 / L)}, BoundaryFourier(K)};
}

struct PressureField {
  TensorGrid2D grid;
  RealMatrix values;
  double loop_defect = 0.0;
};

/// p with dp/dr = -j W_phi and (1/r) dp/dphi = j W_r, integrated radially from
/// r = 1 and angularly along r = 1 from the anchor (1, 0) where p = 0. The loop
/// defect is the circulation of j W_r around the inner circle.
inline PressureField reconstruct_pressure(const RealMatrix& j, const Field2D& w, const RadialCalculus& calc) {
  const auto& grid = w.grid;
  const int nr = grid.n_r(), np = grid.n_phi;
  std::vector<double> q(np);
  for (int c = 0; c < np; ++c) q[c] = j(0, c) * w.br(0, c);
  AngularTransform t(np);
  auto coef = t.forward(q);
  PressureField p{grid, RealMatrix::Zero(nr, np), std::abs(kTwoPi * coef[0].real())};
  coef[0] = 0.0;
  for (int slot = 1; slot < np; ++slot) {
    const int m = t.mode_of(slot);
    coef[slot] = (2 * std::abs(m) == np) ? Complex(0.0) : coef[slot] / Complex(0.0, m);
  }
  auto p1 = t.inverse(coef);
  const RealMatrix radial = calc.integrate(RealMatrix(-j.cwiseProduct(w.bphi)));
  for (int c = 0; c < np; ++c) {
    const double base = p1[c].real() - p1[0].real();
    for (int i = 0; i < nr; ++i) p.values(i, c) = base + radial(i, c);
  }
  return p;
}

struct ResidualReport {
  double div = 0.0;
  double curl_minus_j = 0.0;
  double force = 0.0;
  double normal_inner = 0.0;
  double normal_outer = 0.0;
  double tangential_inner = 0.0;
  int worst_force_i = 0, worst_force_j = 0;
};

inline ResidualReport mhs_residuals(const Field2D& b, const RealMatrix& j, const RealMatrix& p,
                                    const RadialCalculus& calc, const GradRubinData* data = nullptr) {
  ResidualReport rep;
  const auto& d1 = calc.d1();
  const int nr = b.grid.n_r(), np = b.grid.n_phi;
  rep.div = interior_max(divergence(b, d1));
  const RealMatrix w = curl(b, d1);
  rep.curl_minus_j = interior_max(w - j);
  const RealMatrix pr = d1 * p, pp = angular_derivative(p);
  for (int i = 1; i < nr - 1; ++i)
    for (int c = 0; c < np; ++c) {
      const double fr = -w(i, c) * b.bphi(i, c) - pr(i, c);
      const double fp = w(i, c) * b.br(i, c) - pp(i, c) / b.grid.r[i];
      const double e = std::hypot(fr, fp);
      if (e > rep.force) {
        rep.force = e;
        rep.worst_force_i = i;
        rep.worst_force_j = c;
      }
    }
  if (data) {
    const auto [in, out] = normal_traces(b);
    const auto tan = inner_tangential_trace(b);
    for (int c = 0; c < np; ++c) {
      const double phi = b.grid.phi(c);
      rep.normal_inner = std::max(rep.normal_inner, std::abs(in[c] - data->f.inner.eval_real(phi)));
      rep.normal_outer = std::max(rep.normal_outer, std::abs(out[c] - data->f.outer.eval_real(phi)));
      rep.tangential_inner = std::max(rep.tangential_inner, std::abs(tan[c] - data->g.eval_real(phi)));
    }
  }
  return rep;
}

struct IterationRecord {
  int iteration = 0;
  double increment = 0.0;
  double contraction = 0.0;
  double lambda = 0.0;
  double J = 0.0;
  double condition = 0.0;
  double equation_residual = 0.0;
  ResidualReport residuals;
  double loop_defect = 0.0;
};

struct IterationReport {
  std::vector<IterationRecord> records;
  bool converged = false;
  std::string message;
  double noise_floor = 0.0;  // increments below this are roundoff and excluded from ratios
  double max_contraction() const {
    double m = 0.0;
    for (size_t k = 1; k < records.size(); ++k)
      if (records[k - 1].increment > noise_floor) m = std::max(m, records[k].contraction);
    return m;
  }
};

struct StepResult {
  Field2D field;
  RealMatrix current;  // transported j on the grid
  CurrentEquationSolution equation;
  OperatorMatrix A;
};

/// Domain-fixed pieces of the step that depend only on the data.
class GradRubinContext {
 public:
  GradRubinContext(const SolverConfig& cfg, GradRubinData data)
      : cfg_(cfg),
        data_(std::move(data)),
        grid_(make_grid(AnnulusSpec{cfg.outer_radius}, cfg.N_r, cfg.K, cfg.spacing)),
        solver_(grid_) {
    cfg_.validate();
    pots_ = boundary_potentials(data_.f, cfg.outer_radius);
    auto v = harmonic_extension(pots_.h_minus, pots_.h_plus, grid_);
    v_trace_ = solver_.neumann_trace_inner(v.values, cfg.K);
    phi_trace_ = BoundaryFourier::constant(cfg.K, -1.0 / std::log(cfg.outer_radius));
  }

  const SolverConfig& config() const { return cfg_; }
  const GradRubinData& data() const { return data_; }
  const TensorGrid2D& grid() const { return grid_; }
  const PoissonSolver& solver() const { return solver_; }
  const BoundaryPotentials& potentials() const { return pots_; }

  Field2D initial_field() const { return sample_field(SpiralField{}, grid_); }

  CurrentEquationData equation_data() const {
    CurrentEquationData d;
    d.g = data_.g;
    d.lambda = pots_.lambda;
    d.mono_tangent = BoundaryFourier(cfg_.K);
    d.v_trace = v_trace_;
    d.phi_trace = phi_trace_;
    d.f_inner = data_.f.inner;
    d.arclength = BoundaryFourier::constant(0, 1.0);
    return d;
  }

  StepResult step(const Field2D& b, std::optional<double> fixed_J = std::nullopt,
                  const OperatorMatrix* reuse = nullptr) const {
    auto adm = check_field_admissible(b);
    if (!adm.pass)
      throw OrientationError("field not admissible: min|B| = " + std::to_string(adm.min_norm) + " at node (" +
                             std::to_string(adm.min_norm_i) + ", " + std::to_string(adm.min_norm_j) +
                             "), min inflow " + std::to_string(adm.min_inflow) + ", min outflow " +
                             std::to_string(adm.min_outflow));
    FieldInterpolant interp(b);
    auto fp = footpoints(interp, grid_, cfg_.trace);
    OperatorMatrix A = reuse ? *reuse : assemble_A(fp, cfg_.K, solver_, fingerprint(b));
    const JMode mode = fixed_J ? JMode::fixed_J : cfg_.mode;
    auto sol = solve_current_equation(A, equation_data(), mode, fixed_J.value_or(cfg_.fixed_J));
    RealMatrix j = transport_scalar(sol.j0, fp).values;
    auto dc = solve_divcurl(j, data_.f, GaugeConstants{pots_.lambda, sol.J}, solver_);
    Field2D next = dc.field;
    if (cfg_.damping < 1.0) next = cfg_.damping * next + (1.0 - cfg_.damping) * b;
    return {next, j, sol, A};
  }

 private:
  SolverConfig cfg_;
  GradRubinData data_;
  TensorGrid2D grid_;
  PoissonSolver solver_;
  BoundaryPotentials pots_;
  BoundaryFourier v_trace_, phi_trace_;
};

inline StepResult grad_rubin_step(const Field2D& b, const GradRubinData& data, const SolverConfig& cfg) {
  return GradRubinContext(cfg, data).step(b);
}

struct FixedPointResult {
  Field2D field;
  RealMatrix current;
  PressureField pressure;
  IterationReport report;
  CurrentEquationSolution equation;
};

/// Picard iteration from B0 (or a given start) until the nodal increment drops
/// below tol_fixed_point; aborts after three consecutive non-contracting steps.
inline FixedPointResult solve_fixed_point(const GradRubinData& data, const SolverConfig& cfg,
                                          std::optional<Field2D> start = std::nullopt) {
  GradRubinContext ctx(cfg, data);
  const auto& grid = ctx.grid();
  {
    // smallness of the data relative to B0's traces
    const auto ref = reference_data(cfg.K, cfg.outer_radius);
    const double size = (data.f.inner - ref.f.inner).norm_inf() * 2 + (data.f.outer - ref.f.outer).norm_inf() * 2 +
                        data.g.norm_inf() * 2;
    if (size > cfg.perturbation_size + 1e-14)
      throw PreconditionError("data perturbation " + std::to_string(size) + " exceeds the configured bound " +
                              std::to_string(cfg.perturbation_size));
  }
  Field2D b = start ? *start : ctx.initial_field();
  FixedPointResult out{b, RealMatrix::Zero(grid.n_r(), grid.n_phi), {}, {}, {}};
  std::optional<OperatorMatrix> A0;
  double prev_inc = 0.0;
  out.report.noise_floor = 100.0 * cfg.tol_fixed_point;
  int non_contracting = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    StepResult s = ctx.step(b, std::nullopt, A0 ? &*A0 : nullptr);
    if (cfg.reuse_initial_operator && !A0) A0 = s.A;
    IterationRecord rec;
    rec.iteration = it;
    rec.increment = max_difference(s.field, b);
    rec.contraction = (it > 1 && prev_inc > 0) ? rec.increment / prev_inc : 0.0;
    rec.lambda = s.equation.lambda;
    rec.J = s.equation.J;
    rec.condition = s.equation.condition;
    rec.equation_residual = s.equation.residual;
    auto p = reconstruct_pressure(s.current, s.field, ctx.solver().radial().calculus());
    rec.residuals = mhs_residuals(s.field, s.current, p.values, ctx.solver().radial().calculus(), &data);
    rec.loop_defect = p.loop_defect;
    out.report.records.push_back(rec);
    out.field = s.field;
    out.current = s.current;
    out.pressure = p;
    out.equation = s.equation;
    b = s.field;
    if (rec.increment < cfg.tol_fixed_point) {
      out.report.converged = true;
      out.report.message = "converged";
      return out;
    }
    if (it > 1 && prev_inc > out.report.noise_floor && rec.contraction >= 1.0) {
      if (++non_contracting >= 3) {
        out.report.message = "non-contraction: increment ratio >= 1 for 3 consecutive steps";
        throw ConvergenceError(out.report.message);
      }
    } else {
      non_contracting = 0;
    }
    prev_inc = rec.increment;
  }
  out.report.message = "maximum number of iterations reached";
  return out;
}

}  // namespace mhs
