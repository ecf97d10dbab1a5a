#pragma once

// Acceptance checks shared by the CLI verify suites and the acceptance runner.
// Each check carries its measured value, the pinned threshold and the outcome.

#include <chrono>

#include "mhs/mapped2d.hpp"
#include "mhs/shell3d.hpp"
#include "mhs/verify.hpp"

namespace mhs {

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool upper = true;  // pass iff value < threshold (upper) or value > threshold
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> measurements;  // reported, not judged
  bool pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  void below(std::string name, double v, double t) { checks.push_back({std::move(name), v, t, true, v < t}); }
  void above(std::string name, double v, double t) { checks.push_back({std::move(name), v, t, false, v > t}); }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline double observed_order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace detail

struct Multipliers2DOptions {
  double L = 2.0;
  int K = 16;
  int N_r = 256;
  double tol_offdiag = 1e-8, tol_entry = 1e-6, max_seconds = 30.0;
};

/// A[B0] against the closed-form multipliers, all modes |k| <= K.
inline SuiteReport suite_multipliers2d(const Multipliers2DOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"multipliers2d", {}, 0.0, {}};
  PoissonSolver solver(make_grid(AnnulusSpec{o.L}, o.N_r, o.K, RadialSpacing::chebyshev));
  const auto A = assemble_A(AnalyticVelocity{SpiralField{}}, o.K, solver);
  const auto ref = closed_form_operator(o.K, o.L);
  double worst = 0.0;
  for (int k = -o.K; k <= o.K; ++k)
    worst = std::max(worst, std::abs(A.entry(k, k) - ref.entry(k, k)) / std::abs(ref.entry(k, k)));
  rep.below("relative off-diagonal mass", A.off_diagonal_mass(), o.tol_offdiag);
  rep.below("max relative diagonal error", worst, o.tol_entry);
  for (int k : {0, 2, -2})
    rep.below("relative error k=" + std::to_string(k), std::abs(A.entry(k, k) - ref.entry(k, k)) / std::abs(ref.entry(k, k)),
              o.tol_entry);
  rep.seconds = sw.seconds();
  rep.below("runtime [s]", rep.seconds, o.max_seconds);
  return rep;
}

struct Symbol2DOptions {
  double L = 2.0;
  int k_max = 64;
  int N_r = 256;
  double beta = 0.5;
  double tol_reference = 0.02, tol_phase = 0.03, max_seconds = 120.0;
};

/// Large-mode behaviour of A: |k| m_k for B0 and the phase for a spiral field,
/// both measured at k = k_max.
inline SuiteReport suite_symbol2d(const Symbol2DOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"symbol2d", {}, 0.0, {}};
  if (o.k_max < 1) throw PreconditionError("k_max must be positive");
  PoissonSolver solver(make_grid(AnnulusSpec{o.L}, o.N_r, o.k_max, RadialSpacing::chebyshev));
  {
    const auto A = assemble_A(AnalyticVelocity{SpiralField{}}, o.k_max, solver);
    const auto s = numeric_symbol2d(A, probe_inner(SpiralField{}), {o.k_max});
    rep.below("B0: |k m_k + 1| at k=" + std::to_string(o.k_max), std::abs(o.k_max * s[0].measured.real() + 1.0),
              o.tol_reference);
  }
  {
    const SpiralField spiral{o.beta, 1.0};
    const auto A = assemble_A(AnalyticVelocity{spiral}, o.k_max, solver);
    const auto s = numeric_symbol2d(A, probe_inner(spiral), {o.k_max});
    rep.below("spiral: relative phase error at k=" + std::to_string(o.k_max), s[0].phase_error(), o.tol_phase);
  }
  rep.seconds = sw.seconds();
  rep.below("runtime [s]", rep.seconds, o.max_seconds);
  return rep;
}

struct FixedPointOptions {
  SolverConfig solver{};
  double delta = 0.01;
  double tol_contraction = 0.5, tol_residual = 1e-8, max_seconds = 120.0;
};

/// Data f = B0.n + delta cos(theta) on the inner circle, g = delta sin(theta).
inline GradRubinData single_mode_data(int K, double L, double delta) {
  auto d = reference_data(K, L);
  d.f.inner = d.f.inner + BoundaryFourier::trig(K, 1, delta, 0.0);
  d.g = BoundaryFourier::trig(K, 1, 0.0, delta);
  return d;
}

inline SuiteReport suite_fixed_point(FixedPointOptions o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"fixed_point", {}, 0.0, {}};
  auto& cfg = o.solver;
  const auto res = solve_fixed_point(single_mode_data(cfg.K, cfg.outer_radius, o.delta), cfg);
  rep.above("converged", res.report.converged ? 1.0 : 0.0, 0.5);
  const auto& last = res.report.records.back();
  const auto& r = last.residuals;
  rep.below("contraction factor", res.report.max_contraction(), o.tol_contraction);
  rep.below("div B", r.div, o.tol_residual);
  rep.below("curl B - j", r.curl_minus_j, o.tol_residual);
  rep.below("(curl B) x B - grad p", r.force, o.tol_residual);
  rep.below("B.n - f inner", r.normal_inner, o.tol_residual);
  rep.below("B.n - f outer", r.normal_outer, o.tol_residual);
  rep.below("B.tau - g inner", r.tangential_inner, o.tol_residual);
  rep.below("pressure loop defect", last.loop_defect, o.tol_residual);
  rep.seconds = sw.seconds();
  rep.below("runtime [s]", rep.seconds, o.max_seconds);
  return rep;
}

/// T[B0] = B0 for the unperturbed data.
inline SuiteReport suite_trivial_fixed_point(SolverConfig cfg = {}, double tol = 1e-9) {
  detail::Stopwatch sw;
  SuiteReport rep{"trivial_fixed_point", {}, 0.0, {}};
  const auto data = reference_data(cfg.K, cfg.outer_radius);
  GradRubinContext ctx(cfg, data);
  const auto b0 = ctx.initial_field();
  rep.below("|T[B0] - B0|", max_difference(ctx.step(b0).field, b0), tol);
  cfg.tol_fixed_point = tol;
  const auto res = solve_fixed_point(data, cfg);
  rep.below("iterations", static_cast<double>(res.report.records.size()), 1.5);
  rep.seconds = sw.seconds();
  return rep;
}

inline SuiteReport suite_jacobian(int n_samples = 100, double L = 2.0, double tol = 1e-7) {
  detail::Stopwatch sw;
  SuiteReport rep{"jacobian", {}, 0.0, {}};
  rep.below("B0: max |J - B.n|", flow_jacobian_check(SpiralField{}, L, n_samples), tol);
  rep.below("spiral: max |J - B.n|", flow_jacobian_check(SpiralField{0.5}, L, n_samples), tol);
  rep.seconds = sw.seconds();
  return rep;
}

struct Multipliers3DOptions {
  int l_max = 16;
  std::vector<double> radii{1.5, 2.0, 5.0};
  int n_r = 128;
  double L_lo = 1.05, L_hi = 10.0;
  int n_scan = 50;
  double tol = 1e-6, max_seconds = 60.0;
};

/// Closed-form shell multipliers against the radial BVP, and a scan for zeros.
inline SuiteReport suite_multipliers3d(const Multipliers3DOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"multipliers3d", {}, 0.0, {}};
  const RadialSources src{nullptr, nullptr, [](double r) { return Complex(r); }};
  double worst = 0.0, worst3 = 0.0;
  for (double L : o.radii)
    for (int l = 1; l <= o.l_max; ++l) {
      const auto p = solve_radial_bvp(l, src, L, o.n_r);
      const double e = std::abs(p.b1[0].real() / multiplier3d(l, L) - 1.0);
      worst = std::max(worst, e);
      if (l == 3) worst3 = std::max(worst3, e);
    }
  rep.below("max relative error vs BVP", worst, o.tol);
  rep.below("max relative error l=3", worst3, o.tol);
  // no zero: a sign change between samples or a tiny value would reveal one
  double smallest = std::numeric_limits<double>::infinity();
  int sign_changes = 0;
  for (int l = 1; l <= o.l_max; ++l) {
    double prev = 0.0;
    for (int i = 0; i < o.n_scan; ++i) {
      const double L = o.L_lo * std::pow(o.L_hi / o.L_lo, static_cast<double>(i) / (o.n_scan - 1));
      const double m = multiplier3d(l, L);
      smallest = std::min(smallest, std::abs(m));
      if (i > 0 && m * prev <= 0.0) ++sign_changes;
      prev = m;
    }
  }
  rep.above("min |M_l(L)| over the scan", smallest, 0.0);
  rep.below("sign changes along L", sign_changes, 0.5);
  rep.seconds = sw.seconds();
  rep.below("runtime [s]", rep.seconds, o.max_seconds);
  return rep;
}

struct KernelSuiteOptions {
  long N = 1 << 16;
  KernelOptions kernel{};
  double min_ratio = 10.0, max_seconds = 60.0;
};

inline SuiteReport suite_kernels(const KernelSuiteOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"kernels", {}, 0.0, {}};
  const auto one = kernel_ft_decay(KernelKind::one_sided_log, o.N, o.kernel);
  const auto sym = kernel_ft_decay(KernelKind::symmetric_log, o.N, o.kernel);
  rep.above("one-sided: residual(c/xi) / residual(c log xi/xi)", one.residual_inverse / one.residual_log, o.min_ratio);
  rep.above("one-sided selects c log xi/xi", one.model == DecayModel::log_over_inverse ? 1.0 : 0.0, 0.5);
  rep.above("symmetric: residual(c log xi/xi) / residual(c/xi)", sym.residual_log / sym.residual_inverse, 1.0);
  rep.above("symmetric selects c/xi", sym.model == DecayModel::inverse && !sym.inconclusive ? 1.0 : 0.0, 0.5);
  rep.seconds = sw.seconds();
  rep.below("runtime [s]", rep.seconds, o.max_seconds);
  return rep;
}

struct Symbol3DOptions {
  std::vector<double> radii{2.0, 10.0};
  int l_lo = 128, l_hi = 256;
  double tol_slope = 0.03;
};

inline SuiteReport suite_symbol3d(const Symbol3DOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"symbol3d", {}, 0.0, {}};
  for (double L : o.radii) {
    const auto f = numeric_symbol3d(L, o.l_lo, o.l_hi);
    rep.below("|slope - 1| at L=" + std::to_string(L), std::abs(f.slope - 1.0), o.tol_slope);
  }
  rep.seconds = sw.seconds();
  return rep;
}

struct MappedSuiteOptions {
  double L = 2.0;
  int K = 8;
  int N_r = 64;
  std::vector<double> epsilons{0.02, 0.05, 0.1};
  double solve_epsilon = 0.05, delta = 0.005;
  double tol_spread = 0.2, max_seconds = 300.0;
};

/// Mapped operator against the exact-annulus one, and the nonlinear solve on U.
inline SuiteReport suite_mapped2d(const MappedSuiteOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"mapped2d", {}, 0.0, {}};
  const auto cmp = mapped_operator_comparison(o.epsilons, o.L, o.K, o.N_r);
  double c_ref = cmp.front().constant;
  for (const auto& c : cmp)
    if (std::abs(c.epsilon - o.solve_epsilon) < 1e-12) c_ref = c.constant;
  for (const auto& c : cmp) {
    rep.measurements.emplace_back("max |A^U - A| at eps=" + std::to_string(c.epsilon), c.difference);
    rep.measurements.emplace_back("C at eps=" + std::to_string(c.epsilon), c.constant);
    rep.below("C(eps)/C(ref) - 1 at eps=" + std::to_string(c.epsilon), std::abs(c.constant / c_ref - 1.0), o.tol_spread);
  }
  MappedAnnulus U(radial_bump_map(o.L, o.solve_epsilon), o.L, o.N_r, o.K);
  SolverConfig cfg;
  cfg.K = o.K;
  cfg.N_r = o.N_r;
  cfg.outer_radius = o.L;
  cfg.tol_fixed_point = 1e-9;
  cfg.max_iter = 30;
  const auto res = solve_mapped_fixed_point(U, perturbed_mapped_data(U, o.delta), cfg);
  rep.above("mapped solve converged", res.converged ? 1.0 : 0.0, 0.5);
  double contraction = 0.0;
  for (size_t k = 1; k < res.records.size(); ++k)
    if (res.records[k - 1].increment > 100.0 * cfg.tol_fixed_point)
      contraction = std::max(contraction, res.records[k].contraction);
  rep.below("mapped contraction factor", contraction, 0.5);
  rep.seconds = sw.seconds();
  rep.below("runtime [s]", rep.seconds, o.max_seconds);
  return rep;
}

struct GridConvergenceOptions {
  double L = 2.0;
  std::vector<int> sizes{64, 128, 256};
  double map_epsilon = 0.05;
  double min_order = 2.0;
};

namespace detail {

// (r - 1)(L - r) e^r cos(phi) and its polar Laplacian.
inline double mms_poisson(double r, double phi, double L) { return (r - 1) * (L - r) * std::exp(r) * std::cos(phi); }
inline double mms_poisson_source(double r, double phi, double L) {
  const double q = (r - 1) * (L - r), qp = -2 * r + L + 1, qpp = -2.0, e = std::exp(r);
  const double g = q * e, gp = (qp + q) * e, gpp = (qpp + 2 * qp + q) * e;
  return (gpp + gp / r - g / (r * r)) * std::cos(phi);
}

}  // namespace detail

/// Observed orders of the uniform-grid Poisson and pullback solvers on
/// manufactured solutions with zero Dirichlet data.
inline SuiteReport suite_grid_convergence(const GridConvergenceOptions& o = {}) {
  detail::Stopwatch sw;
  SuiteReport rep{"grid_convergence", {}, 0.0, {}};
  const double L = o.L;
  const int K = 8;
  std::vector<double> ep, ev;
  const auto map = radial_bump_map(L, o.map_epsilon);
  const PlanarDomain dom{L, map};
  auto vstar = [L](double r, double p) { return (r - 1) * (L - r) * std::exp(r) * (1.0 + 0.5 * std::cos(p)); };
  // Laplacian in the image domain of vstar, as the pullback divergence of sqrt(g) g^{-1} grad vstar
  auto grad = [L](double r, double p) {
    const double q = (r - 1) * (L - r), qp = -2 * r + L + 1, e = std::exp(r);
    return Vec2((qp + q) * e * (1.0 + 0.5 * std::cos(p)), -q * e * 0.5 * std::sin(p));
  };
  auto flux = [&](double r, double p) {
    const auto m = polar_metric(dom, r, p);
    return Vec2(m.sqrt_g * (m.g_inv * grad(r, p)));
  };
  auto source = [&](double r, double p) {
    const double h = 1e-4;
    const double d = (flux(r + h, p).x() - flux(r - h, p).x()) / (2 * h) + (flux(r, p + h).y() - flux(r, p - h).y()) / (2 * h);
    return d / polar_metric(dom, r, p).sqrt_g;
  };
  for (int n : o.sizes) {
    const auto g = make_grid(AnnulusSpec{L}, n, K);
    RealMatrix jp(n, g.n_phi), jv(n, g.n_phi);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < g.n_phi; ++k) {
        jp(i, k) = detail::mms_poisson_source(g.r[i], g.phi(k), L);
        jv(i, k) = source(g.r[i], g.phi(k));
      }
    const auto up = solve_poisson(jp, BoundaryFourier(K), BoundaryFourier(K), g);
    const auto uv = solve_variable_coeff(jv, map, {BoundaryFourier(K), BoundaryFourier(K)}, g);
    double a = 0.0, b = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < g.n_phi; ++k) {
        a = std::max(a, std::abs(up.values(i, k) - detail::mms_poisson(g.r[i], g.phi(k), L)));
        b = std::max(b, std::abs(uv.values(i, k) - vstar(g.r[i], g.phi(k))));
      }
    ep.push_back(a);
    ev.push_back(b);
  }
  for (size_t s = 1; s < ep.size(); ++s) {
    const std::string tag = std::to_string(o.sizes[s - 1]) + "->" + std::to_string(o.sizes[s]);
    rep.above("solve_poisson order " + tag, detail::observed_order(ep[s - 1], ep[s]), o.min_order);
    rep.above("solve_variable_coeff order " + tag, detail::observed_order(ev[s - 1], ev[s]), o.min_order);
  }
  rep.seconds = sw.seconds();
  return rep;
}

}  // namespace mhs
