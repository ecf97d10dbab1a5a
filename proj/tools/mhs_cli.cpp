// mhs: command-line front end for the Grad-Rubin solvers and verification suites.
//
//   mhs solve2d --config run.json [--out DIR] [--threads N]
//   mhs shell3d --config run.json [--out DIR] [--threads N]
//   mhs verify <suite> [--config run.json] [--out DIR] [--threads N]
//
// Exit codes: 0 ok, 1 config or compatibility error, 2 non-convergence,
// 3 verification failure.

#include <CLI11.hpp>
#include <iostream>

#include "mhs/io.hpp"

namespace fs = std::filesystem;
using namespace mhs;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNonConvergence = 2, kVerifyFailed = 3 };

struct Options {
  std::string config;
  std::string out = ".";
  int threads = 0;
  std::string suite;
};

RunConfig config_or_default(const Options& o) {
  if (o.config.empty()) return parse_config(Json::object());
  return load_config(o.config);
}

fs::path artifact(const Options& o, const RunConfig& c, const std::string& fallback, const std::string& name) {
  return fs::path(o.out) / ((c.prefix.empty() ? fallback : c.prefix) + "_" + name);
}

double peak(const ComplexVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string brief(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double perturbation_size(const std::vector<TrigTerm>& a, const std::vector<TrigTerm>& b, const std::vector<TrigTerm>& c,
                         int K) {
  return 2 * (trig_series(a, K).norm_inf() + trig_series(b, K).norm_inf() + trig_series(c, K).norm_inf());
}

int solve_annulus(const Options& o, RunConfig& c) {
  auto& cfg = c.solver;
  cfg.K = c.K.value_or(16);
  cfg.N_r = c.N_r.value_or(128);
  cfg.spacing = c.spacing.value_or(RadialSpacing::chebyshev);
  if (c.n_phi) throw ConfigError("discretization.n_phi: not used on the annulus (set by K)");
  auto data = reference_data(cfg.K, c.L);
  data.f.inner = data.f.inner + trig_series(c.f_inner, cfg.K);
  data.f.outer = data.f.outer + trig_series(c.f_outer, cfg.K);
  data.g = data.g + trig_series(c.g, cfg.K);

  const ArtifactHeader h{"solve2d", c.hash_hex()};
  Json report{{"domain", "annulus"}, {"L", c.L}, {"K", cfg.K}, {"N_r", cfg.N_r}, {"spacing", to_string(cfg.spacing)}};
  FixedPointResult res;
  try {
    res = solve_fixed_point(data, cfg);
  } catch (const ConvergenceError& e) {
    report["converged"] = false;
    report["message"] = e.what();
    write_json(artifact(o, c, "solve2d", "report.json"), report, h);
    throw;
  }
  Json its = Json::array();
  for (const auto& r : res.report.records) its.push_back(iteration_json(r));
  report["iterations"] = its;
  report["converged"] = res.report.converged;
  report["message"] = res.report.message;
  report["contraction"] = res.report.max_contraction();
  report["loop_defect"] = res.pressure.loop_defect;
  report["lambda"] = res.equation.lambda;
  report["J"] = res.equation.J;
  write_json(artifact(o, c, "solve2d", "report.json"), report, h);
  write_field_csv(artifact(o, c, "solve2d", "field.csv"), h, res.field, res.current, &res.pressure.values);
  write_pressure_csv(artifact(o, c, "solve2d", "pressure.csv"), h, res.pressure);
  if (c.operator_csv) {
    const auto A = GradRubinContext(cfg, data).step(res.field).A;
    write_operator_csv(artifact(o, c, "solve2d", "operator.csv"), h, A);
  }
  const auto& last = res.report.records.back();
  std::cout << "solve2d annulus: " << res.report.message << " after " << res.report.records.size()
            << " iterations, contraction " << brief(res.report.max_contraction()) << ", force residual "
            << brief(last.residuals.force) << "\n";
  return res.report.converged ? kOk : kNonConvergence;
}

int solve_mapped(const Options& o, RunConfig& c) {
  auto& cfg = c.solver;
  cfg.K = c.K.value_or(8);
  cfg.N_r = c.N_r.value_or(64);
  if (c.spacing && *c.spacing != RadialSpacing::uniform)
    throw ConfigError("discretization.spacing: mapped domains use the uniform grid");
  cfg.spacing = RadialSpacing::uniform;
  cfg.validate();
  const auto& m = *c.map;
  MappedAnnulus U(radial_bump_map(c.L, m.epsilon, m.cos_modes, m.sin_modes, m.perturb_inner), c.L, cfg.N_r, cfg.K,
                  1e-11, c.n_phi.value_or(0));
  const double size = perturbation_size(c.f_inner, c.f_outer, c.g, cfg.K);
  if (size > cfg.perturbation_size + 1e-14)
    throw PreconditionError("data perturbation " + format_real(size) + " exceeds the configured bound " +
                            format_real(cfg.perturbation_size));
  auto data = perturbed_mapped_data(U, 0.0);
  data.f_inner = data.f_inner + trig_series(c.f_inner, cfg.K);
  data.f_outer = data.f_outer + trig_series(c.f_outer, cfg.K);
  data.g = data.g + trig_series(c.g, cfg.K);

  const ArtifactHeader h{"solve2d", c.hash_hex()};
  Json report{{"domain", "mapped"}, {"L", c.L},       {"epsilon", m.epsilon},
              {"K", cfg.K},         {"N_r", cfg.N_r}, {"spacing", "uniform"}};
  MappedResult res;
  try {
    res = solve_mapped_fixed_point(U, data, cfg);
  } catch (const ConvergenceError& e) {
    report["converged"] = false;
    report["message"] = e.what();
    write_json(artifact(o, c, "solve2d", "report.json"), report, h);
    throw;
  }
  Json its = Json::array();
  double contraction = 0.0;
  for (size_t k = 0; k < res.records.size(); ++k) {
    its.push_back(iteration_json(res.records[k]));
    if (k > 0 && res.records[k - 1].increment > 100.0 * cfg.tol_fixed_point)
      contraction = std::max(contraction, res.records[k].contraction);
  }
  report["iterations"] = its;
  report["converged"] = res.converged;
  report["message"] = res.message;
  report["contraction"] = contraction;
  report["pressure"] = "not reconstructed on mapped domains";
  write_json(artifact(o, c, "solve2d", "report.json"), report, h);
  write_field_csv(artifact(o, c, "solve2d", "field.csv"), h, res.field, res.current, nullptr);
  if (c.operator_csv) {
    FieldInterpolant interp(res.field);
    write_operator_csv(artifact(o, c, "solve2d", "operator.csv"), h,
                       U.assemble(footpoints(interp, U.grid(), cfg.trace), cfg.K));
  }
  std::cout << "solve2d mapped: " << res.message << " after " << res.records.size() << " iterations, contraction "
            << brief(contraction) << "\n";
  return res.converged ? kOk : kNonConvergence;
}

int cmd_solve2d(const Options& o) {
  if (o.config.empty()) throw ConfigError("solve2d requires --config");
  auto c = load_config(o.config);
  if (c.domain_type == "shell") throw ConfigError("domain.type: solve2d needs annulus or mapped");
  if (!c.verify.empty()) throw ConfigError("verify: block not used by solve2d");
  return c.domain_type == "mapped" ? solve_mapped(o, c) : solve_annulus(o, c);
}

int cmd_shell3d(const Options& o) {
  if (o.config.empty()) throw ConfigError("shell3d requires --config");
  auto c = load_config(o.config);
  if (c.domain_type != "shell") throw ConfigError("domain.type: shell3d needs shell");
  if (c.K || c.n_phi) throw ConfigError("discretization: shell3d uses l_max and N_r");
  SweepOptions opt;
  opt.l_max = c.l_max.value_or(16);
  opt.n_r = c.N_r.value_or(256);
  opt.spacing = c.spacing.value_or(RadialSpacing::chebyshev);
  opt.elliptic = c.elliptic;
  TangentSH g(opt.l_max);
  g.psi = sh_series(c.sh_g_psi, opt.l_max);
  g.phi = sh_series(c.sh_g_phi, opt.l_max);
  const auto res = linear_sweep3d(sh_series(c.sh_f_inner, opt.l_max), sh_series(c.sh_f_outer, opt.l_max), g, c.L, opt);

  const ArtifactHeader h{"shell3d", c.hash_hex()};
  const auto& d = res.diagnostics;
  Json mult = Json::array();
  for (int l = 1; l <= opt.l_max; ++l) mult.push_back({l, multiplier3d(l, c.L)});
  double largest = 0.0;
  for (const auto& p : res.modes) largest = std::max({largest, peak(p.br), peak(p.b1), peak(p.b2)});
  Json report{{"L", c.L},
              {"l_max", opt.l_max},
              {"N_r", opt.n_r},
              {"spacing", to_string(opt.spacing)},
              {"elliptic", opt.elliptic == SurfaceEllipticForm::curvature ? "curvature" : "flat"},
              {"monopole_shift", {res.monopole_shift.real(), res.monopole_shift.imag()}},
              {"max_profile", largest},
              {"multipliers", mult},
              {"jrho", sh_json(res.jrho)},
              {"phi", sh_json(res.phi)},
              {"psi", sh_json(res.psi)},
              {"diagnostics",
               {{"tangential_error", d.tangential_error},
                {"equation_residual", d.equation_residual},
                {"normal_error", d.normal_error},
                {"divergence", d.divergence},
                {"curl_error", d.curl_error},
                {"endpoint_br", d.endpoint_br}}}};
  write_json(artifact(o, c, "shell3d", "diagnostics.json"), report, h);
  CsvWriter w(artifact(o, c, "shell3d", "profiles.csv"), h,
              {"l", "m", "r", "br_re", "br_im", "b1_re", "b1_im", "b2_re", "b2_im"});
  for (const auto& p : res.modes) {
    if (p.r.empty()) continue;
    if (!c.all_modes && std::max({peak(p.br), peak(p.b1), peak(p.b2)}) == 0.0) continue;
    for (size_t i = 0; i < p.r.size(); ++i)
      w.row({double(p.l), double(p.m), p.r[i], p.br[i].real(), p.br[i].imag(), p.b1[i].real(), p.b1[i].imag(),
             p.b2[i].real(), p.b2[i].imag()});
  }
  std::cout << "shell3d: l_max " << opt.l_max << ", tangential error " << brief(d.tangential_error)
            << ", curl error " << brief(d.curl_error) << "\n";
  return kOk;
}

SuiteReport run_suite(const std::string& suite, const RunConfig& c) {
  if (suite == "multipliers2d") {
    VerifyParams p(c.verify, suite, {});
    Multipliers2DOptions opt;
    opt.L = c.L;
    opt.K = c.K.value_or(opt.K);
    opt.N_r = c.N_r.value_or(opt.N_r);
    return suite_multipliers2d(opt);
  }
  if (suite == "symbol2d") {
    VerifyParams p(c.verify, suite, {"k_max", "beta"});
    Symbol2DOptions opt;
    opt.L = c.L;
    opt.N_r = c.N_r.value_or(opt.N_r);
    p.read("k_max", opt.k_max);
    p.read("beta", opt.beta);
    return suite_symbol2d(opt);
  }
  if (suite == "kernels") {
    VerifyParams p(c.verify, suite, {"N", "xi_min", "xi_max", "n_xi", "power"});
    KernelSuiteOptions opt;
    p.read("N", opt.N);
    p.read("xi_min", opt.kernel.xi_min);
    p.read("xi_max", opt.kernel.xi_max);
    p.read("n_xi", opt.kernel.n_xi);
    p.read("power", opt.kernel.power);
    auto rep = suite_kernels(opt);
    const auto pw = kernel_ft_decay(KernelKind::power, opt.N, opt.kernel);
    rep.measurements.emplace_back("power kernel log-log slope", pw.slope);
    return rep;
  }
  if (suite == "multipliers3d") {
    VerifyParams p(c.verify, suite, {"radii", "L_scan_min", "L_scan_max", "n_scan"});
    Multipliers3DOptions opt;
    opt.l_max = c.l_max.value_or(opt.l_max);
    opt.n_r = c.N_r.value_or(opt.n_r);
    p.read("radii", opt.radii);
    p.read("L_scan_min", opt.L_lo);
    p.read("L_scan_max", opt.L_hi);
    p.read("n_scan", opt.n_scan);
    return suite_multipliers3d(opt);
  }
  if (suite == "symbol3d") {
    VerifyParams p(c.verify, suite, {"radii", "l_lo", "l_hi"});
    Symbol3DOptions opt;
    p.read("radii", opt.radii);
    p.read("l_lo", opt.l_lo);
    p.read("l_hi", opt.l_hi);
    return suite_symbol3d(opt);
  }
  if (suite == "mapped2d") {
    VerifyParams p(c.verify, suite, {"epsilons", "delta"});
    MappedSuiteOptions opt;
    opt.L = c.L;
    opt.K = c.K.value_or(opt.K);
    opt.N_r = c.N_r.value_or(opt.N_r);
    if (c.map) opt.solve_epsilon = c.map->epsilon;
    p.read("epsilons", opt.epsilons);
    p.read("delta", opt.delta);
    return suite_mapped2d(opt);
  }
  throw ConfigError("unknown verification suite '" + suite + "'");
}

int cmd_verify(const Options& o) {
  const auto c = config_or_default(o);
  const auto rep = run_suite(o.suite, c);
  write_json(artifact(o, c, "verify", o.suite + ".json"), suite_json(rep), ArtifactHeader{"verify " + o.suite, c.hash_hex()});
  for (const auto& k : rep.checks)
    std::cout << (k.pass ? "PASS " : "FAIL ") << k.name << ": " << brief(k.value) << (k.upper ? " < " : " > ")
              << brief(k.threshold) << "\n";
  for (const auto& [k, v] : rep.measurements) std::cout << "     " << k << ": " << brief(v) << "\n";
  std::cout << o.suite << ": " << (rep.pass() ? "pass" : "FAIL") << "\n";
  return rep.pass() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grad-Rubin magnetohydrostatic solvers and verification suites"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* s, bool config_required) {
    auto* opt = s->add_option("--config", o.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    if (config_required) opt->required();
    s->add_option("--out", o.out, "output directory")->capture_default_str();
    s->add_option("--threads", o.threads, "cap on worker threads (0: hardware)")->check(CLI::NonNegativeNumber);
  };
  auto* solve = app.add_subcommand("solve2d", "Grad-Rubin fixed point on the annulus or a mapped annulus");
  common(solve, true);
  auto* shell = app.add_subcommand("shell3d", "linearized sweep on the spherical shell");
  common(shell, true);
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  common(verify, false);
  verify->add_option("suite", o.suite, "multipliers2d | symbol2d | kernels | multipliers3d | symbol3d | mapped2d")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    thread_limit().store(o.threads);
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + o.out + "'");
    if (*solve) return cmd_solve2d(o);
    if (*shell) return cmd_shell3d(o);
    return cmd_verify(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const CompatibilityError& e) {
    std::cerr << "compatibility error: " << e.what() << "\n";
    return kConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return kConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const DegeneracyError& e) {
    std::cerr << "non-convergence (degenerate step): " << e.what() << "\n";
    return kNonConvergence;
  } catch (const OrientationError& e) {
    std::cerr << "non-convergence (field left the admissible set): " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
}
