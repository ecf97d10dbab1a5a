// Grad-Rubin iteration on the annulus 1 < r < 2 for a small single-mode
// perturbation of x/|x|^2; prints the iteration history.

#include <cstdio>

#include "mhs/acceptance.hpp"

int main() {
  mhs::SolverConfig cfg;
  cfg.K = 16;
  cfg.N_r = 128;
  const auto data = mhs::single_mode_data(cfg.K, cfg.outer_radius, 0.01);
  const auto res = mhs::solve_fixed_point(data, cfg);

  std::printf("%4s %12s %12s %12s %12s\n", "it", "increment", "ratio", "force", "loop defect");
  for (const auto& r : res.report.records)
    std::printf("%4d %12.3e %12.3e %12.3e %12.3e\n", r.iteration, r.increment, r.contraction, r.residuals.force,
                r.loop_defect);
  std::printf("%s, lambda = %.12f, J = %.3e\n", res.report.message.c_str(), res.equation.lambda, res.equation.J);
  return res.report.converged ? 0 : 2;
}
