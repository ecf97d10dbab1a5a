// Acceptance runner: one pass/fail line per criterion at the pinned tolerances.
//   acceptance            run all criteria
//   acceptance N [M ...]  run the listed criteria; exit status 1 if any fails

#include <cstdio>
#include <functional>
#include <map>

#include "mhs/acceptance.hpp"

using namespace mhs;

namespace {

struct Criterion {
  const char* title;
  std::function<SuiteReport()> run;
};

const std::map<int, Criterion>& criteria() {
  static const std::map<int, Criterion> c{
      {1, {"annulus multipliers (L=2, K=16, N_r=256)", [] { return suite_multipliers2d(); }}},
      {2, {"2D symbol asymptotics at k=64", [] { return suite_symbol2d(); }}},
      {3, {"fixed-point convergence (delta=0.01, K=16, N_r=128)", [] { return suite_fixed_point(); }}},
      {4, {"trivial fixed point T[B0] = B0", [] { return suite_trivial_fixed_point(); }}},
      {5, {"flow Jacobian identity (100 characteristics)", [] { return suite_jacobian(); }}},
      {6, {"3D multipliers vs radial BVP, no zeros", [] { return suite_multipliers3d(); }}},
      {7, {"kernel decay discrimination", [] { return suite_kernels(); }}},
      {8, {"mapped domains (radial bump)", [] { return suite_mapped2d(); }}},
      {9, {"grid convergence order", [] { return suite_grid_convergence(); }}},
  };
  return c;
}

bool report(int id, const Criterion& c) {
  SuiteReport r;
  std::string error;
  try {
    r = c.run();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const bool pass = error.empty() && r.pass();
  std::printf("criterion %d %s  %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", c.title, r.seconds);
  if (!error.empty()) std::printf("    error: %s\n", error.c_str());
  for (const auto& k : r.checks)
    std::printf("    [%s] %s = %.6g %s %.6g\n", k.pass ? "ok" : "no", k.name.c_str(), k.value, k.upper ? "<" : ">",
                k.threshold);
  for (const auto& [k, v] : r.measurements) std::printf("    (info) %s = %.6g\n", k.c_str(), v);
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (const auto& [id, c] : criteria()) ids.push_back(id);
  bool all = true;
  for (int id : ids) {
    const auto it = criteria().find(id);
    if (it == criteria().end()) {
      std::printf("criterion %d FAIL  unknown criterion\n", id);
      all = false;
      continue;
    }
    all = report(id, it->second) && all;
  }
  return all ? 0 : 1;
}
