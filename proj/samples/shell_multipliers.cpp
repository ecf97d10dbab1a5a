// Shell multipliers M_l(L) from the closed form, next to the radial
// collocation solve they come from.

#include <cstdio>

#include "mhs/shell3d.hpp"

int main() {
  const mhs::RadialSources src{nullptr, nullptr, [](double r) { return mhs::Complex(r); }};
  for (double L : {1.5, 2.0, 5.0}) {
    std::printf("L = %g\n", L);
    for (int l = 1; l <= 8; ++l) {
      const double closed = mhs::multiplier3d(l, L);
      const double bvp = mhs::solve_radial_bvp(l, src, L, 128).b1[0].real();
      std::printf("  l = %2d  M = % .12f  bvp = % .12f\n", l, closed, bvp);
    }
  }
}
