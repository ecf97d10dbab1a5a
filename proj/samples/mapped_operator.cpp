// Distance between the current-to-trace operator of a bumped annulus and the
// exact one, for a few bump amplitudes.

#include <cstdio>

#include "mhs/mapped2d.hpp"

int main() {
  for (const auto& c : mhs::mapped_operator_comparison({0.01, 0.02, 0.05, 0.1, 0.2}))
    std::printf("eps = %5.3f  max|dA| = %.4e  ratio = %.4f\n", c.epsilon, c.difference, c.constant);
}
