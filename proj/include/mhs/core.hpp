#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mhs {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr const char* kVersion = "0.3.0";

/// Relates the outward-normal derivative on the inner circle to the radial
/// derivative d/dr at r = 1 (and to the tangential trace of a rotated
/// gradient along the counterclockwise tangent): d/dr = kInnerRadialSign * n.grad.
/// Closed-form multipliers are quoted as d/dr traces; operator matrices hold
/// outward-normal traces.
inline constexpr double kInnerRadialSign = -1.0;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Boundary data violate a flux or mean-zero compatibility condition.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to converge or a trajectory failed to exit.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A linear operator is singular, ill-conditioned, or a required integral vanishes.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// A map is not orientation preserving or a field violates admissibility.
class OrientationError : public Error {
 public:
  using Error::Error;
};

inline Vec2 polar_to_cartesian(double r, double phi) {
  return {r * std::cos(phi), r * std::sin(phi)};
}

/// Angle wrapped into [0, 2*pi).
inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

/// Unit frame (e_r, e_phi) at angle phi, as columns.
inline Mat2 polar_frame(double phi) {
  Mat2 f;
  f << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return f;
}

/// Worker count used by parallel_for; 0 means hardware concurrency.
inline std::atomic<int>& thread_limit() {
  static std::atomic<int> limit{0};
  return limit;
}

inline int worker_count() {
  int n = thread_limit().load();
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

/// Runs body(i) for i in [0, n) over contiguous chunks. Exceptions thrown by
/// workers are rethrown on the calling thread (first one wins).
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  const int workers = std::min<std::ptrdiff_t>(worker_count(), std::max<std::ptrdiff_t>(n, 1));
  if (workers <= 1 || n < 2) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::ptrdiff_t lo = w * chunk;
        const std::ptrdiff_t hi = std::min(n, lo + chunk);
        for (std::ptrdiff_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double max_abs(const RealMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace mhs
