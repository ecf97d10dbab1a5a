#pragma once

// Fourier and Chebyshev building blocks: truncated boundary series, angular
// transforms on grid rows, collocation differentiation and interpolation.

#include <unsupported/Eigen/FFT>

#include <map>
#include <mutex>
#include <vector>

#include "mhs/core.hpp"

namespace mhs {

/// Truncated Fourier series c_k e^{ik theta}, |k| <= K, on a unit-speed
/// parametrization of a boundary circle.
class BoundaryFourier {
 public:
  BoundaryFourier() : BoundaryFourier(0) {}
  explicit BoundaryFourier(int K) : K_(K), c_(2 * K + 1, Complex(0.0)) {
    if (K < 0) throw PreconditionError("BoundaryFourier: K must be nonnegative");
  }

  static BoundaryFourier constant(int K, double value) {
    BoundaryFourier b(K);
    b[0] = value;
    return b;
  }
  static BoundaryFourier mode(int K, int k, Complex amplitude = 1.0) {
    BoundaryFourier b(K);
    b[k] = amplitude;
    return b;
  }
  /// a cos(n theta) + b sin(n theta).
  static BoundaryFourier trig(int K, int n, double a, double b) {
    BoundaryFourier f(K);
    if (n == 0) {
      f[0] = a;
      return f;
    }
    f[n] += Complex(a / 2.0, -b / 2.0);
    f[-n] += Complex(a / 2.0, b / 2.0);
    return f;
  }
  /// Coefficients of samples at theta_j = 2 pi j / N, modes |k| <= K (K < N/2).
  static BoundaryFourier from_samples(const std::vector<Complex>& values, int K);
  static BoundaryFourier from_samples(const std::vector<double>& values, int K) {
    return from_samples(std::vector<Complex>(values.begin(), values.end()), K);
  }
  template <typename F>
  static BoundaryFourier from_function(F&& f, int K, int samples = 0) {
    if (samples == 0) samples = 4 * K + 4;
    std::vector<Complex> v(samples);
    for (int j = 0; j < samples; ++j) v[j] = f(kTwoPi * j / samples);
    return from_samples(v, K);
  }

  int K() const { return K_; }
  Complex& operator[](int k) { return c_.at(k + K_); }
  Complex operator[](int k) const {
    if (k < -K_ || k > K_) return 0.0;
    return c_[k + K_];
  }
  const std::vector<Complex>& coefficients() const { return c_; }

  Complex eval(double theta) const {
    Complex s = 0.0;
    const Complex w = std::polar(1.0, theta);
    Complex p = std::polar(1.0, -K_ * theta);
    for (int k = -K_; k <= K_; ++k) {
      s += c_[k + K_] * p;
      p *= w;
    }
    return s;
  }
  double eval_real(double theta) const { return eval(theta).real(); }

  std::vector<Complex> samples(int n) const {
    std::vector<Complex> v(n);
    for (int j = 0; j < n; ++j) v[j] = eval(kTwoPi * j / n);
    return v;
  }
  std::vector<double> real_samples(int n) const {
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = eval(kTwoPi * j / n).real();
    return v;
  }

  /// (1/2pi) * integral over theta.
  Complex mean() const { return (*this)[0]; }
  Complex integral() const { return kTwoPi * (*this)[0]; }

  BoundaryFourier derivative() const {
    BoundaryFourier d(K_);
    for (int k = -K_; k <= K_; ++k) d[k] = Complex(0.0, k) * (*this)[k];
    return d;
  }
  /// Zero-mean antiderivative; throws if the mean does not vanish to tol.
  BoundaryFourier antiderivative(double tol = 1e-10) const {
    if (std::abs((*this)[0]) > tol * std::max(1.0, norm_inf()))
      throw CompatibilityError("antiderivative of a series with nonzero mean");
    BoundaryFourier a(K_);
    for (int k = -K_; k <= K_; ++k)
      if (k != 0) a[k] = (*this)[k] / Complex(0.0, k);
    return a;
  }

  BoundaryFourier resized(int K) const {
    BoundaryFourier b(K);
    for (int k = -std::min(K, K_); k <= std::min(K, K_); ++k) b[k] = (*this)[k];
    return b;
  }

  bool is_real(double tol = 1e-12) const {
    for (int k = 0; k <= K_; ++k)
      if (std::abs((*this)[-k] - std::conj((*this)[k])) > tol) return false;
    return true;
  }
  double norm_inf() const {
    double m = 0.0;
    for (auto& c : c_) m = std::max(m, std::abs(c));
    return m;
  }
  ComplexVector vector() const { return Eigen::Map<const ComplexVector>(c_.data(), c_.size()); }
  static BoundaryFourier from_vector(const ComplexVector& v) {
    BoundaryFourier b(static_cast<int>(v.size() - 1) / 2);
    for (int i = 0; i < v.size(); ++i) b.c_[i] = v[i];
    return b;
  }

  BoundaryFourier& operator+=(const BoundaryFourier& o) {
    const int K = std::max(K_, o.K_);
    if (K > K_) *this = resized(K);
    for (int k = -o.K_; k <= o.K_; ++k) (*this)[k] += o[k];
    return *this;
  }
  BoundaryFourier& operator*=(Complex s) {
    for (auto& c : c_) c *= s;
    return *this;
  }
  friend BoundaryFourier operator+(BoundaryFourier a, const BoundaryFourier& b) { return a += b; }
  friend BoundaryFourier operator-(BoundaryFourier a, BoundaryFourier b) {
    b *= -1.0;
    return a += b;
  }
  friend BoundaryFourier operator*(Complex s, BoundaryFourier a) { return a *= s; }

 private:
  int K_;
  std::vector<Complex> c_;
};

/// FFT of length-N rows with the convention c_m = (1/N) sum_j u_j e^{-i m phi_j},
/// stored in FFT order (index m mod N).
class AngularTransform {
 public:
  explicit AngularTransform(int n) : n_(n) {
    if (n < 2) throw PreconditionError("AngularTransform needs at least 2 points");
  }
  int size() const { return n_; }

  std::vector<Complex> forward(const std::vector<Complex>& u) const {
    std::vector<Complex> out;
    Eigen::FFT<double> fft;
    fft.fwd(out, u);
    for (auto& c : out) c /= static_cast<double>(n_);
    return out;
  }
  std::vector<Complex> forward(const std::vector<double>& u) const {
    return forward(std::vector<Complex>(u.begin(), u.end()));
  }
  std::vector<Complex> inverse(const std::vector<Complex>& c) const {
    std::vector<Complex> scaled(c);
    for (auto& x : scaled) x *= static_cast<double>(n_);
    std::vector<Complex> out;
    Eigen::FFT<double> fft;
    fft.inv(out, scaled);
    return out;
  }

  /// Signed mode number of FFT slot idx; the Nyquist slot maps to -N/2.
  int mode_of(int idx) const { return idx < n_ / 2 ? idx : idx - n_; }
  int slot_of(int m) const { return ((m % n_) + n_) % n_; }

 private:
  int n_;
};

/// Row-wise transforms of an N_r x N_phi nodal matrix.
inline ComplexMatrix rows_forward(const RealMatrix& u) {
  const int nr = static_cast<int>(u.rows()), np = static_cast<int>(u.cols());
  AngularTransform t(np);
  ComplexMatrix out(nr, np);
  for (int i = 0; i < nr; ++i) {
    std::vector<Complex> row(np);
    for (int j = 0; j < np; ++j) row[j] = u(i, j);
    auto c = t.forward(row);
    for (int j = 0; j < np; ++j) out(i, j) = c[j];
  }
  return out;
}

inline ComplexMatrix rows_forward(const ComplexMatrix& u) {
  const int nr = static_cast<int>(u.rows()), np = static_cast<int>(u.cols());
  AngularTransform t(np);
  ComplexMatrix out(nr, np);
  for (int i = 0; i < nr; ++i) {
    std::vector<Complex> row(np);
    for (int j = 0; j < np; ++j) row[j] = u(i, j);
    auto c = t.forward(row);
    for (int j = 0; j < np; ++j) out(i, j) = c[j];
  }
  return out;
}

inline ComplexMatrix rows_inverse(const ComplexMatrix& c) {
  const int nr = static_cast<int>(c.rows()), np = static_cast<int>(c.cols());
  AngularTransform t(np);
  ComplexMatrix out(nr, np);
  for (int i = 0; i < nr; ++i) {
    std::vector<Complex> row(np);
    for (int j = 0; j < np; ++j) row[j] = c(i, j);
    auto u = t.inverse(row);
    for (int j = 0; j < np; ++j) out(i, j) = u[j];
  }
  return out;
}

/// Spectral angular derivative of real rows (Nyquist mode dropped).
inline RealMatrix angular_derivative(const RealMatrix& u) {
  const int np = static_cast<int>(u.cols());
  ComplexMatrix c = rows_forward(u);
  AngularTransform t(np);
  for (int j = 0; j < np; ++j) {
    const int m = t.mode_of(j);
    const Complex f = (2 * std::abs(m) == np) ? Complex(0.0) : Complex(0.0, m);
    c.col(j) *= f;
  }
  return rows_inverse(c).real();
}

/// Fourier coefficients of uniform samples (real or complex) truncated to |k| <= K.
inline BoundaryFourier BoundaryFourier::from_samples(const std::vector<Complex>& values, int K) {
  const int n = static_cast<int>(values.size());
  if (n < 2 * K + 1) throw PreconditionError("BoundaryFourier::from_samples: too few samples for K");
  AngularTransform t(n);
  auto c = t.forward(values);
  BoundaryFourier b(K);
  for (int k = -K; k <= K; ++k) {
    if (2 * std::abs(k) == n) continue;
    b[k] = c[t.slot_of(k)];
  }
  return b;
}

/// Trigonometric interpolant of N uniform real samples (Nyquist term as cosine).
class TrigInterpolant {
 public:
  TrigInterpolant() = default;
  explicit TrigInterpolant(const std::vector<double>& values) : n_(static_cast<int>(values.size())) {
    AngularTransform t(n_);
    auto c = t.forward(values);
    half_ = n_ / 2;
    coef_.assign(half_ + 1, 0.0);
    for (int m = 0; m <= half_; ++m) coef_[m] = c[t.slot_of(m)];
  }
  /// value and derivative at theta.
  std::pair<double, double> eval(double theta) const {
    double v = coef_[0].real(), d = 0.0;
    const Complex w = std::polar(1.0, theta);
    Complex p = 1.0;
    for (int m = 1; m <= half_; ++m) {
      p *= w;
      const Complex cp = coef_[m] * p;
      const double scale = (2 * m == n_) ? 1.0 : 2.0;
      v += scale * cp.real();
      d -= scale * m * cp.imag();
    }
    return {v, d};
  }

 private:
  int n_ = 0;
  int half_ = 0;
  std::vector<Complex> coef_;
};

/// Barycentric weights for arbitrary distinct nodes.
inline std::vector<double> barycentric_weights(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> w(n, 1.0);
  const double scale = 4.0 / (x.back() - x.front());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (k != j) w[j] *= scale * (x[j] - x[k]);
  for (auto& v : w) v = 1.0 / v;
  return w;
}

/// Chebyshev-Gauss-Lobatto barycentric weights (exact, any interval).
inline std::vector<double> cgl_weights(int n) {
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == n - 1) ? 0.5 : 1.0);
  return w;
}

/// Collocation differentiation matrix from barycentric weights.
inline RealMatrix differentiation_matrix(const std::vector<double>& x, const std::vector<double>& w) {
  const int n = static_cast<int>(x.size());
  RealMatrix d = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      d(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

/// Finite-difference weights (Fornberg) for derivatives 0..m at z from nodes x.
inline RealMatrix fornberg_weights(double z, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  RealMatrix c = RealMatrix::Zero(n, m + 1);
  double c1 = 1.0, c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c;
}

/// Local Lagrange interpolation on sorted nodes using a window of `width` points.
struct LocalStencil {
  int start = 0;
  std::vector<double> weights;
};

inline LocalStencil local_stencil(const std::vector<double>& x, double z, int width) {
  const int n = static_cast<int>(x.size());
  width = std::min(width, n);
  const int hi = static_cast<int>(std::lower_bound(x.begin(), x.end(), z) - x.begin());
  int start = std::clamp(hi - width / 2, 0, n - width);
  std::vector<double> nodes(x.begin() + start, x.begin() + start + width);
  auto c = fornberg_weights(z, nodes, 0);
  LocalStencil s;
  s.start = start;
  s.weights.resize(width);
  for (int i = 0; i < width; ++i) s.weights[i] = c(i, 0);
  return s;
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return {x, w};
}

}  // namespace mhs
