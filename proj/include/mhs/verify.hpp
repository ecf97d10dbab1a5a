#pragma once

// Numerical checks of asymptotic claims: Fourier decay of singular kernels,
// principal symbols of A in 2D and 3D, admissibility of fields.

#include "mhs/current2d.hpp"
#include "mhs/shell3d.hpp"

namespace mhs {

enum class KernelKind { one_sided_log, symmetric_log, power };

enum class DecayModel { inverse, log_over_inverse };  // c/xi, c log(xi)/xi

struct DecayFit {
  std::vector<double> xi;
  std::vector<double> magnitude;
  DecayModel model = DecayModel::inverse;
  double residual_inverse = 0.0;  // rms of log|a| - log(c/xi)
  double residual_log = 0.0;      // rms of log|a| - log(c log xi / xi)
  double slope = 0.0;             // least-squares slope of log|a| against log xi
  double constant = 0.0;          // fitted c of the selected model
  bool inconclusive = false;

  double ratio() const { return residual_inverse / residual_log; }
};

struct KernelOptions {
  double xi_min = 1e3;
  double xi_max = 1e7;
  int n_xi = 33;
  double power = 0.5;               // exponent p of |z|^{-p}
  int gauss_points = 16;
  double max_phase_per_panel = 8.0;  // xi * panel width
  double inconclusive_residual = 0.1;
};

namespace detail {
/// C-infinity cutoff: 1 on |z| <= 1/2, 0 for |z| >= 1.
inline double smooth_cutoff(double z) {
  z = std::abs(z);
  if (z <= 0.5) return 1.0;
  if (z >= 1.0) return 0.0;
  auto f = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
  const double t = 2.0 * (z - 0.5);
  return f(1.0 - t) / (f(1.0 - t) + f(t));
}

/// int_0^1 k(z) eta(z) e^{-i z xi} dz by Gauss-Legendre on dyadic panels
/// graded toward the singular endpoint; the panel [0, 2^-60] is dropped.
template <typename F>
Complex half_line_transform(F&& k, double xi, const std::pair<std::vector<double>, std::vector<double>>& gl,
                            double max_phase, int min_subpanels) {
  Complex s = 0.0;
  double hi = 1.0;
  const int n = static_cast<int>(gl.first.size());
  for (int level = 0; level < 60; ++level) {
    const double lo = 0.5 * hi;
    const int sub = std::max(level == 0 ? min_subpanels : 1, static_cast<int>(std::ceil(xi * (hi - lo) / max_phase)));
    const double h = (hi - lo) / sub;
    for (int q = 0; q < sub; ++q) {
      const double a = lo + q * h;
      for (int i = 0; i < n; ++i) {
        const double z = a + 0.5 * h * (gl.first[i] + 1.0);
        s += 0.5 * h * gl.second[i] * k(z) * smooth_cutoff(z) * std::polar(1.0, -z * xi);
      }
    }
    hi = lo;
  }
  return s;
}

inline double rms_about_mean(const std::vector<double>& r) {
  double m = 0.0;
  for (double v : r) m += v;
  m /= double(r.size());
  double s = 0.0;
  for (double v : r) s += (v - m) * (v - m);
  return std::sqrt(s / double(r.size()));
}
}  // namespace detail

/// Fourier transform magnitude of the cut-off kernel on log-spaced xi and
/// least-squares discrimination between c/xi and c log(xi)/xi. N bounds the
/// node count of the coarsest panel level from below (power of two >= 2^16).
inline DecayFit kernel_ft_decay(KernelKind kind, long N = 1 << 16, const KernelOptions& opt = {}) {
  if (N < (1 << 16) || (N & (N - 1)) != 0) throw PreconditionError("kernel_ft_decay: N must be a power of two >= 2^16");
  if (!(opt.xi_min > 1.0) || !(opt.xi_max >= 100.0 * opt.xi_min) || opt.n_xi < 8)
    throw PreconditionError("kernel_ft_decay: xi samples must span at least two decades above 1");
  if (kind == KernelKind::power && !(opt.power > 0.0 && opt.power < 1.0))
    throw PreconditionError("kernel_ft_decay: power must lie in (0, 1)");
  const auto gl = gauss_legendre(opt.gauss_points);
  const int min_sub = static_cast<int>(std::max<long>(1, N / (2 * opt.gauss_points)));
  DecayFit fit;
  fit.xi.resize(opt.n_xi);
  fit.magnitude.resize(opt.n_xi);
  for (int i = 0; i < opt.n_xi; ++i)
    fit.xi[i] = opt.xi_min * std::pow(opt.xi_max / opt.xi_min, double(i) / (opt.n_xi - 1));
  parallel_for(opt.n_xi, [&](std::ptrdiff_t i) {
    const double xi = fit.xi[i];
    Complex a;
    switch (kind) {
      case KernelKind::one_sided_log:
        a = detail::half_line_transform([](double z) { return std::log(z); }, xi, gl, opt.max_phase_per_panel, min_sub);
        break;
      case KernelKind::symmetric_log:
        // even kernel: the two half lines combine to 2 Re
        a = 2.0 * detail::half_line_transform([](double z) { return std::log(z); }, xi, gl, opt.max_phase_per_panel,
                                              min_sub).real();
        break;
      case KernelKind::power:
        a = 2.0 * detail::half_line_transform([p = opt.power](double z) { return std::pow(z, -p); }, xi, gl,
                                              opt.max_phase_per_panel, min_sub).real();
        break;
    }
    fit.magnitude[i] = std::abs(a);
  });
  std::vector<double> r_inv(opt.n_xi), r_log(opt.n_xi);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < opt.n_xi; ++i) {
    const double lx = std::log(fit.xi[i]), ly = std::log(fit.magnitude[i]);
    r_inv[i] = ly + lx;
    r_log[i] = ly + lx - std::log(lx);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = opt.n_xi;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.residual_inverse = detail::rms_about_mean(r_inv);
  fit.residual_log = detail::rms_about_mean(r_log);
  fit.model = fit.residual_log < fit.residual_inverse ? DecayModel::log_over_inverse : DecayModel::inverse;
  const auto& r = fit.model == DecayModel::inverse ? r_inv : r_log;
  double mean = 0.0;
  for (double v : r) mean += v;
  fit.constant = std::exp(mean / n);
  fit.inconclusive = std::min(fit.residual_inverse, fit.residual_log) > opt.inconclusive_residual;
  return fit;
}

/// a(x, xi) = (n.B) / (|xi| |B| (i sgn(xi) cos(theta) + |sin(theta)|)).
inline Complex predicted_symbol(double n_dot_b, double b_norm, double cos_theta, double sin_theta, int k) {
  const double sgn = k > 0 ? 1.0 : (k < 0 ? -1.0 : 0.0);
  return n_dot_b / (std::abs(k) * b_norm * Complex(std::abs(sin_theta), sgn * cos_theta));
}

struct SymbolSample {
  double b_norm = 0.0, n_dot_b = 0.0, cos_theta = 0.0, sin_theta = 0.0;
  int k = 0;
  Complex measured;   // diagonal multiplier in the d/drho convention
  Complex predicted;
  double deviation() const { return std::abs(measured / predicted - 1.0); }
  /// relative error of arg(measured) against arg(predicted)
  double phase_error() const {
    const double p = std::arg(predicted), m = std::arg(measured);
    return std::abs(p) > 0 ? std::abs(m - p) / std::abs(p) : std::abs(m - p);
  }
};

struct BoundaryProbe {
  double b_norm, n_dot_b, cos_theta, sin_theta;
};

/// Field parameters on the inner circle at angle phi; theta is the angle
/// between B and the counterclockwise tangent.
template <PlanarField F>
BoundaryProbe probe_inner(const F& field, double phi = 0.0) {
  const Vec2 x = polar_to_cartesian(1.0, phi);
  const Vec2 b = field.cartesian(x);
  const Mat2 frame = polar_frame(phi);
  const double bn = -b.dot(frame.col(0)), bt = b.dot(frame.col(1)), nb = b.norm();
  return {nb, bn, bt / nb, std::abs(bn) / nb};
}

inline BoundaryProbe probe_inner(const Field2D& b, int j = 0) {
  const double br = b.br(0, j), bp = b.bphi(0, j), nb = std::hypot(br, bp);
  return {nb, -br, bp / nb, std::abs(br) / nb};
}

inline std::vector<SymbolSample> numeric_symbol2d(const OperatorMatrix& A, const BoundaryProbe& p,
                                                  const std::vector<int>& ks) {
  std::vector<SymbolSample> out;
  for (int k : ks) {
    if (k == 0 || std::abs(k) > A.K) throw PreconditionError("numeric_symbol2d: mode out of range");
    SymbolSample s{p.b_norm, p.n_dot_b, p.cos_theta, p.sin_theta, k, kInnerRadialSign * A.entry(k, k),
                   predicted_symbol(p.n_dot_b, p.b_norm, p.cos_theta, p.sin_theta, k)};
    out.push_back(s);
  }
  return out;
}

struct Symbol3DFit {
  std::vector<int> l;
  std::vector<double> value;  // l(l+1) |multiplier3d(l, L)|
  double slope = 0.0;         // log-log
  double c = 0.0;             // least-squares c in value ~ c l
  double residual = 0.0;      // rms relative deviation from c l
};

/// Growth of the trace-divergence symbol l(l+1)|M_l| over l in [l_lo, l_hi].
inline Symbol3DFit numeric_symbol3d(double L, int l_lo, int l_hi) {
  if (l_lo < 3 || l_hi < std::max(16, l_lo + 1)) throw PreconditionError("numeric_symbol3d: fit window must exclude l <= 2 and reach l >= 16");
  Symbol3DFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, num = 0, den = 0;
  for (int l = l_lo; l <= l_hi; ++l) {
    const double v = double(l) * (l + 1) * std::abs(multiplier3d(l, L));
    f.l.push_back(l);
    f.value.push_back(v);
    const double x = std::log(double(l)), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    num += v * l;
    den += double(l) * l;
  }
  const double n = double(f.l.size());
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.c = num / den;
  double r = 0.0;
  for (size_t i = 0; i < f.l.size(); ++i) r += std::pow(f.value[i] / (f.c * f.l[i]) - 1.0, 2);
  f.residual = std::sqrt(r / n);
  return f;
}

}  // namespace mhs
