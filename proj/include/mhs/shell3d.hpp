#pragma once

// Spherical shell 1 <= |x| <= L around the monopole B0 = x/|x|^3, worked in
// spherical-harmonic coefficient space. Vector harmonics Y = e_r Y_lm,
// Psi = r grad Y_lm, Phi = x cross grad Y_lm (unnormalized, |Psi|^2 = |Phi|^2 = l(l+1)).

#include <cmath>

#include "mhs/elliptic2d.hpp"

namespace mhs {

/// Normal of the inner sphere as a multiple of e_r (the shell lies outside it).
inline constexpr double kInnerNormalSign3D = -1.0;

inline int sh_index(int l, int m) { return l * l + l + m; }

/// Coefficients c_lm of orthonormal spherical harmonics, 0 <= l <= l_max.
class BoundarySH {
 public:
  BoundarySH() : BoundarySH(0) {}
  explicit BoundarySH(int l_max) : l_max_(l_max), c_((l_max + 1) * (l_max + 1), Complex(0.0)) {
    if (l_max < 0) throw PreconditionError("l_max must be nonnegative");
  }
  static BoundarySH mode(int l_max, int l, int m, Complex value = 1.0) {
    BoundarySH s(l_max);
    s(l, m) = value;
    return s;
  }

  int l_max() const { return l_max_; }
  Complex& operator()(int l, int m) {
    check(l, m);
    return c_[sh_index(l, m)];
  }
  Complex operator()(int l, int m) const {
    if (l < 0 || l > l_max_ || std::abs(m) > l) return 0.0;
    return c_[sh_index(l, m)];
  }
  const std::vector<Complex>& coefficients() const { return c_; }

  double norm_inf() const {
    double n = 0.0;
    for (auto v : c_) n = std::max(n, std::abs(v));
    return n;
  }
  /// c_{l,-m} = (-1)^m conj(c_lm).
  bool is_real(double tol = 1e-14) const {
    for (int l = 0; l <= l_max_; ++l)
      for (int m = 1; m <= l; ++m) {
        const Complex want = (m % 2 ? -1.0 : 1.0) * std::conj((*this)(l, m));
        if (std::abs((*this)(l, -m) - want) > tol * std::max(1.0, norm_inf())) return false;
      }
    return true;
  }

  BoundarySH operator+(const BoundarySH& o) const { return combine(o, 1.0); }
  BoundarySH operator-(const BoundarySH& o) const { return combine(o, -1.0); }
  friend BoundarySH operator*(Complex a, BoundarySH s) {
    for (auto& v : s.c_) v *= a;
    return s;
  }

  /// Point value sum c_lm Y_lm(theta, phi).
  Complex eval(double theta, double phi) const {
    Complex s = 0.0;
    for (int l = 0; l <= l_max_; ++l)
      for (int m = -l; m <= l; ++m) s += (*this)(l, m) * spherical_harmonic(l, m, theta, phi);
    return s;
  }

  /// Orthonormal Y_lm with the Condon-Shortley phase.
  static Complex spherical_harmonic(int l, int m, double theta, double phi) {
    const double p = std::sph_legendre(l, std::abs(m), theta);
    const Complex y = p * std::polar(1.0, std::abs(m) * phi);
    return m >= 0 ? y : ((m % 2) ? -1.0 : 1.0) * std::conj(y);
  }

  /// Gauss-Legendre (in cos theta) x uniform (in phi) quadrature projection.
  template <typename F>
  static BoundarySH from_function(int l_max, F&& f, int n_theta = 0) {
    if (n_theta <= 0) n_theta = l_max + 2;
    const int n_phi = 2 * l_max + 2;
    const auto gl = gauss_legendre(n_theta);
    BoundarySH s(l_max);
    for (int a = 0; a < n_theta; ++a) {
      const double theta = std::acos(gl.first[a]);
      for (int b = 0; b < n_phi; ++b) {
        const double phi = kTwoPi * b / n_phi;
        const Complex v = f(theta, phi) * gl.second[a] * (kTwoPi / n_phi);
        for (int l = 0; l <= l_max; ++l)
          for (int m = -l; m <= l; ++m) s(l, m) += v * std::conj(spherical_harmonic(l, m, theta, phi));
      }
    }
    return s;
  }

 private:
  void check(int l, int m) const {
    if (l < 0 || l > l_max_ || std::abs(m) > l)
      throw PreconditionError("spherical harmonic index (" + std::to_string(l) + ", " + std::to_string(m) +
                              ") out of range");
  }
  BoundarySH combine(const BoundarySH& o, double s) const {
    BoundarySH out(std::max(l_max_, o.l_max_));
    for (int l = 0; l <= out.l_max_; ++l)
      for (int m = -l; m <= l; ++m) out(l, m) = (*this)(l, m) + s * o(l, m);
    return out;
  }

  int l_max_;
  std::vector<Complex> c_;
};

/// Tangent field on a sphere: sum psi_lm Psi_lm + phi_lm Phi_lm.
struct TangentSH {
  BoundarySH psi;  // gradient-type part
  BoundarySH phi;  // rotated part
  explicit TangentSH(int l_max = 0) : psi(l_max), phi(l_max) {}
  int l_max() const { return std::max(psi.l_max(), phi.l_max()); }
};

namespace detail {
inline void require_no_l0(const TangentSH& t, const char* what) {
  if (std::abs(t.psi(0, 0)) > 0.0 || std::abs(t.phi(0, 0)) > 0.0)
    throw PreconditionError(std::string(what) + ": tangent field has l = 0 content");
}
}  // namespace detail

struct HodgePotentials {
  BoundarySH psi;  // u = n x grad psi + grad phi on the inner sphere
  BoundarySH phi;
};

/// Potentials of u = n x grad psi + grad phi with n = kInnerNormalSign3D e_r;
/// constants set to zero.
inline HodgePotentials surface_hodge(const TangentSH& u) {
  detail::require_no_l0(u, "surface_hodge");
  // n x grad Y = s Phi, grad Y = Psi on the unit sphere
  return {Complex(1.0 / kInnerNormalSign3D) * u.phi, u.psi};
}

inline TangentSH hodge_field(const HodgePotentials& h) {
  TangentSH u(std::max(h.psi.l_max(), h.phi.l_max()));
  u.psi = h.phi;
  u.phi = Complex(kInnerNormalSign3D) * h.psi;
  u.psi(0, 0) = 0.0;
  u.phi(0, 0) = 0.0;
  return u;
}

/// Surface divergence of n x g on the inner sphere. n x Psi = s Phi and
/// n x Phi = -s Psi, and div Psi_lm = -l(l+1) Y_lm.
inline BoundarySH jrho_from_g(const TangentSH& g) {
  BoundarySH j(g.l_max());
  for (int l = 1; l <= g.l_max(); ++l)
    for (int m = -l; m <= l; ++m) j(l, m) = kInnerNormalSign3D * double(l) * (l + 1) * g.phi(l, m);
  return j;
}

enum class SurfaceEllipticForm {
  curvature,  // Delta phi = j_rho (dB_rho/drho + 2 B_rho / rho): zero for the monopole
  flat        // Delta phi = j_rho dB_rho/drho
};

/// phi on the unit sphere from the surface elliptic equation around the monopole
/// (B_rho = 1, dB_rho/drho = -2). psi does not enter: the Lie terms vanish.
inline BoundarySH solve_surface_elliptic(const BoundarySH& /*psi*/, const BoundarySH& jrho,
                                         SurfaceEllipticForm form = SurfaceEllipticForm::curvature) {
  if (std::abs(jrho(0, 0)) > 1e-14 * std::max(1.0, jrho.norm_inf()))
    throw CompatibilityError("surface elliptic equation: j_rho has nonzero mean");
  BoundarySH phi(jrho.l_max());
  if (form == SurfaceEllipticForm::curvature) return phi;
  for (int l = 1; l <= jrho.l_max(); ++l)
    for (int m = -l; m <= l; ++m) phi(l, m) = 2.0 * jrho(l, m) / (double(l) * (l + 1));
  return phi;
}

/// Current of the monopole transport: Y_lm j_r / r^2 + r j1 Psi_lm + r j2 Phi_lm.
struct MonopoleCurrent {
  BoundarySH jr, j1, j2;
  Complex y_coefficient(int l, int m, double r) const { return jr(l, m) / (r * r); }
  Complex psi_coefficient(int l, int m, double r) const { return r * j1(l, m); }
  Complex phi_coefficient(int l, int m, double r) const { return r * j2(l, m); }
};

inline MonopoleCurrent transport_monopole(const BoundarySH& jr, const TangentSH& j0_tangent, double tol = 1e-14) {
  const double scale = std::max({1.0, jr.norm_inf(), j0_tangent.psi.norm_inf(), j0_tangent.phi.norm_inf()});
  if (std::abs(jr(0, 0)) > tol * scale) throw CompatibilityError("transport: j_r has l = 0 content");
  for (int l = 1; l <= j0_tangent.l_max(); ++l)
    for (int m = -l; m <= l; ++m)
      if (std::abs(j0_tangent.psi(l, m)) > tol * scale)
        throw CompatibilityError("transport: gradient part of the inflow current breaks div j = 0 at l = " +
                                 std::to_string(l));
  return {jr, j0_tangent.psi, j0_tangent.phi};
}

/// Radial profiles of one (l, m) mode: b = b_r Y + b1 Psi + b2 Phi.
struct VSHModeProfile {
  int l = 0, m = 0;
  std::vector<double> r;
  ComplexVector br, b1, b2;
};

/// Radial coefficients of a current j = jY Y + jPsi Psi + jPhi Phi for one mode.
struct RadialSources {
  std::function<Complex(double)> y, psi, phi;
};

inline RadialSources mode_sources(const MonopoleCurrent& j, int l, int m) {
  return {[=](double r) { return j.y_coefficient(l, m, r); }, [=](double r) { return j.psi_coefficient(l, m, r); },
          [=](double r) { return j.phi_coefficient(l, m, r); }};
}

/// Collocation solver for the per-mode div-curl system with b_r = 0 at both ends:
///   div:  (1/r^2)(r^2 b_r)' - l(l+1) b1 / r = 0
///   Phi:  -b_r / r + (1/r)(r b1)' = jPhi
/// and b2 = -r jY / (l(l+1)) from the Y component of the curl. The Psi
/// component, -(1/r)(r b2)' = jPsi, is a compatibility condition on the data.
class RadialBVP3D {
 public:
  RadialBVP3D(int l, double L, int n_r, RadialSpacing spacing = RadialSpacing::chebyshev)
      : l_(l), calc_(radial_nodes(L, n_r, spacing), spacing) {
    if (l < 1) throw PreconditionError("radial BVP requires l >= 1");
    AnnulusSpec{L}.validate();
    if (n_r < 16) throw PreconditionError("radial BVP requires N_r >= 16");
    const int n = n_r;
    const auto& r = calc_.r();
    const auto& D = calc_.d1();
    const double ll = double(l) * (l + 1);
    RealMatrix m = RealMatrix::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      m.block(i, 0, 1, n) = D.row(i);
      m(i, i) += 2.0 / r[i];
      m(i, n + i) -= ll / r[i];
    }
    for (int i = 1; i < n - 1; ++i) {
      const int row = n + i;
      m(row, i) = -1.0 / r[i];
      for (int c = 0; c < n; ++c) m(row, n + c) = D(i, c) * r[c] / r[i];
    }
    m(n, 0) = 1.0;
    m(2 * n - 1, n - 1) = 1.0;
    lu_.compute(m);
    if (!(std::abs(lu_.determinant()) > 0.0)) throw DegeneracyError("radial BVP matrix is singular");
  }

  int l() const { return l_; }
  const RadialCalculus& calculus() const { return calc_; }

  VSHModeProfile solve(const RadialSources& s, int m = 0) const {
    const auto& r = calc_.r();
    const int n = static_cast<int>(r.size());
    const double ll = double(l_) * (l_ + 1);
    ComplexVector rhs = ComplexVector::Zero(2 * n);
    for (int i = 1; i < n - 1; ++i) rhs[n + i] = s.phi ? s.phi(r[i]) : Complex(0.0);
    ComplexVector x(2 * n);
    x.real() = lu_.solve(RealVector(rhs.real()));
    x.imag() = lu_.solve(RealVector(rhs.imag()));
    VSHModeProfile p{l_, m, r, x.head(n), x.tail(n), ComplexVector(n)};
    p.br[0] = 0.0;
    p.br[n - 1] = 0.0;
    for (int i = 0; i < n; ++i) p.b2[i] = s.y ? -r[i] * s.y(r[i]) / ll : Complex(0.0);
    return p;
  }

 private:
  int l_;
  RadialCalculus calc_;
  Eigen::PartialPivLU<RealMatrix> lu_;
};

inline VSHModeProfile solve_radial_bvp(int l, const RadialSources& s, double L, int n_r,
                                       RadialSpacing spacing = RadialSpacing::chebyshev) {
  return RadialBVP3D(l, L, n_r, spacing).solve(s);
}

/// Closed-form b_r for jPhi = j2 r, from the Euler-Cauchy reduction
/// r^2 b'' + 4 r b' + (2 - l(l+1)) b = l(l+1) j2 r^2.
inline double closed_form_br(int l, double L, double r, double j2 = 1.0) {
  if (l == 3) {
    const double K = L * L * std::log(L) / (std::pow(L, -5) - L * L);
    return 12.0 / 7.0 * j2 * (K * r * r - K * std::pow(r, -5) + r * r * std::log(r));
  }
  const double ll = double(l) * (l + 1);
  const double den = std::pow(L, -2 - l) - std::pow(L, l - 1);
  const double X = (L * L - std::pow(L, -2 - l)) / den, Y = (std::pow(L, l - 1) - L * L) / den;
  return ll / (12.0 - ll) * j2 * (X * std::pow(r, l - 1) + Y * std::pow(r, -2 - l) + r * r);
}

/// b1(1) per unit j2 (jPhi = j2 r) for the monopole: the diagonal of A[B0] on Psi_lm.
inline double multiplier3d(int l, double L) {
  if (l < 1) throw PreconditionError("multiplier3d requires l >= 1");
  AnnulusSpec{L}.validate();
  if (l == 3) {
    const double K = L * L * std::log(L) / (std::pow(L, -5) - L * L);
    return (7.0 * K + 1.0) / 7.0;
  }
  // X, Y scaled by L^{1-l} to avoid overflow at large l
  const double a = std::pow(L, 3.0 - l), b = std::pow(L, -1.0 - 2.0 * l);
  const double X = (a - b) / (b - 1.0), Y = (1.0 - a) / (b - 1.0);
  return ((l + 1.0) * X - l * Y + 4.0) / (12.0 - double(l) * (l + 1));
}

/// Potential field grad(chi Y_lm), chi = a r^l + c r^{-l-1}, with normal traces
/// f_in = grad chi . n on r = 1 (n = -e_r) and f_out on r = L.
struct PotentialMode {
  int l = 0;
  Complex a = 0.0, c = 0.0;
  Complex value(double r) const { return a * std::pow(r, l) + c * std::pow(r, -l - 1); }
  Complex derivative(double r) const {
    return a * double(l) * std::pow(r, l - 1) - c * double(l + 1) * std::pow(r, -l - 2);
  }
};

inline PotentialMode potential_mode(int l, Complex f_in, Complex f_out, double L) {
  if (l < 1) throw PreconditionError("potential_mode requires l >= 1");
  // chi'(1) = s f_in, chi'(L) = f_out
  Eigen::Matrix2d m;
  m << l, -(l + 1.0), l * std::pow(L, l - 1), -(l + 1.0) * std::pow(L, -l - 2);
  const Eigen::Vector2cd rhs(kInnerNormalSign3D * f_in, f_out);
  const Eigen::Vector2cd x = m.cast<Complex>().partialPivLu().solve(rhs);
  return {l, x[0], x[1]};
}

struct SweepOptions {
  int l_max = 16;
  int n_r = 256;
  RadialSpacing spacing = RadialSpacing::chebyshev;
  SurfaceEllipticForm elliptic = SurfaceEllipticForm::curvature;
  double compat_tol = 1e-12;
};

struct SweepDiagnostics {
  double tangential_error = 0.0;    // max over modes of |W_tau(1) - g|
  double equation_residual = 0.0;   // |M_l j2 + chi(1) - g_psi|
  double normal_error = 0.0;        // normal traces vs f
  double divergence = 0.0;          // discrete divergence identity
  double curl_error = 0.0;          // curl W - j, all three components
  double endpoint_br = 0.0;         // |b_r| of the current-driven part at r = 1, L
};

struct SweepResult {
  std::vector<VSHModeProfile> modes;  // W - B0 per (l, m), l >= 1, in sh_index order
  Complex monopole_shift = 0.0;       // l = 0: W_r gains c / r^2
  BoundarySH jrho, phi, psi;
  MonopoleCurrent current;
  SweepDiagnostics diagnostics;
};

/// Curl components (Y, Psi, Phi) of a mode profile.
inline std::array<ComplexVector, 3> mode_curl(const VSHModeProfile& p, const RealMatrix& d1) {
  const int n = static_cast<int>(p.r.size());
  const double ll = double(p.l) * (p.l + 1);
  ComplexVector rb1(n), rb2(n);
  for (int i = 0; i < n; ++i) {
    rb1[i] = p.r[i] * p.b1[i];
    rb2[i] = p.r[i] * p.b2[i];
  }
  const ComplexVector drb1 = d1.cast<Complex>() * rb1, drb2 = d1.cast<Complex>() * rb2;
  std::array<ComplexVector, 3> c{ComplexVector(n), ComplexVector(n), ComplexVector(n)};
  for (int i = 0; i < n; ++i) {
    c[0][i] = -ll * p.b2[i] / p.r[i];
    c[1][i] = -drb2[i] / p.r[i];
    c[2][i] = -p.br[i] / p.r[i] + drb1[i] / p.r[i];
  }
  return c;
}

inline ComplexVector mode_divergence(const VSHModeProfile& p, const RealMatrix& d1) {
  const int n = static_cast<int>(p.r.size());
  const double ll = double(p.l) * (p.l + 1);
  ComplexVector r2b(n);
  for (int i = 0; i < n; ++i) r2b[i] = p.r[i] * p.r[i] * p.br[i];
  const ComplexVector d = d1.cast<Complex>() * r2b;
  ComplexVector out(n);
  for (int i = 0; i < n; ++i) out[i] = d[i] / (p.r[i] * p.r[i]) - ll * p.b1[i] / p.r[i];
  return out;
}

/// One linearized Grad-Rubin sweep around B0: f = (inner, outer) normal-trace
/// perturbations, g the tangential perturbation on the inner sphere.
inline SweepResult linear_sweep3d(const BoundarySH& f_inner, const BoundarySH& f_outer, const TangentSH& g,
                                  double L, const SweepOptions& opt = {}) {
  AnnulusSpec{L}.validate();
  const int lmax = opt.l_max;
  if (lmax < 1) throw PreconditionError("l_max must be at least 1");
  detail::require_no_l0(g, "linear_sweep3d");
  const double scale = std::max({1.0, f_inner.norm_inf(), L * L * f_outer.norm_inf()});
  if (std::abs(f_inner(0, 0) + L * L * f_outer(0, 0)) > opt.compat_tol * scale)
    throw CompatibilityError("net flux of the normal data does not vanish");

  SweepResult out;
  out.monopole_shift = kInnerNormalSign3D * f_inner(0, 0);
  out.jrho = jrho_from_g(g);
  out.phi = solve_surface_elliptic(BoundarySH(lmax), out.jrho, opt.elliptic);

  std::vector<PotentialMode> pot(lmax + 1);
  std::vector<std::unique_ptr<RadialBVP3D>> bvp(lmax + 1);
  parallel_for(lmax, [&](std::ptrdiff_t k) {
    const int l = static_cast<int>(k) + 1;
    bvp[l] = std::make_unique<RadialBVP3D>(l, L, opt.n_r, opt.spacing);
  });

  // current equation per mode: g_psi = M_l j2 + chi(1)
  TangentSH j0(lmax);
  out.psi = BoundarySH(lmax);
  for (int l = 1; l <= lmax; ++l) {
    const double M = multiplier3d(l, L);
    for (int m = -l; m <= l; ++m) {
      const auto pm = potential_mode(l, f_inner(l, m), f_outer(l, m), L);
      const Complex j2 = (g.psi(l, m) - pm.value(1.0)) / M;
      j0.phi(l, m) = j2;
      j0.psi(l, m) = out.phi(l, m);
      out.psi(l, m) = j2 / kInnerNormalSign3D;
    }
  }
  out.current = transport_monopole(out.jrho, j0);

  out.modes.resize((lmax + 1) * (lmax + 1));
  std::vector<SweepDiagnostics> diag(out.modes.size());
  parallel_for(lmax, [&](std::ptrdiff_t k) {
    const int l = static_cast<int>(k) + 1;
    const auto& solver = *bvp[l];
    const auto& d1 = solver.calculus().d1();
    const double M = multiplier3d(l, L);
    for (int m = -l; m <= l; ++m) {
      const int idx = sh_index(l, m);
      auto& dg = diag[idx];
      VSHModeProfile p = solver.solve(mode_sources(out.current, l, m), m);
      const int n = static_cast<int>(p.r.size());
      dg.endpoint_br = std::max(std::abs(p.br[0]), std::abs(p.br[n - 1]));
      const auto pm = potential_mode(l, f_inner(l, m), f_outer(l, m), L);
      for (int i = 0; i < n; ++i) {
        p.br[i] += pm.derivative(p.r[i]);
        p.b1[i] += pm.value(p.r[i]) / p.r[i];
      }
      dg.tangential_error = std::max(std::abs(p.b1[0] - g.psi(l, m)), std::abs(p.b2[0] - g.phi(l, m)));
      dg.equation_residual = std::abs(M * out.current.j2(l, m) + pm.value(1.0) - g.psi(l, m));
      dg.normal_error = std::max(std::abs(kInnerNormalSign3D * p.br[0] - f_inner(l, m)),
                                 std::abs(p.br[n - 1] - f_outer(l, m)));
      dg.divergence = mode_divergence(p, d1).cwiseAbs().maxCoeff();
      const auto c = mode_curl(p, d1);
      const auto s = mode_sources(out.current, l, m);
      for (int i = 0; i < n; ++i)
        dg.curl_error = std::max({dg.curl_error, std::abs(c[0][i] - s.y(p.r[i])), std::abs(c[1][i] - s.psi(p.r[i])),
                                  std::abs(c[2][i] - s.phi(p.r[i]))});
      out.modes[idx] = std::move(p);
    }
  });
  auto& d = out.diagnostics;
  for (const auto& dg : diag) {
    d.tangential_error = std::max(d.tangential_error, dg.tangential_error);
    d.equation_residual = std::max(d.equation_residual, dg.equation_residual);
    d.normal_error = std::max(d.normal_error, dg.normal_error);
    d.divergence = std::max(d.divergence, dg.divergence);
    d.curl_error = std::max(d.curl_error, dg.curl_error);
    d.endpoint_br = std::max(d.endpoint_br, dg.endpoint_br);
  }
  return out;
}

}  // namespace mhs
