#pragma once

// Domains: the annulus 1 < r < L, the spherical shell 1 < |x| < L, and
// near-annular images gamma(annulus) of orientation preserving maps.
//
// Orientation convention: boundary circles are parametrized counterclockwise
// with unit tangent t; on the outer boundary the outward normal is t rotated
// by -pi/2, on the inner boundary it is t rotated by +pi/2.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mhs/core.hpp"

namespace mhs {

struct AnnulusSpec {
  double outer_radius = 2.0;

  void validate() const {
    if (!(outer_radius > 1.0) || !std::isfinite(outer_radius))
      throw PreconditionError("annulus outer radius must exceed 1");
  }
};

struct ShellSpec {
  double outer_radius = 2.0;

  void validate() const {
    if (!(outer_radius > 1.0) || !std::isfinite(outer_radius))
      throw PreconditionError("shell outer radius must exceed 1");
  }
};

enum class BoundaryId { inner, outer };

inline std::string to_string(BoundaryId b) { return b == BoundaryId::inner ? "inner" : "outer"; }

/// Orientation preserving diffeomorphism of the reference annulus onto a
/// near-annular domain. All point arguments are Cartesian.
struct DiffeoMap {
  std::string kind = "identity";
  std::function<Vec2(const Vec2&)> forward;
  std::function<Vec2(const Vec2&)> inverse;
  std::function<Mat2(const Vec2&)> jacobian;  // d gamma_i / d x_j
  double amplitude = 0.0;
  // Parameters kept for serialization of the built-in family.
  double outer_radius = 2.0;
  std::vector<std::pair<int, double>> cos_modes;
  std::vector<std::pair<int, double>> sin_modes;
  bool perturb_inner = true;
  double rotation = 0.0;

  /// Jacobian of q = (r, phi) -> gamma(r e_r(phi)): columns d/dr and d/dphi.
  Mat2 polar_jacobian(double r, double phi) const {
    Mat2 p;
    p.col(0) = Vec2(std::cos(phi), std::sin(phi));
    p.col(1) = Vec2(-r * std::sin(phi), r * std::cos(phi));
    return jacobian(polar_to_cartesian(r, phi)) * p;
  }
};

inline DiffeoMap identity_map(double outer_radius = 2.0) {
  DiffeoMap m;
  m.kind = "identity";
  m.outer_radius = outer_radius;
  m.forward = [](const Vec2& x) { return x; };
  m.inverse = [](const Vec2& y) { return y; };
  m.jacobian = [](const Vec2&) { return Mat2::Identity(); };
  return m;
}

inline DiffeoMap rotation_map(double angle, double outer_radius = 2.0) {
  DiffeoMap m;
  m.kind = "rotation";
  m.outer_radius = outer_radius;
  m.rotation = angle;
  const Mat2 rot = polar_frame(angle);
  m.forward = [rot](const Vec2& x) { return Vec2(rot * x); };
  m.inverse = [rot](const Vec2& y) { return Vec2(rot.transpose() * y); };
  m.jacobian = [rot](const Vec2&) { return rot; };
  return m;
}

namespace detail {

/// Cutoff equal to 1 at the perturbed circle and 0 at the other, with zero
/// slope at both ends.
struct RadialCutoff {
  double L;
  bool inner;
  double value(double r) const {
    const double t = (r - 1.0) / (L - 1.0);
    const double s = 0.5 * (1.0 + std::cos(kPi * std::clamp(t, 0.0, 1.0)));
    return inner ? s : 1.0 - s;
  }
  double slope(double r) const {
    const double t = (r - 1.0) / (L - 1.0);
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double ds = -0.5 * kPi / (L - 1.0) * std::sin(kPi * t);
    return inner ? ds : -ds;
  }
};

struct AngularProfile {
  std::vector<std::pair<int, double>> cos_modes;
  std::vector<std::pair<int, double>> sin_modes;
  double value(double th) const {
    double v = 0.0;
    for (auto [n, a] : cos_modes) v += a * std::cos(n * th);
    for (auto [n, b] : sin_modes) v += b * std::sin(n * th);
    return v;
  }
  double slope(double th) const {
    double v = 0.0;
    for (auto [n, a] : cos_modes) v -= n * a * std::sin(n * th);
    for (auto [n, b] : sin_modes) v += n * b * std::cos(n * th);
    return v;
  }
};

}  // namespace detail

/// Largest entry of |d gamma - Id| and |d gamma^{-1} - Id| over a polar sample
/// grid of the closed reference annulus.
inline std::pair<double, double> sampled_deviation(const DiffeoMap& m, int nr = 24, int nth = 64) {
  double fwd = 0.0, inv = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double r = 1.0 + (m.outer_radius - 1.0) * i / (nr - 1);
    for (int j = 0; j < nth; ++j) {
      const double th = kTwoPi * j / nth;
      const Mat2 jac = m.jacobian(polar_to_cartesian(r, th));
      fwd = std::max(fwd, (jac - Mat2::Identity()).cwiseAbs().maxCoeff());
      inv = std::max(inv, (jac.inverse() - Mat2::Identity()).cwiseAbs().maxCoeff());
    }
  }
  return {fwd, inv};
}

/// Built-in near-isometry family gamma(r, th) = (r + a s(r) c(th)) e_r(th).
/// The internal amplitude a is scaled so that the sampled entrywise deviation
/// of both d gamma and d gamma^{-1} from the identity equals epsilon.
inline DiffeoMap radial_bump_map(double outer_radius, double epsilon,
                                 std::vector<std::pair<int, double>> cos_modes = {{2, 1.0}},
                                 std::vector<std::pair<int, double>> sin_modes = {},
                                 bool perturb_inner = true) {
  if (!(outer_radius > 1.0)) throw PreconditionError("radial bump map needs L > 1");
  if (!(epsilon >= 0.0) || epsilon >= 0.5) throw PreconditionError("radial bump amplitude must lie in [0, 0.5)");
  const detail::RadialCutoff cut{outer_radius, perturb_inner};
  const detail::AngularProfile ang{cos_modes, sin_modes};

  auto build = [&](double a) {
    DiffeoMap m;
    m.kind = "radial_bump";
    m.outer_radius = outer_radius;
    m.amplitude = epsilon;
    m.cos_modes = cos_modes;
    m.sin_modes = sin_modes;
    m.perturb_inner = perturb_inner;
    m.forward = [cut, ang, a](const Vec2& x) {
      const double r = x.norm();
      const double th = std::atan2(x.y(), x.x());
      const double rho = r + a * cut.value(r) * ang.value(th);
      return Vec2(rho * std::cos(th), rho * std::sin(th));
    };
    m.jacobian = [cut, ang, a](const Vec2& x) {
      const double r = x.norm();
      const double th = std::atan2(x.y(), x.x());
      const double rho = r + a * cut.value(r) * ang.value(th);
      const double rho_r = 1.0 + a * cut.slope(r) * ang.value(th);
      const double rho_th = a * cut.value(r) * ang.slope(th);
      const Vec2 er(std::cos(th), std::sin(th));
      const Vec2 et(-std::sin(th), std::cos(th));
      Mat2 j = rho_r * er * er.transpose() + (rho_th / r) * er * et.transpose() +
               (rho / r) * et * et.transpose();
      return j;
    };
    m.inverse = [cut, ang, a, outer_radius](const Vec2& y) {
      const double rho = y.norm();
      const double th = std::atan2(y.y(), y.x());
      const double c = ang.value(th);
      double r = rho - a * cut.value(std::clamp(rho, 1.0, outer_radius)) * c;
      for (int it = 0; it < 60; ++it) {
        const double f = r + a * cut.value(r) * c - rho;
        const double df = 1.0 + a * cut.slope(r) * c;
        const double step = f / df;
        r -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r))) break;
      }
      return Vec2(r * std::cos(th), r * std::sin(th));
    };
    return m;
  };

  if (epsilon == 0.0) return build(0.0);
  const double unit = sampled_deviation(build(1e-6)).first / 1e-6;
  double a = epsilon / unit;
  for (int it = 0; it < 8; ++it) {
    auto [f, i] = sampled_deviation(build(a));
    const double worst = std::max(f, i);
    a *= epsilon / worst;
  }
  DiffeoMap m = build(a);
  auto [f, i] = sampled_deviation(m);
  (void)f;
  (void)i;
  return m;
}

/// Outward unit normal of the reference annulus.
inline Vec2 outer_normal(const AnnulusSpec& domain, BoundaryId boundary, double angle) {
  domain.validate();
  if (!(angle >= 0.0 && angle < kTwoPi)) throw PreconditionError("normal angle must lie in [0, 2 pi)");
  const Vec2 er(std::cos(angle), std::sin(angle));
  switch (boundary) {
    case BoundaryId::inner:
      return -er;
    case BoundaryId::outer:
      return er;
  }
  throw PreconditionError("unknown boundary id");
}

/// Outward unit normal of gamma(annulus) at gamma(R e_r(angle)), R in {1, L}:
/// the reference normal pushed forward by d gamma^{-T} and renormalized.
inline Vec2 outer_normal(const DiffeoMap& map, BoundaryId boundary, double angle) {
  if (!(angle >= 0.0 && angle < kTwoPi)) throw PreconditionError("normal angle must lie in [0, 2 pi)");
  double radius = 1.0;
  Vec2 ref;
  switch (boundary) {
    case BoundaryId::inner:
      radius = 1.0;
      ref = -Vec2(std::cos(angle), std::sin(angle));
      break;
    case BoundaryId::outer:
      radius = map.outer_radius;
      ref = Vec2(std::cos(angle), std::sin(angle));
      break;
    default:
      throw PreconditionError("unknown boundary id");
  }
  const Mat2 jac = map.jacobian(polar_to_cartesian(radius, angle));
  if (jac.determinant() <= 0.0) throw OrientationError("map is not orientation preserving");
  const Vec2 n = jac.inverse().transpose() * ref;
  return n / n.norm();
}

/// Counterclockwise unit tangent of the image boundary curve.
inline Vec2 boundary_tangent(const DiffeoMap& map, BoundaryId boundary, double angle) {
  const double radius = boundary == BoundaryId::inner ? 1.0 : map.outer_radius;
  const Vec2 t = map.polar_jacobian(radius, angle).col(1);
  return t / t.norm();
}

/// Metric of the pulled-back Euclidean structure and its inverse.
struct PullbackMetric {
  Mat2 g;
  Mat2 g_inv;
  Vec2 div_g_inv;  // d_k g^{jk}, central differences
};

inline PullbackMetric pullback_metric(const DiffeoMap& map, const Vec2& point, double fd_step = 1e-5) {
  auto metric_at = [&](const Vec2& x) {
    const Mat2 j = map.jacobian(x);
    if (j.determinant() <= 0.0) throw OrientationError("map is not orientation preserving");
    return Mat2(j.transpose() * j);
  };
  PullbackMetric out;
  out.g = metric_at(point);
  out.g_inv = out.g.inverse();
  out.div_g_inv.setZero();
  for (int k = 0; k < 2; ++k) {
    Vec2 dx = Vec2::Zero();
    dx[k] = fd_step;
    const Mat2 gp = metric_at(point + dx).inverse();
    const Mat2 gm = metric_at(point - dx).inverse();
    for (int j = 0; j < 2; ++j) out.div_g_inv[j] += (gp(j, k) - gm(j, k)) / (2.0 * fd_step);
  }
  return out;
}

enum class RadialSpacing { uniform, chebyshev };

inline std::string to_string(RadialSpacing s) { return s == RadialSpacing::uniform ? "uniform" : "chebyshev"; }

/// Polar tensor grid on [1, L] x [0, 2 pi).
struct TensorGrid2D {
  double outer_radius = 2.0;
  std::vector<double> r;
  int n_phi = 0;
  int K = 0;
  RadialSpacing spacing = RadialSpacing::uniform;

  int n_r() const { return static_cast<int>(r.size()); }
  double phi(int j) const { return kTwoPi * j / n_phi; }
  double dphi() const { return kTwoPi / n_phi; }
};

inline int next_power_of_two(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline std::vector<double> radial_nodes(double L, int n_r, RadialSpacing spacing) {
  std::vector<double> r(n_r);
  for (int i = 0; i < n_r; ++i) {
    const double t = spacing == RadialSpacing::uniform
                         ? static_cast<double>(i) / (n_r - 1)
                         : 0.5 * (1.0 - std::cos(kPi * i / (n_r - 1)));
    r[i] = 1.0 + (L - 1.0) * t;
  }
  r.front() = 1.0;
  r.back() = L;
  return r;
}

/// Grid with N_phi the smallest power of two >= 4K + 2 unless given explicitly.
inline TensorGrid2D make_grid(const AnnulusSpec& domain, int n_r, int K,
                              RadialSpacing spacing = RadialSpacing::uniform, int n_phi = 0) {
  domain.validate();
  if (n_r < 16) throw PreconditionError("make_grid: N_r must be at least 16");
  if (K < 1) throw PreconditionError("make_grid: K must be at least 1");
  if (n_phi == 0) n_phi = next_power_of_two(4 * K + 2);
  if (n_phi % 2 != 0 || n_phi < 4 * K + 2)
    throw PreconditionError("make_grid: N_phi must be even and at least 4K+2 (anti-aliasing)");
  TensorGrid2D g;
  g.outer_radius = domain.outer_radius;
  g.r = radial_nodes(domain.outer_radius, n_r, spacing);
  g.n_phi = n_phi;
  g.K = K;
  g.spacing = spacing;
  return g;
}

/// The physical domain behind a grid: the annulus itself, or its image under a map.
struct PlanarDomain {
  double outer_radius = 2.0;
  std::optional<DiffeoMap> map;

  bool mapped() const { return map.has_value() && map->kind != "identity"; }

  Vec2 position(double r, double phi) const {
    const Vec2 x = polar_to_cartesian(r, phi);
    return map ? map->forward(x) : x;
  }
  /// Columns d y / d r and d y / d phi.
  Mat2 polar_jacobian(double r, double phi) const {
    if (map) return map->polar_jacobian(r, phi);
    Mat2 p;
    p.col(0) = Vec2(std::cos(phi), std::sin(phi));
    p.col(1) = Vec2(-r * std::sin(phi), r * std::cos(phi));
    return p;
  }
  Vec2 normal(BoundaryId b, double phi) const {
    const double a = wrap_angle(phi);
    return map ? outer_normal(*map, b, a) : outer_normal(AnnulusSpec{outer_radius}, b, a);
  }
  Vec2 tangent(BoundaryId b, double phi) const {
    const double radius = b == BoundaryId::inner ? 1.0 : outer_radius;
    const Vec2 t = polar_jacobian(radius, phi).col(1);
    return t / t.norm();
  }
  /// |d y / d phi| on a boundary circle (arclength density).
  double arclength_density(BoundaryId b, double phi) const {
    const double radius = b == BoundaryId::inner ? 1.0 : outer_radius;
    return polar_jacobian(radius, phi).col(1).norm();
  }
};

}  // namespace mhs
