#pragma once

// Planar vector fields: closed-form fixtures, nodal fields on tensor grids,
// and interpolation of nodal fields at arbitrary points.

#include <concepts>
#include <functional>

#include "mhs/geometry.hpp"
#include "mhs/spectral.hpp"

namespace mhs {

/// A field known at any Cartesian point together with its Jacobian dB_i/dx_j.
template <typename F>
concept PlanarField = requires(const F& f, const Vec2& x) {
  { f.cartesian(x) } -> std::convertible_to<Vec2>;
  { f.jacobian(x) } -> std::convertible_to<Mat2>;
};

namespace detail {
inline void require_nonzero(const Vec2& x) {
  if (x.squaredNorm() == 0.0) throw PreconditionError("field evaluated at the origin");
}
}  // namespace detail

/// (x + beta x_perp) / |x|^2 = (e_r + beta e_theta) / r. beta = 0 gives x/|x|^2.
struct SpiralField {
  double beta = 0.0;
  double scale = 1.0;
  Vec2 cartesian(const Vec2& x) const {
    detail::require_nonzero(x);
    const double r2 = x.squaredNorm();
    return scale * Vec2(x.x() - beta * x.y(), x.y() + beta * x.x()) / r2;
  }
  Mat2 jacobian(const Vec2& x) const {
    detail::require_nonzero(x);
    const double r2 = x.squaredNorm();
    Mat2 m0;
    m0 << 1.0, -beta, beta, 1.0;
    const Vec2 v = m0 * x;
    return scale * (m0 / r2 - 2.0 * v * x.transpose() / (r2 * r2));
  }
};

inline SpiralField reference_field_type() { return SpiralField{0.0, 1.0}; }

/// B0 = x / |x|^2.
inline Vec2 reference_field(const Vec2& x) { return SpiralField{0.0, 1.0}.cartesian(x); }

/// B_mono = grad ln(x^2 + y^2) = 2x / |x|^2.
inline Vec2 monopole_field(const Vec2& x) { return SpiralField{0.0, 2.0}.cartesian(x); }

struct UniformField {
  Vec2 value = Vec2(1.0, 0.0);
  Vec2 cartesian(const Vec2&) const { return value; }
  Mat2 jacobian(const Vec2&) const { return Mat2::Zero(); }
};

/// e_r: nonvanishing but with divergence 1/r (violates the flow hypotheses).
struct RadialUnitField {
  Vec2 cartesian(const Vec2& x) const {
    detail::require_nonzero(x);
    return x / x.norm();
  }
  Mat2 jacobian(const Vec2& x) const {
    const double r = x.norm();
    return Mat2::Identity() / r - x * x.transpose() / (r * r * r);
  }
};

/// Field given by callables.
struct FunctionField {
  std::function<Vec2(const Vec2&)> value;
  std::function<Mat2(const Vec2&)> jac;
  Vec2 cartesian(const Vec2& x) const { return value(x); }
  Mat2 jacobian(const Vec2& x) const { return jac(x); }
};

template <PlanarField A, PlanarField B>
FunctionField sum_fields(A a, B b, double wb = 1.0) {
  return {[a, b, wb](const Vec2& x) { return Vec2(a.cartesian(x) + wb * b.cartesian(x)); },
          [a, b, wb](const Vec2& x) { return Mat2(a.jacobian(x) + wb * b.jacobian(x)); }};
}

/// Nodal vector field. Components are stored in the frame (e_r, e_phi) of the
/// reference angle phi_j; on the exact annulus these are the polar components.
struct Field2D {
  TensorGrid2D grid;
  PlanarDomain domain;
  RealMatrix br;    // N_r x N_phi
  RealMatrix bphi;  // N_r x N_phi

  static Field2D zeros(const TensorGrid2D& g, const PlanarDomain& d) {
    return {g, d, RealMatrix::Zero(g.n_r(), g.n_phi), RealMatrix::Zero(g.n_r(), g.n_phi)};
  }
  Vec2 cartesian(int i, int j) const { return polar_frame(grid.phi(j)) * Vec2(br(i, j), bphi(i, j)); }
  double max_norm() const { return std::max(max_abs(br), max_abs(bphi)); }

  Field2D& operator+=(const Field2D& o) {
    br += o.br;
    bphi += o.bphi;
    return *this;
  }
  Field2D& operator*=(double s) {
    br *= s;
    bphi *= s;
    return *this;
  }
  friend Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
  friend Field2D operator-(Field2D a, const Field2D& b) {
    a.br -= b.br;
    a.bphi -= b.bphi;
    return a;
  }
  friend Field2D operator*(double s, Field2D a) { return a *= s; }
};

inline double max_difference(const Field2D& a, const Field2D& b) { return (a - b).max_norm(); }

template <PlanarField F>
Field2D sample_field(const F& f, const TensorGrid2D& grid, const PlanarDomain& domain = {}) {
  PlanarDomain dom = domain;
  dom.outer_radius = grid.outer_radius;
  Field2D out = Field2D::zeros(grid, dom);
  for (int j = 0; j < grid.n_phi; ++j) {
    const Mat2 frame = polar_frame(grid.phi(j));
    for (int i = 0; i < grid.n_r(); ++i) {
      const Vec2 v = frame.transpose() * f.cartesian(dom.position(grid.r[i], grid.phi(j)));
      out.br(i, j) = v.x();
      out.bphi(i, j) = v.y();
    }
  }
  return out;
}

/// Evaluates a nodal field anywhere in the closed reference annulus: local
/// Lagrange interpolation in r (8 points) on per-radius trigonometric series.
class FieldInterpolant {
 public:
  explicit FieldInterpolant(const Field2D& f, int radial_width = 8)
      : grid_(f.grid), domain_(f.domain), width_(radial_width) {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    RealMatrix vr(nr, np), vphi(nr, np), bx(nr, np), by(nr, np);
    for (int j = 0; j < np; ++j) {
      const double phi = grid_.phi(j);
      const Mat2 frame = polar_frame(phi);
      for (int i = 0; i < nr; ++i) {
        const Vec2 b = frame * Vec2(f.br(i, j), f.bphi(i, j));
        const Vec2 q = domain_.polar_jacobian(grid_.r[i], phi).inverse() * b;
        vr(i, j) = q.x();
        vphi(i, j) = q.y();
        bx(i, j) = b.x();
        by(i, j) = b.y();
      }
    }
    half_ = np / 2;
    coef_[0] = truncate(rows_forward(vr));
    coef_[1] = truncate(rows_forward(vphi));
    coef_[2] = truncate(rows_forward(bx));
    coef_[3] = truncate(rows_forward(by));
  }

  const TensorGrid2D& grid() const { return grid_; }
  const PlanarDomain& domain() const { return domain_; }

  /// (dr/ds, dphi/ds) of the flow in reference polar coordinates.
  Vec2 velocity(double r, double phi) const {
    double out[2];
    evaluate(r, phi, 0, 2, out, nullptr, nullptr);
    return {out[0], out[1]};
  }
  /// Cartesian components of the physical field at reference point (r, phi).
  Vec2 physical(double r, double phi) const {
    double out[2];
    evaluate(r, phi, 2, 2, out, nullptr, nullptr);
    return {out[0], out[1]};
  }

  /// PlanarField interface on the exact annulus (reference = physical coordinates).
  Vec2 cartesian(const Vec2& x) const { return physical(x.norm(), std::atan2(x.y(), x.x())); }
  Mat2 jacobian(const Vec2& x) const {
    const double r = x.norm(), phi = std::atan2(x.y(), x.x());
    double v[2], dr[2], dp[2];
    evaluate(r, phi, 2, 2, v, dr, dp);
    Mat2 dq;  // columns d/dr, d/dphi of the Cartesian field
    dq << dr[0], dp[0], dr[1], dp[1];
    return dq * domain_.polar_jacobian(r, phi).inverse();
  }

 private:
  ComplexMatrix truncate(const ComplexMatrix& c) const {
    ComplexMatrix out(c.rows(), half_ + 1);
    for (int m = 0; m <= half_; ++m) out.col(m) = c.col(m);
    return out;
  }

  void evaluate(double r, double phi, int first, int count, double* val, double* dr, double* dphi) const {
    const double rc = std::clamp(r, grid_.r.front(), grid_.r.back());
    const int n = grid_.n_r();
    const int width = std::min({width_, n, 16});
    const int hi = static_cast<int>(std::lower_bound(grid_.r.begin(), grid_.r.end(), rc) - grid_.r.begin());
    const int start = std::clamp(hi - width / 2, 0, n - width);
    // Lagrange weights and their derivatives on the window
    double w0[16], w1[16];
    for (int s = 0; s < width; ++s) {
      const double xs = grid_.r[start + s];
      double num = 1.0, den = 1.0, dsum = 0.0;
      bool hit = false;
      for (int t = 0; t < width; ++t) {
        if (t == s) continue;
        const double xt = grid_.r[start + t];
        den *= xs - xt;
        const double d = r - xt;
        num *= d;
        if (d == 0.0) hit = true;
      }
      w0[s] = num / den;
      if (dr) {
        if (!hit) {
          for (int t = 0; t < width; ++t)
            if (t != s) dsum += 1.0 / (r - grid_.r[start + t]);
          w1[s] = w0[s] * dsum;
        } else {
          double acc = 0.0;
          for (int t = 0; t < width; ++t) {
            if (t == s) continue;
            double prod = 1.0;
            for (int u = 0; u < width; ++u)
              if (u != s && u != t) prod *= r - grid_.r[start + u];
            acc += prod;
          }
          w1[s] = acc / den;
        }
      }
    }
    thread_local std::vector<Complex> powers;
    powers.resize(half_ + 1);
    const Complex e = std::polar(1.0, phi);
    powers[0] = 1.0;
    for (int m = 1; m <= half_; ++m) powers[m] = powers[m - 1] * e;
    const bool nyquist = 2 * half_ == grid_.n_phi;
    for (int c = 0; c < count; ++c) {
      const ComplexMatrix& coef = coef_[first + c];
      double v = 0.0, vr = 0.0, vp = 0.0;
      for (int s = 0; s < width; ++s) {
        const int i = start + s;
        double row = 0.0, rowp = 0.0;
        for (int m = 1; m <= half_; ++m) {
          const Complex cp = coef(i, m) * powers[m];
          row += cp.real();
          rowp -= m * cp.imag();
        }
        row *= 2.0;
        rowp *= 2.0;
        if (nyquist) {
          const Complex cp = coef(i, half_) * powers[half_];
          row -= cp.real();
          rowp += half_ * cp.imag();
        }
        row += coef(i, 0).real();
        v += w0[s] * row;
        if (dr) {
          vr += w1[s] * row;
          vp += w0[s] * rowp;
        }
      }
      val[c] = v;
      if (dr) {
        dr[c] = vr;
        dphi[c] = vp;
      }
    }
  }

  TensorGrid2D grid_;
  PlanarDomain domain_;
  int width_;
  int half_ = 0;
  ComplexMatrix coef_[4];
};

struct AdmissibilityReport {
  double min_norm = 0.0;
  int min_norm_i = 0, min_norm_j = 0;
  double min_inflow = 0.0;   // min of -B.n on the inner curve
  double min_outflow = 0.0;  // min of B.n on the outer curve
  bool pass = false;
};

struct AdmissibilityFloors {
  double norm = 1e-2;  // relative to max |B|
  double flow = 1e-6;  // relative to max |B|
};

/// Grid scan of |B| and boundary scans of B.n; pass iff all minima exceed the floors.
inline AdmissibilityReport check_field_admissible(const Field2D& b, const AdmissibilityFloors& floors = {}) {
  AdmissibilityReport rep;
  rep.min_norm = std::numeric_limits<double>::infinity();
  rep.min_inflow = rep.min_outflow = std::numeric_limits<double>::infinity();
  double max_norm = 0.0;
  const int nr = b.grid.n_r();
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < b.grid.n_phi; ++j) {
      const double n = std::hypot(b.br(i, j), b.bphi(i, j));
      max_norm = std::max(max_norm, n);
      if (n < rep.min_norm) {
        rep.min_norm = n;
        rep.min_norm_i = i;
        rep.min_norm_j = j;
      }
    }
  for (int j = 0; j < b.grid.n_phi; ++j) {
    const double phi = b.grid.phi(j);
    const Mat2 frame = polar_frame(phi);
    const Vec2 bin = frame * Vec2(b.br(0, j), b.bphi(0, j));
    const Vec2 bout = frame * Vec2(b.br(nr - 1, j), b.bphi(nr - 1, j));
    rep.min_inflow = std::min(rep.min_inflow, -bin.dot(b.domain.normal(BoundaryId::inner, phi)));
    rep.min_outflow = std::min(rep.min_outflow, bout.dot(b.domain.normal(BoundaryId::outer, phi)));
  }
  rep.pass = rep.min_norm > floors.norm * max_norm && rep.min_inflow > floors.flow * max_norm &&
             rep.min_outflow > floors.flow * max_norm;
  return rep;
}

/// Polar velocity (dr/ds, dphi/ds) of an analytic field on the exact annulus.
template <PlanarField F>
Vec2 polar_velocity(const F& f, double r, double phi) {
  const Vec2 b = polar_frame(phi).transpose() * f.cartesian(polar_to_cartesian(r, phi));
  return {b.x(), b.y() / r};
}

}  // namespace mhs
