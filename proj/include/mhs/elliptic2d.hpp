#pragma once

// Poisson and Laplace solves on the annulus, one radial Euler-Cauchy problem
// per Fourier mode, and a divergence-form solver for pulled-back metrics.

#include <Eigen/LU>

#include <map>
#include <memory>
#include <mutex>

#include "mhs/geometry.hpp"
#include "mhs/spectral.hpp"

namespace mhs {

/// Radial differentiation on a grid: spectral on Chebyshev nodes, second
/// order central (with 4-point one-sided rows at the ends) on uniform nodes.
class RadialCalculus {
 public:
  RadialCalculus(std::vector<double> r, RadialSpacing spacing) : r_(std::move(r)), spacing_(spacing) {
    const int n = static_cast<int>(r_.size());
    if (n < 4) throw PreconditionError("RadialCalculus needs at least 4 nodes");
    if (spacing_ == RadialSpacing::chebyshev) {
      d1_ = differentiation_matrix(r_, cgl_weights(n));
      d2_ = d1_ * d1_;
    } else {
      d1_ = RealMatrix::Zero(n, n);
      d2_ = RealMatrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        int start = i - 1;
        int width = 3;
        if (i == 0) {
          start = 0;
          width = 4;
        } else if (i == n - 1) {
          start = n - 4;
          width = 4;
        }
        std::vector<double> nodes(r_.begin() + start, r_.begin() + start + width);
        auto w = fornberg_weights(r_[i], nodes, 2);
        for (int s = 0; s < width; ++s) {
          d1_(i, start + s) = w(s, 1);
          d2_(i, start + s) = w(s, 2);
        }
      }
    }
  }

  const std::vector<double>& r() const { return r_; }
  int size() const { return static_cast<int>(r_.size()); }
  RadialSpacing spacing() const { return spacing_; }
  const RealMatrix& d1() const { return d1_; }
  const RealMatrix& d2() const { return d2_; }
  /// Row computing d/dr at r = 1.
  RealVector inner_row() const { return d1_.row(0).transpose(); }
  RealVector outer_row() const { return d1_.row(size() - 1).transpose(); }

  /// Solves p' = s with p(1) = 0.
  template <typename Derived>
  auto integrate(const Eigen::MatrixBase<Derived>& s) const {
    std::call_once(integ_once_, [this] {
      RealMatrix m = d1_;
      m.row(0).setZero();
      m(0, 0) = 1.0;
      integ_lu_ = std::make_shared<Eigen::PartialPivLU<RealMatrix>>(m);
    });
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rhs = s;
    rhs.row(0).setZero();
    if constexpr (std::is_same_v<Scalar, double>) {
      return RealMatrix(integ_lu_->solve(rhs));
    } else {
      ComplexMatrix out(rhs.rows(), rhs.cols());
      out.real() = integ_lu_->solve(RealMatrix(rhs.real()));
      out.imag() = integ_lu_->solve(RealMatrix(rhs.imag()));
      return out;
    }
  }

 private:
  std::vector<double> r_;
  RadialSpacing spacing_;
  RealMatrix d1_, d2_;
  mutable std::once_flag integ_once_;
  mutable std::shared_ptr<Eigen::PartialPivLU<RealMatrix>> integ_lu_;
};

/// Solver for u'' + u'/r - k^2 u / r^2 = s on [1, L] with Dirichlet ends.
/// Chebyshev grids use a cached dense LU per |k|; uniform grids use the
/// tridiagonal Thomas algorithm.
class RadialModeSolver {
 public:
  RadialModeSolver(std::vector<double> r, RadialSpacing spacing)
      : calc_(std::make_shared<RadialCalculus>(std::move(r), spacing)) {}

  const RadialCalculus& calculus() const { return *calc_; }
  int size() const { return calc_->size(); }

  ComplexVector solve(int k, const ComplexVector& source, Complex inner, Complex outer) const {
    const int n = size();
    if (source.size() != n) throw PreconditionError("RadialModeSolver: source size mismatch");
    ComplexVector rhs = source;
    rhs[0] = inner;
    rhs[n - 1] = outer;
    if (calc_->spacing() == RadialSpacing::uniform) return thomas(k, rhs);
    // boundary values eliminated into the interior right-hand side
    const auto& f = factor(std::abs(k));
    const ComplexVector b = source.segment(1, n - 2) - f.first_col.cast<Complex>() * inner -
                            f.last_col.cast<Complex>() * outer;
    ComplexVector u(n);
    u[0] = inner;
    u[n - 1] = outer;
    u.segment(1, n - 2).real() = f.lu.solve(RealVector(b.real()));
    u.segment(1, n - 2).imag() = f.lu.solve(RealVector(b.imag()));
    return u;
  }

  /// Row t with du/dr(1) = t . rhs, rhs holding (inner, s_1..s_{n-2}, outer).
  const RealVector& inner_trace_functional(int k) const {
    k = std::abs(k);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = trace_.find(k);
    if (it != trace_.end()) return it->second;
    RealMatrix m = matrix(k);
    Eigen::PartialPivLU<RealMatrix> lut(m.transpose());
    RealVector t = lut.solve(calc_->inner_row());
    return trace_.emplace(k, std::move(t)).first->second;
  }

  /// Dense collocation / difference matrix with identity boundary rows.
  RealMatrix matrix(int k) const {
    const int n = size();
    const auto& r = calc_->r();
    RealMatrix m(n, n);
    if (calc_->spacing() == RadialSpacing::chebyshev) {
      m = calc_->d2();
      for (int i = 0; i < n; ++i) {
        m.row(i) += calc_->d1().row(i) / r[i];
        m(i, i) -= double(k) * k / (r[i] * r[i]);
      }
    } else {
      m.setZero();
      for (int i = 1; i < n - 1; ++i) {
        auto [lo, di, up] = stencil(k, i);
        m(i, i - 1) = lo;
        m(i, i) = di;
        m(i, i + 1) = up;
      }
    }
    m.row(0).setZero();
    m.row(n - 1).setZero();
    m(0, 0) = 1.0;
    m(n - 1, n - 1) = 1.0;
    return m;
  }

 private:
  std::tuple<double, double, double> stencil(int k, int i) const {
    const auto& r = calc_->r();
    const double hm = r[i] - r[i - 1], hp = r[i + 1] - r[i];
    // Flux form (1/r)(r u')' on possibly nonuniform nodes; reduces to the
    // central three-point formula on a uniform grid.
    const double rm = 0.5 * (r[i] + r[i - 1]), rp = 0.5 * (r[i] + r[i + 1]);
    const double hs = 0.5 * (hm + hp);
    const double lo = rm / (hm * hs * r[i]);
    const double up = rp / (hp * hs * r[i]);
    const double di = -(lo + up) - double(k) * k / (r[i] * r[i]);
    return {lo, di, up};
  }

  ComplexVector thomas(int k, const ComplexVector& rhs) const {
    const int n = size();
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0);
    for (int i = 1; i < n - 1; ++i) std::tie(a[i], b[i], c[i]) = stencil(k, i);
    std::vector<double> cp(n);
    std::vector<Complex> dp(n);
    cp[0] = c[0] / b[0];
    dp[0] = rhs[0] / b[0];
    for (int i = 1; i < n; ++i) {
      const double den = b[i] - a[i] * cp[i - 1];
      if (den == 0.0) throw DegeneracyError("singular tridiagonal system in radial mode solve");
      cp[i] = c[i] / den;
      dp[i] = (rhs[i] - a[i] * dp[i - 1]) / den;
    }
    ComplexVector u(n);
    u[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) u[i] = dp[i] - cp[i] * u[i + 1];
    return u;
  }

  struct InteriorFactor {
    Eigen::PartialPivLU<RealMatrix> lu;
    RealVector first_col, last_col;
  };

  const InteriorFactor& factor(int k) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = lu_.find(k);
    if (it != lu_.end()) return *it->second;
    const int n = size();
    const RealMatrix m = matrix(k);
    auto f = std::make_unique<InteriorFactor>(InteriorFactor{
        Eigen::PartialPivLU<RealMatrix>(m.block(1, 1, n - 2, n - 2)), m.col(0).segment(1, n - 2),
        m.col(n - 1).segment(1, n - 2)});
    return *lu_.emplace(k, std::move(f)).first->second;
  }

  std::shared_ptr<RadialCalculus> calc_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::unique_ptr<InteriorFactor>> lu_;
  mutable std::map<int, RealVector> trace_;
};

struct ModeProfile {
  int k = 0;
  std::vector<double> r;
  ComplexVector values;
};

/// Two-point BVP r^2 u'' + r u' - k^2 u = r^2 s(r), u(1) = bc.first, u(L) = bc.second.
template <typename Source>
ModeProfile solve_poisson_mode(int k, Source&& source, std::pair<Complex, Complex> bc, double L, int n_r,
                               RadialSpacing spacing = RadialSpacing::uniform) {
  if (n_r < 16) throw PreconditionError("solve_poisson_mode: N_r must be at least 16");
  AnnulusSpec{L}.validate();
  RadialModeSolver solver(radial_nodes(L, n_r, spacing), spacing);
  ModeProfile p;
  p.k = k;
  p.r = solver.calculus().r();
  ComplexVector s(n_r);
  for (int i = 0; i < n_r; ++i) s[i] = source(p.r[i]);
  p.values = solver.solve(k, s, bc.first, bc.second);
  return p;
}

struct ScalarField2D {
  TensorGrid2D grid;
  RealMatrix values;  // N_r x N_phi

  ComplexMatrix modes() const { return rows_forward(values); }
};

/// Grid-bound Poisson solver; radial operators are cached across calls.
class PoissonSolver {
 public:
  explicit PoissonSolver(TensorGrid2D grid) : grid_(std::move(grid)), radial_(grid_.r, grid_.spacing) {}

  const TensorGrid2D& grid() const { return grid_; }
  const RadialModeSolver& radial() const { return radial_; }

  /// Mode coefficients (FFT order) of the solution of Delta u = source.
  ComplexMatrix solve_modes(const ComplexMatrix& source_modes, const BoundaryFourier& inner,
                            const BoundaryFourier& outer) const {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    AngularTransform t(np);
    ComplexMatrix out(nr, np);
    parallel_for(np, [&](std::ptrdiff_t slot) {
      const int m = t.mode_of(static_cast<int>(slot));
      out.col(slot) = radial_.solve(m, source_modes.col(slot), inner[m], outer[m]);
    });
    return out;
  }

  ScalarField2D solve(const RealMatrix& source, const BoundaryFourier& inner, const BoundaryFourier& outer) const {
    check_shape(source);
    ScalarField2D u{grid_, rows_inverse(solve_modes(rows_forward(source), inner, outer)).real()};
    return u;
  }

  /// Outward normal derivative on r = 1 of a nodal field, as modes |k| <= K.
  BoundaryFourier neumann_trace_inner(const RealMatrix& u, int K = -1) const {
    check_shape(u);
    if (K < 0) K = grid_.K;
    const RealVector row = radial_.calculus().inner_row();
    std::vector<Complex> trace(grid_.n_phi);
    for (int j = 0; j < grid_.n_phi; ++j) trace[j] = kInnerRadialSign * row.dot(u.col(j));
    return BoundaryFourier::from_samples(trace, K);
  }

 private:
  void check_shape(const RealMatrix& m) const {
    if (m.rows() != grid_.n_r() || m.cols() != grid_.n_phi)
      throw PreconditionError("nodal field does not match the grid");
  }
  TensorGrid2D grid_;
  RadialModeSolver radial_;
};

inline ScalarField2D solve_poisson(const RealMatrix& source, const BoundaryFourier& inner,
                                   const BoundaryFourier& outer, const TensorGrid2D& grid) {
  return PoissonSolver(grid).solve(source, inner, outer);
}

inline BoundaryFourier neumann_trace_inner(const ScalarField2D& u) {
  return PoissonSolver(u.grid).neumann_trace_inner(u.values);
}

inline ScalarField2D harmonic_extension(const BoundaryFourier& h_minus, const BoundaryFourier& h_plus,
                                        const TensorGrid2D& grid) {
  return solve_poisson(RealMatrix::Zero(grid.n_r(), grid.n_phi), h_minus, h_plus, grid);
}

/// Metric data of y(r, phi) = gamma(r e_r(phi)) in reference polar coordinates.
struct PolarMetric {
  double sqrt_g = 0.0;  // det of the polar Jacobian
  Mat2 g_inv;           // G^{ab}, a, b in (r, phi)
};

inline PolarMetric polar_metric(const PlanarDomain& dom, double r, double phi) {
  const Mat2 jq = dom.polar_jacobian(r, phi);
  const double det = jq.determinant();
  if (det <= 0.0) throw OrientationError("map is not orientation preserving");
  const Mat2 g = jq.transpose() * jq;
  return {det, g.inverse()};
}

/// Divergence-form solver d_a(sqrt G G^{ab} d_b v) = sqrt G j on the reference
/// annulus: flux form at radial half-nodes, Fourier collocation in phi, central
/// mixed terms. Solved by restarted GMRES preconditioned with the
/// angle-averaged per-mode operator.
class VariableCoeffSolver {
 public:
  VariableCoeffSolver(TensorGrid2D grid, PlanarDomain domain, double tol = 1e-10, int max_iter = 400)
      : grid_(std::move(grid)), dom_(std::move(domain)), tol_(tol), max_iter_(max_iter) {
    if (grid_.spacing != RadialSpacing::uniform)
      throw PreconditionError("variable-coefficient solver requires a uniform radial grid");
    const int nr = grid_.n_r(), np = grid_.n_phi;
    h_ = grid_.r[1] - grid_.r[0];
    a_half_ = RealMatrix::Zero(nr - 1, np);
    sg_ = RealMatrix::Zero(nr, np);
    b_ = RealMatrix::Zero(nr, np);
    c_ = RealMatrix::Zero(nr, np);
    grr_ = RealMatrix::Zero(nr, np);
    for (int j = 0; j < np; ++j) {
      const double phi = grid_.phi(j);
      for (int i = 0; i < nr; ++i) {
        const auto m = polar_metric(dom_, grid_.r[i], phi);
        sg_(i, j) = m.sqrt_g;
        b_(i, j) = m.sqrt_g * m.g_inv(0, 1);
        c_(i, j) = m.sqrt_g * m.g_inv(1, 1);
        grr_(i, j) = m.g_inv(0, 0);
        if (i + 1 < nr) {
          const auto mh = polar_metric(dom_, 0.5 * (grid_.r[i] + grid_.r[i + 1]), phi);
          a_half_(i, j) = mh.sqrt_g * mh.g_inv(0, 0);
        }
      }
    }
    a_bar_ = a_half_.rowwise().mean();
    c_bar_ = c_.rowwise().mean();
  }

  const TensorGrid2D& grid() const { return grid_; }
  const PlanarDomain& domain() const { return dom_; }
  const RealMatrix& sqrt_g() const { return sg_; }
  int last_iterations() const { return last_iter_; }
  double last_residual() const { return last_res_; }

  /// Solves Delta_y v = j (nodal j in reference coordinates) with Dirichlet data.
  ScalarField2D solve(const RealMatrix& source, const BoundaryFourier& inner, const BoundaryFourier& outer) const {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    if (source.rows() != nr || source.cols() != np) throw PreconditionError("source does not match the grid");
    RealMatrix rhs = sg_.cwiseProduct(source);
    const auto in = inner.real_samples(np), out = outer.real_samples(np);
    for (int j = 0; j < np; ++j) {
      rhs(0, j) = in[j];
      rhs(nr - 1, j) = out[j];
    }
    RealMatrix x = gmres(rhs);
    return {grid_, x};
  }

  /// Discrete operator (Dirichlet rows are identity).
  RealMatrix apply(const RealMatrix& v) const {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    const RealMatrix vphi = angular_derivative(v);
    RealMatrix out = RealMatrix::Zero(nr, np);
    RealMatrix flux_phi = c_.cwiseProduct(vphi);
    RealMatrix vr = RealMatrix::Zero(nr, np);
    for (int i = 1; i < nr - 1; ++i) vr.row(i) = (v.row(i + 1) - v.row(i - 1)) / (2.0 * h_);
    // mixed flux b d_r v enters the phi-divergence; b d_phi v enters the r-divergence
    flux_phi += b_.cwiseProduct(vr);
    const RealMatrix div_phi = angular_derivative(flux_phi);
    const RealMatrix bvphi = b_.cwiseProduct(vphi);
    for (int i = 1; i < nr - 1; ++i) {
      out.row(i) = (a_half_.row(i).cwiseProduct(v.row(i + 1) - v.row(i)) -
                    a_half_.row(i - 1).cwiseProduct(v.row(i) - v.row(i - 1))) /
                       (h_ * h_) +
                   div_phi.row(i) + (bvphi.row(i + 1) - bvphi.row(i - 1)) / (2.0 * h_);
    }
    out.row(0) = v.row(0);
    out.row(nr - 1) = v.row(nr - 1);
    return out;
  }

  /// Outward normal derivative of v on the inner image curve, as a function of
  /// the reference angle: -sqrt(G^{rr}) d_r v (v constant along the curve).
  std::vector<double> inner_normal_derivative(const RealMatrix& v) const {
    const int np = grid_.n_phi;
    std::vector<double> nodes(grid_.r.begin(), grid_.r.begin() + 4);
    const auto w = fornberg_weights(grid_.r[0], nodes, 1);
    const RealMatrix vphi = angular_derivative(v);
    std::vector<double> out(np);
    for (int j = 0; j < np; ++j) {
      double dr = 0.0;
      for (int s = 0; s < 4; ++s) dr += w(s, 1) * v(s, j);
      // general form -(G^{rr} d_r v + G^{r phi} d_phi v) / sqrt(G^{rr})
      const double grp = b_(0, j) / sg_(0, j);
      out[j] = -(grr_(0, j) * dr + grp * vphi(0, j)) / std::sqrt(grr_(0, j));
    }
    return out;
  }

 private:
  RealMatrix precondition(const RealMatrix& rhs) const {
    const int nr = grid_.n_r(), np = grid_.n_phi;
    ComplexMatrix modes = rows_forward(rhs);
    AngularTransform t(np);
    for (int slot = 0; slot < np; ++slot) {
      const int m = t.mode_of(slot);
      std::vector<double> a(nr, 0.0), b(nr, 1.0), c(nr, 0.0);
      for (int i = 1; i < nr - 1; ++i) {
        a[i] = a_bar_[i - 1] / (h_ * h_);
        c[i] = a_bar_[i] / (h_ * h_);
        b[i] = -(a[i] + c[i]) - (2 * std::abs(m) == np ? 0.0 : double(m) * m) * c_bar_[i];
      }
      std::vector<double> cp(nr);
      std::vector<Complex> dp(nr);
      cp[0] = c[0] / b[0];
      dp[0] = modes(0, slot) / b[0];
      for (int i = 1; i < nr; ++i) {
        const double den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (modes(i, slot) - a[i] * dp[i - 1]) / den;
      }
      modes(nr - 1, slot) = dp[nr - 1];
      for (int i = nr - 2; i >= 0; --i) modes(i, slot) = dp[i] - cp[i] * modes(i + 1, slot);
    }
    return rows_inverse(modes).real();
  }

  RealMatrix gmres(const RealMatrix& rhs) const {
    const int restart = 40;
    const double bnorm = std::max(rhs.norm(), 1e-300);
    RealMatrix x = precondition(rhs);
    int total = 0;
    double res = 0.0;
    while (total < max_iter_) {
      RealMatrix r0 = rhs - apply(x);
      double beta = r0.norm();
      res = beta / bnorm;
      if (res < tol_) break;
      std::vector<RealMatrix> v{r0 / beta}, z;
      RealMatrix hess = RealMatrix::Zero(restart + 1, restart);
      std::vector<double> cs(restart), sn(restart), g(restart + 1, 0.0);
      g[0] = beta;
      int k = 0;
      for (; k < restart && total < max_iter_; ++k, ++total) {
        z.push_back(precondition(v[k]));
        RealMatrix w = apply(z[k]);
        for (int i = 0; i <= k; ++i) {
          hess(i, k) = (w.array() * v[i].array()).sum();
          w -= hess(i, k) * v[i];
        }
        hess(k + 1, k) = w.norm();
        v.push_back(hess(k + 1, k) > 0 ? RealMatrix(w / hess(k + 1, k)) : w);
        for (int i = 0; i < k; ++i) {
          const double t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
          hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
          hess(i, k) = t;
        }
        const double den = std::hypot(hess(k, k), hess(k + 1, k));
        cs[k] = hess(k, k) / den;
        sn[k] = hess(k + 1, k) / den;
        hess(k, k) = den;
        hess(k + 1, k) = 0.0;
        g[k + 1] = -sn[k] * g[k];
        g[k] = cs[k] * g[k];
        if (std::abs(g[k + 1]) / bnorm < tol_) {
          ++k;
          ++total;
          break;
        }
      }
      RealVector y(k);
      for (int i = k - 1; i >= 0; --i) {
        double s = g[i];
        for (int j = i + 1; j < k; ++j) s -= hess(i, j) * y[j];
        y[i] = s / hess(i, i);
      }
      for (int i = 0; i < k; ++i) x += y[i] * z[i];
    }
    res = (rhs - apply(x)).norm() / bnorm;
    last_iter_ = total;
    last_res_ = res;
    if (!(res < 10 * tol_))
      throw ConvergenceError("variable-coefficient solve did not converge, relative residual " + std::to_string(res));
    return x;
  }

  TensorGrid2D grid_;
  PlanarDomain dom_;
  double tol_;
  int max_iter_;
  double h_ = 0.0;
  RealMatrix a_half_, sg_, b_, c_, grr_;
  RealVector a_bar_, c_bar_;
  mutable int last_iter_ = 0;
  mutable double last_res_ = 0.0;
};

inline ScalarField2D solve_variable_coeff(const RealMatrix& source, const DiffeoMap& map,
                                          std::pair<BoundaryFourier, BoundaryFourier> dirichlet,
                                          const TensorGrid2D& grid) {
  PlanarDomain dom{grid.outer_radius, map};
  return VariableCoeffSolver(grid, dom).solve(source, dirichlet.first, dirichlet.second);
}

}  // namespace mhs
