#pragma once

// Discretized model domains, grid fields and the finite-difference calculus
// shared by every other module.
//
// Two domains are supported:
//   * square_shifted: the unit-area square [1,2]^2 on a uniform n x n node grid;
//   * unit_disk: a polar tensor grid with cell-centred radii r_i = (i+1/2) dr,
//     the outermost ring sitting on r = 1.
// Lebesgue measure is normalized to a probability (divided by the area), so
// quadrature weights always sum to one.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "infogeo/errors.hpp"

namespace infogeo {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  double norm() const { return std::hypot(x, y); }
  double dot(Point o) const { return x * o.x + y * o.y; }
};

enum class DomainKind { square_shifted, unit_disk };

inline std::string to_string(DomainKind kind) {
  return kind == DomainKind::square_shifted ? "square_shifted" : "unit_disk";
}

inline constexpr int kMinResolution = 8;

struct DomainSpec {
  DomainKind kind = DomainKind::square_shifted;
  int n1 = 0;  ///< square: nodes per axis; disk: radial nodes (n_r)
  int n2 = 0;  ///< square: equal to n1; disk: angular nodes (n_theta, even)

  static DomainSpec square(int n) { return {DomainKind::square_shifted, n, n}; }
  static DomainSpec disk(int n_r, int n_theta) { return {DomainKind::unit_disk, n_r, n_theta}; }

  /// Maps a single "resolution" N onto a spec. For the disk, N nodes across a
  /// diameter become (N/2 + 1) rings and 2*(N/2) angles.
  static DomainSpec from_resolution(DomainKind kind, int n) {
    if (kind == DomainKind::square_shifted) return square(n);
    return disk(n / 2 + 1, 2 * (n / 2));
  }

  double measure_normalization() const {
    return kind == DomainKind::square_shifted ? 1.0 : std::numbers::pi;
  }
};

/// A pair of neighbouring nodes sharing a cell face. `a` is always interior.
/// `coef` is the face conductance of the stiffness form, already divided by the
/// domain area: the divergence-form operator with coefficient c contributes
/// c_face * coef * (u_a - u_b) to row a of the (normalized) stiffness matrix.
struct Face {
  int a = 0;
  int b = 0;
  double coef = 0.0;
  bool b_interior = false;
};

class Grid {
public:
  explicit Grid(const DomainSpec& spec) : spec_(spec) {
    if (spec.n1 < kMinResolution || spec.n2 < kMinResolution)
      throw PreconditionError("grid resolution must be at least 8 nodes per axis");
    if (spec.kind == DomainKind::square_shifted) {
      if (spec.n1 != spec.n2) throw PreconditionError("square grids use equal resolution per axis");
      build_square();
    } else {
      if (spec.n2 % 2 != 0) throw PreconditionError("disk grids need an even number of angles");
      build_disk();
    }
    build_interior_index();
  }

  const DomainSpec& spec() const { return spec_; }
  DomainKind kind() const { return spec_.kind; }
  bool is_disk() const { return spec_.kind == DomainKind::unit_disk; }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_interior() const { return static_cast<int>(interior_nodes_.size()); }

  const std::vector<Point>& nodes() const { return nodes_; }
  Point node(int k) const { return nodes_[k]; }
  bool is_boundary(int k) const { return boundary_[k]; }
  bool in_collar(int k) const { return collar_[k]; }
  int interior_index(int k) const { return interior_index_[k]; }
  int interior_node(int dof) const { return interior_nodes_[dof]; }

  /// Quadrature weights of the normalized measure, one per node.
  const Eigen::VectorXd& quad_weights() const { return weights_; }
  /// Weights restricted to interior nodes, in dof order.
  const Eigen::VectorXd& interior_weights() const { return interior_weights_; }
  const std::vector<Face>& faces() const { return faces_; }

  /// Square: mesh width h. Disk: radial step dr.
  double spacing1() const { return d1_; }
  /// Square: mesh width h. Disk: angular step dtheta.
  double spacing2() const { return d2_; }
  double h_mesh() const { return std::max(d1_, d2_); }

  /// Structured index: square (i along x, j along y); disk (ring i, angle j).
  int index(int i, int j) const {
    if (is_disk()) return i * spec_.n2 + ((j % spec_.n2) + spec_.n2) % spec_.n2;
    return j * spec_.n1 + i;
  }
  int n1() const { return spec_.n1; }
  int n2() const { return spec_.n2; }

  /// Disk only: radius of ring i.
  double ring_radius(int i) const { return (i + 0.5) * d1_; }
  double angle(int j) const { return j * d2_; }

  bool contains(Point p) const {
    if (is_disk()) return p.norm() <= 1.0;
    return p.x >= 1.0 && p.x <= 2.0 && p.y >= 1.0 && p.y <= 2.0;
  }

  /// Signed distance to the boundary (positive inside).
  double boundary_distance(Point p) const {
    if (is_disk()) return 1.0 - p.norm();
    return std::min(std::min(p.x - 1.0, 2.0 - p.x), std::min(p.y - 1.0, 2.0 - p.y));
  }

  Point clamp_inside(Point p) const {
    if (is_disk()) {
      double r = p.norm();
      return r > 1.0 ? (1.0 / r) * p : p;
    }
    return {std::clamp(p.x, 1.0, 2.0), std::clamp(p.y, 1.0, 2.0)};
  }

  /// Outward unit normal at (or nearest to) a boundary point.
  Point outward_normal(Point p) const {
    if (is_disk()) return (1.0 / p.norm()) * p;
    double dl = p.x - 1.0, dr = 2.0 - p.x, db = p.y - 1.0, dt = 2.0 - p.y;
    double m = std::min(std::min(dl, dr), std::min(db, dt));
    if (m == dl) return {-1.0, 0.0};
    if (m == dr) return {1.0, 0.0};
    if (m == db) return {0.0, -1.0};
    return {0.0, 1.0};
  }

  /// Width of the boundary collar on which tangent-space fields vanish.
  double collar_width() const { return 2.0 * d1_; }

private:
  void build_square() {
    const int n = spec_.n1;
    const double h = 1.0 / (n - 1);
    d1_ = d2_ = h;
    nodes_.resize(n * n);
    boundary_.assign(n * n, false);
    collar_.assign(n * n, false);
    weights_.resize(n * n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        int k = index(i, j);
        nodes_[k] = {1.0 + i * h, 1.0 + j * h};
        bool bi = (i == 0 || i == n - 1), bj = (j == 0 || j == n - 1);
        boundary_[k] = bi || bj;
        int dist = std::min(std::min(i, n - 1 - i), std::min(j, n - 1 - j));
        collar_[k] = dist < 2;
        weights_[k] = h * h * (bi ? 0.5 : 1.0) * (bj ? 0.5 : 1.0);
      }
    }
    for (int j = 1; j < n - 1; ++j) {
      for (int i = 1; i < n - 1; ++i) {
        int a = index(i, j);
        // each interior-interior face once (to the right / upward), and every
        // interior-boundary face
        const int nbr[4][2] = {{i + 1, j}, {i, j + 1}, {i - 1, j}, {i, j - 1}};
        for (int q = 0; q < 4; ++q) {
          int b = index(nbr[q][0], nbr[q][1]);
          bool bint = !boundary_[b];
          if (bint && q >= 2) continue;
          faces_.push_back({a, b, 1.0, bint});
        }
      }
    }
  }

  void build_disk() {
    const int nr = spec_.n1, nt = spec_.n2;
    const double dr = 1.0 / (nr - 0.5);
    const double dt = 2.0 * std::numbers::pi / nt;
    d1_ = dr;
    d2_ = dt;
    const double pi = std::numbers::pi;
    nodes_.resize(nr * nt);
    boundary_.assign(nr * nt, false);
    collar_.assign(nr * nt, false);
    weights_.resize(nr * nt);
    const double outer = 1.0 - 0.5 * dr;
    const double boundary_ring_area = 0.5 * (1.0 - outer * outer) * dt;
    for (int i = 0; i < nr; ++i) {
      double r = ring_radius(i);
      for (int j = 0; j < nt; ++j) {
        int k = index(i, j);
        nodes_[k] = {r * std::cos(angle(j)), r * std::sin(angle(j))};
        boundary_[k] = (i == nr - 1);
        collar_[k] = (i >= nr - 2);
        weights_[k] = (i == nr - 1 ? boundary_ring_area : r * dr * dt) / pi;
      }
    }
    for (int i = 0; i < nr - 1; ++i) {
      double r = ring_radius(i);
      for (int j = 0; j < nt; ++j) {
        int a = index(i, j);
        // outward radial face; the inner face of ring 0 sits on r = 0 and
        // carries no flux
        int b = index(i + 1, j);
        faces_.push_back({a, b, (r + 0.5 * dr) * dt / dr / pi, !boundary_[b]});
        // counter-clockwise angular face
        int c = index(i, j + 1);
        faces_.push_back({a, c, dr / (r * dt) / pi, true});
      }
    }
  }

  void build_interior_index() {
    interior_index_.assign(nodes_.size(), -1);
    for (int k = 0; k < num_nodes(); ++k) {
      if (!boundary_[k]) {
        interior_index_[k] = static_cast<int>(interior_nodes_.size());
        interior_nodes_.push_back(k);
      }
    }
    interior_weights_.resize(num_interior());
    for (int d = 0; d < num_interior(); ++d) interior_weights_[d] = weights_[interior_nodes_[d]];
  }

  DomainSpec spec_;
  double d1_ = 0.0, d2_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<bool> boundary_;
  std::vector<bool> collar_;
  std::vector<int> interior_index_;
  std::vector<int> interior_nodes_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd interior_weights_;
  std::vector<Face> faces_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(const DomainSpec& spec) { return std::make_shared<const Grid>(spec); }

/// Real-valued grid function (one value per node).
class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(Eigen::VectorXd::Zero(grid_->num_nodes())) {}
  ScalarField(GridPtr grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->num_nodes()) throw PreconditionError("field size does not match grid");
  }

  template <class F>
  static ScalarField from_function(GridPtr grid, F&& fn) {
    Eigen::VectorXd v(grid->num_nodes());
    for (int k = 0; k < grid->num_nodes(); ++k) v[k] = fn(grid->node(k));
    return ScalarField(std::move(grid), std::move(v));
  }

  static ScalarField constant(GridPtr grid, double c) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(grid->num_nodes(), c);
    return ScalarField(std::move(grid), std::move(v));
  }

  /// Interior dof vector -> field with zero boundary values.
  static ScalarField from_interior(GridPtr grid, const Eigen::VectorXd& dofs) {
    if (dofs.size() != grid->num_interior()) throw PreconditionError("dof vector does not match grid");
    ScalarField f(grid);
    for (int d = 0; d < grid->num_interior(); ++d) f.values_[grid->interior_node(d)] = dofs[d];
    return f;
  }

  Eigen::VectorXd interior() const {
    Eigen::VectorXd d(grid_->num_interior());
    for (int i = 0; i < grid_->num_interior(); ++i) d[i] = values_[grid_->interior_node(i)];
    return d;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](int k) const { return values_[k]; }
  double& operator[](int k) { return values_[k]; }
  int size() const { return static_cast<int>(values_.size()); }

  double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }
  double min() const { return values_.minCoeff(); }

  ScalarField& operator+=(const ScalarField& o) { check(o); values_ += o.values_; return *this; }
  ScalarField& operator-=(const ScalarField& o) { check(o); values_ -= o.values_; return *this; }
  ScalarField& operator*=(double s) { values_ *= s; return *this; }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }

  bool same_grid(const ScalarField& o) const { return grid_ == o.grid_; }

  /// Zeroes the collar (boundary plus first interior ring).
  ScalarField collar_masked() const {
    ScalarField out = *this;
    for (int k = 0; k < size(); ++k)
      if (grid_->in_collar(k)) out.values_[k] = 0.0;
    return out;
  }

  bool vanishes_on_collar(double tol = 0.0) const {
    for (int k = 0; k < size(); ++k)
      if (grid_->in_collar(k) && std::abs(values_[k]) > tol) return false;
    return true;
  }

private:
  void check(const ScalarField& o) const {
    if (grid_ != o.grid_) throw GridMismatch();
  }

  GridPtr grid_;
  Eigen::VectorXd values_;
};

/// Two values per node: Cartesian components.
struct VectorField {
  GridPtr grid;
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  Point at(int k) const { return {x[k], y[k]}; }
  double max_norm() const {
    double m = 0.0;
    for (int k = 0; k < x.size(); ++k) m = std::max(m, std::hypot(x[k], y[k]));
    return m;
  }
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!a.same_grid(b)) throw GridMismatch();
}

inline double inner_l2(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  return (f.values().array() * g.values().array() * f.grid().quad_weights().array()).sum();
}

inline double norm_l2(const ScalarField& f) { return std::sqrt(inner_l2(f, f)); }

inline double inner_l2(const VectorField& f, const VectorField& g) {
  if (f.grid != g.grid) throw GridMismatch();
  const auto& w = f.grid->quad_weights();
  return (w.array() * (f.x.array() * g.x.array() + f.y.array() * g.y.array())).sum();
}

namespace detail {

// Derivative of f along the first structured axis (x on the square, r on the
// disk); central in the interior, second-order one-sided on the boundary.
inline double d_axis1(const Grid& g, const Eigen::VectorXd& f, int i, int j) {
  const int n = g.n1();
  const double h = g.spacing1();
  if (g.is_disk()) {
    if (i == 0) return (f[g.index(1, j)] - f[g.index(0, j + g.n2() / 2)]) / (2.0 * h);
    if (i == n - 1)
      return (3.0 * f[g.index(i, j)] - 4.0 * f[g.index(i - 1, j)] + f[g.index(i - 2, j)]) / (2.0 * h);
    return (f[g.index(i + 1, j)] - f[g.index(i - 1, j)]) / (2.0 * h);
  }
  if (i == 0) return (-3.0 * f[g.index(0, j)] + 4.0 * f[g.index(1, j)] - f[g.index(2, j)]) / (2.0 * h);
  if (i == n - 1)
    return (3.0 * f[g.index(i, j)] - 4.0 * f[g.index(i - 1, j)] + f[g.index(i - 2, j)]) / (2.0 * h);
  return (f[g.index(i + 1, j)] - f[g.index(i - 1, j)]) / (2.0 * h);
}

// Derivative along the second axis (y on the square, theta on the disk).
inline double d_axis2(const Grid& g, const Eigen::VectorXd& f, int i, int j) {
  const double h = g.spacing2();
  if (g.is_disk()) return (f[g.index(i, j + 1)] - f[g.index(i, j - 1)]) / (2.0 * h);
  const int n = g.n2();
  if (j == 0) return (-3.0 * f[g.index(i, 0)] + 4.0 * f[g.index(i, 1)] - f[g.index(i, 2)]) / (2.0 * h);
  if (j == n - 1)
    return (3.0 * f[g.index(i, j)] - 4.0 * f[g.index(i, j - 1)] + f[g.index(i, j - 2)]) / (2.0 * h);
  return (f[g.index(i, j + 1)] - f[g.index(i, j - 1)]) / (2.0 * h);
}

inline void partials(const Grid& g, const Eigen::VectorXd& f, Eigen::VectorXd& fx, Eigen::VectorXd& fy) {
  fx.resize(g.num_nodes());
  fy.resize(g.num_nodes());
  for (int i = 0; i < g.n1(); ++i) {
    for (int j = 0; j < g.n2(); ++j) {
      int k = g.index(i, j);
      double a = d_axis1(g, f, i, j), b = d_axis2(g, f, i, j);
      if (g.is_disk()) {
        double r = g.ring_radius(i), c = std::cos(g.angle(j)), s = std::sin(g.angle(j));
        fx[k] = c * a - s * b / r;
        fy[k] = s * a + c * b / r;
      } else {
        fx[k] = a;
        fy[k] = b;
      }
    }
  }
}

}  // namespace detail

inline VectorField grad(const ScalarField& f) {
  VectorField out{f.grid_ptr(), {}, {}};
  detail::partials(f.grid(), f.values(), out.x, out.y);
  return out;
}

inline ScalarField div(const VectorField& F) {
  const Grid& g = *F.grid;
  Eigen::VectorXd out(g.num_nodes());
  if (!g.is_disk()) {
    for (int i = 0; i < g.n1(); ++i)
      for (int j = 0; j < g.n2(); ++j)
        out[g.index(i, j)] = detail::d_axis1(g, F.x, i, j) + detail::d_axis2(g, F.y, i, j);
    return ScalarField(F.grid, std::move(out));
  }
  // polar form (1/r) d_r(r F_r) + (1/r) d_theta F_theta; r F_r is even across
  // the origin, so the ring-0 mirror stencil applies unchanged
  Eigen::VectorXd rfr(g.num_nodes()), ft(g.num_nodes());
  for (int i = 0; i < g.n1(); ++i) {
    double r = g.ring_radius(i);
    for (int j = 0; j < g.n2(); ++j) {
      int k = g.index(i, j);
      double c = std::cos(g.angle(j)), s = std::sin(g.angle(j));
      rfr[k] = r * (c * F.x[k] + s * F.y[k]);
      ft[k] = -s * F.x[k] + c * F.y[k];
    }
  }
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j)
      out[g.index(i, j)] = (detail::d_axis1(g, rfr, i, j) + detail::d_axis2(g, ft, i, j)) / g.ring_radius(i);
  return ScalarField(F.grid, std::move(out));
}

/// Discrete H^k norm, k in {0,1,2}. Second derivatives are evaluated on
/// interior nodes only.
inline double sobolev_norm(const ScalarField& f, int order) {
  if (order < 0 || order > 2) throw PreconditionError("sobolev_norm supports orders 0, 1 and 2");
  const Grid& g = f.grid();
  const auto& w = g.quad_weights();
  double sq = (w.array() * f.values().array().square()).sum();
  if (order == 0) return std::sqrt(sq);
  Eigen::VectorXd fx, fy;
  detail::partials(g, f.values(), fx, fy);
  sq += (w.array() * (fx.array().square() + fy.array().square())).sum();
  if (order == 1) return std::sqrt(sq);

  if (!g.is_disk()) {
    const double h2 = g.spacing1() * g.spacing1();
    const auto& v = f.values();
    for (int j = 1; j < g.n2() - 1; ++j) {
      for (int i = 1; i < g.n1() - 1; ++i) {
        int k = g.index(i, j);
        double fxx = (v[g.index(i + 1, j)] - 2.0 * v[k] + v[g.index(i - 1, j)]) / h2;
        double fyy = (v[g.index(i, j + 1)] - 2.0 * v[k] + v[g.index(i, j - 1)]) / h2;
        double fxy = (v[g.index(i + 1, j + 1)] - v[g.index(i + 1, j - 1)] - v[g.index(i - 1, j + 1)] +
                      v[g.index(i - 1, j - 1)]) / (4.0 * h2);
        sq += w[k] * (fxx * fxx + fxy * fxy + fyy * fyy);
      }
    }
    return std::sqrt(sq);
  }
  Eigen::VectorXd fxx, fxy, fyx, fyy;
  detail::partials(g, fx, fxx, fxy);
  detail::partials(g, fy, fyx, fyy);
  for (int k = 0; k < g.num_nodes(); ++k) {
    if (g.is_boundary(k)) continue;
    double m = 0.5 * (fxy[k] + fyx[k]);
    sq += w[k] * (fxx[k] * fxx[k] + m * m + fyy[k] * fyy[k]);
  }
  return std::sqrt(sq);
}

/// Standard mollifier exp(-1/(1-s^2)), rescaled to peak value 1 at s = 0.
inline double mollifier(double s) {
  double s2 = s * s;
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

/// Smooth non-negative bump with the given peak `amplitude`, supported in the
/// open ball B(center, radius). The ball must keep a two-cell margin from the
/// boundary so that the field vanishes on the collar.
inline ScalarField make_bump(const GridPtr& grid, Point center, double radius, double amplitude) {
  if (radius <= 0.0) throw PreconditionError("bump radius must be positive");
  double margin = grid->collar_width();
  if (grid->boundary_distance(center) - radius < margin - 1e-12)
    throw PreconditionError("bump support intersects the boundary collar");
  auto f = ScalarField::from_function(grid, [&](Point p) {
    return amplitude * mollifier((p - center).norm() / radius);
  });
  return f;
}

/// Bilinear interpolation (polar-bilinear on the disk). Points outside the
/// domain are clamped onto it.
inline double interpolate(const Grid& g, const Eigen::VectorXd& v, Point p) {
  if (!g.is_disk()) {
    const int n = g.n1();
    const double h = g.spacing1();
    double sx = (std::clamp(p.x, 1.0, 2.0) - 1.0) / h, sy = (std::clamp(p.y, 1.0, 2.0) - 1.0) / h;
    int i = std::clamp(static_cast<int>(std::floor(sx)), 0, n - 2);
    int j = std::clamp(static_cast<int>(std::floor(sy)), 0, n - 2);
    double tx = sx - i, ty = sy - j;
    return (1 - tx) * (1 - ty) * v[g.index(i, j)] + tx * (1 - ty) * v[g.index(i + 1, j)] +
           (1 - tx) * ty * v[g.index(i, j + 1)] + tx * ty * v[g.index(i + 1, j + 1)];
  }
  const int nr = g.n1(), nt = g.n2();
  const double dr = g.spacing1(), dt = g.spacing2();
  double r = std::min(p.norm(), 1.0);
  double th = std::atan2(p.y, p.x);
  if (th < 0) th += 2.0 * std::numbers::pi;
  double st = th / dt;
  int j = static_cast<int>(std::floor(st));
  double tt = st - j;
  j %= nt;
  auto ring = [&](int i) { return (1 - tt) * v[g.index(i, j)] + tt * v[g.index(i, j + 1)]; };
  double r0 = g.ring_radius(0);
  if (r < r0) {
    double origin = 0.0;
    for (int q = 0; q < nt; ++q) origin += v[g.index(0, q)];
    origin /= nt;
    return origin + (r / r0) * (ring(0) - origin);
  }
  double sr = (r - r0) / dr;
  int i = std::clamp(static_cast<int>(std::floor(sr)), 0, nr - 2);
  double tr = sr - i;
  return (1 - tr) * ring(i) + tr * ring(i + 1);
}

inline double interpolate(const ScalarField& f, Point p) { return interpolate(f.grid(), f.values(), p); }

inline Point interpolate(const VectorField& F, Point p) {
  return {interpolate(*F.grid, F.x, p), interpolate(*F.grid, F.y, p)};
}

/// Callable view of a grid field, usable wherever a point function is expected.
struct FieldSampler {
  const ScalarField* field;
  double operator()(Point p) const { return interpolate(*field, p); }
};

}  // namespace infogeo
