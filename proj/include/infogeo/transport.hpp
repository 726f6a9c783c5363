#pragma once

// Integral curves of grad u_theta, line-integral obstructions to the transport
// equation grad u . grad y = psi, its characteristic solve, and kernel
// elements built from first integrals.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "infogeo/ode.hpp"
#include "infogeo/score.hpp"

namespace infogeo {

enum class Direction { forward, backward };
enum class Termination { boundary_exit, critical_point, step_limit };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::boundary_exit: return "boundary_exit";
    case Termination::critical_point: return "critical_point";
    default: return "step_limit";
  }
}

struct TraceOptions {
  double ode_tol = 1e-8;
  double crit_rel = 1e-6;     ///< critical point when |grad u| < crit_rel * max |grad u|
  double dist_tol = 1e-9;     ///< boundary exits are located to this distance
  int max_steps = 20000;
  bool allow_unclassified = false;
};

struct CurveSample {
  double t = 0.0;
  Point p;
  Point v;              ///< dgamma/dt in the traced direction
  double payload = 0.0; ///< accumulated integral of the payload along the curve
};

/// Polyline (t_j, gamma(t_j)) with t measured in the traced direction.
struct IntegralCurve {
  Point seed;
  Direction direction = Direction::forward;
  std::vector<CurveSample> samples;
  Termination termination = Termination::step_limit;
  double travel_time = 0.0;

  Point end() const { return samples.back().p; }
  double payload() const { return samples.back().payload; }
};

using PointFunction = std::function<double(Point)>;

namespace detail {

// Tracer without the interior precondition, so that characteristics can also
// be started on boundary nodes.
inline IntegralCurve trace(const ScoreContext& ctx, Point x0, Direction dir, const TraceOptions& opt,
                           const PointFunction& payload) {
  const Grid& g = ctx.grid();
  const VectorField& gu = ctx.grad_u();
  const double sign = dir == Direction::forward ? 1.0 : -1.0;
  const double crit = opt.crit_rel * gu.max_norm();
  const double cap = 0.5 * g.h_mesh();

  auto velocity = [&](Point p) { return sign * interpolate(gu, g.clamp_inside(p)); };
  auto rhs = [&](double, const OdeState<3>& s) {
    Point p{s[0], s[1]};
    Point v = velocity(p);
    double q = payload ? payload(g.clamp_inside(p)) : 0.0;
    return OdeState<3>{v.x, v.y, q};
  };

  IntegralCurve c;
  c.seed = x0;
  c.direction = dir;
  OdeState<3> y{x0.x, x0.y, 0.0};
  double t = 0.0;
  c.samples.push_back({0.0, x0, velocity(x0), 0.0});
  double h = -1.0;
  OdeState<3> y5, err;

  for (int step = 0; step < opt.max_steps; ++step) {
    Point p{y[0], y[1]};
    Point v = velocity(p);
    double speed = v.norm();
    if (speed < crit) {
      c.termination = Termination::critical_point;
      c.travel_time = t;
      return c;
    }
    if (h < 0) h = 0.1 * g.h_mesh() / speed;
    h = std::min(h, cap / speed);

    DormandPrince::step<3>(rhs, t, y, h, y5, err);
    double en = DormandPrince::error_norm<3>(y, y5, err, opt.ode_tol, opt.ode_tol);
    if (en > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      continue;
    }
    if (g.boundary_distance({y5[0], y5[1]}) < 0.0) {
      // bisect on the step size for the boundary crossing
      double lo = 0.0, hi = h;
      OdeState<3> ylo = y;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        OdeState<3> ym, em;
        DormandPrince::step<3>(rhs, t, y, mid, ym, em);
        double dist = g.boundary_distance({ym[0], ym[1]});
        if (dist < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          ylo = ym;
          if (dist <= opt.dist_tol) break;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, t)) break;
      }
      t += lo;
      Point pe{ylo[0], ylo[1]};
      c.samples.push_back({t, pe, velocity(pe), ylo[2]});
      c.termination = Termination::boundary_exit;
      c.travel_time = t;
      return c;
    }
    t += h;
    y = y5;
    Point pn{y[0], y[1]};
    c.samples.push_back({t, pn, velocity(pn), y[2]});
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-12), -0.2)));
  }
  c.termination = Termination::step_limit;
  c.travel_time = t;
  if (!opt.allow_unclassified) throw TraceError("curve trace reached the step limit without classification");
  return c;
}

}  // namespace detail

/// Integral curve of grad u_theta (forward) or -grad u_theta (backward) from
/// an interior point, until boundary exit, critical point or step limit.
/// `payload`, when given, is integrated along the curve (see CurveSample).
inline IntegralCurve trace_curve(const ScoreContext& ctx, Point x0, Direction dir, const TraceOptions& opt = {},
                                 const PointFunction& payload = nullptr) {
  if (!(ctx.grid().boundary_distance(x0) > 0.0)) throw PreconditionError("trace_curve: seed must be an interior point");
  return detail::trace(ctx, x0, dir, opt, payload);
}

namespace detail {

inline constexpr double kGaussNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                          0.9061798459386640};
inline constexpr double kGaussWeights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                            0.4786286704993665, 0.2369268850561891};

}  // namespace detail

/// Integral of psi over the curve's time parameter. Between samples the curve
/// is reconstructed by cubic Hermite interpolation (positions and velocities)
/// and integrated with 5-point Gauss-Legendre.
template <class F>
  requires std::invocable<F, Point>
double line_integral(F&& psi, const IntegralCurve& curve) {
  double total = 0.0;
  for (size_t j = 0; j + 1 < curve.samples.size(); ++j) {
    const auto& a = curve.samples[j];
    const auto& b = curve.samples[j + 1];
    double dt = b.t - a.t;
    if (dt <= 0.0) continue;
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) {
      double s = 0.5 * (detail::kGaussNodes[q] + 1.0);
      double s2 = s * s, s3 = s2 * s;
      double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
      Point p = h00 * a.p + (h10 * dt) * a.v + h01 * b.p + (h11 * dt) * b.v;
      acc += detail::kGaussWeights[q] * psi(p);
    }
    total += 0.5 * dt * acc;
  }
  return total;
}

inline double line_integral(const ScalarField& psi, const IntegralCurve& curve) {
  const Grid& g = psi.grid();
  return line_integral([&](Point p) { return interpolate(psi, g.clamp_inside(p)); }, curve);
}

/// Integral of psi along the ray {z e^t : t_min <= t <= 0} for a point z on the
/// unit circle, with e^{t_min} = r_support_min / 2. Composite Gauss-Legendre
/// on `panels` equal pieces.
template <class F>
  requires std::invocable<F, Point>
double ray_integral_disk(F&& psi, Point z, double r_support_min, int panels = 400) {
  if (std::abs(z.norm() - 1.0) > 1e-12) throw PreconditionError("ray_integral_disk: z must lie on the unit circle");
  if (!(r_support_min > 0.0)) throw PreconditionError("ray_integral_disk: support touches the origin");
  const double t_min = std::log(r_support_min / 2.0);
  const double dt = -t_min / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    double a = t_min + k * dt;
    for (int q = 0; q < 5; ++q) {
      double t = a + 0.5 * dt * (detail::kGaussNodes[q] + 1.0);
      total += 0.5 * dt * detail::kGaussWeights[q] * psi(std::exp(t) * z);
    }
  }
  return total;
}

/// Ray integral of a grid field on the polar grid. Panels break at every ring
/// radius, where the polar-bilinear interpolant is smooth in between. Values
/// below 1e-13 of the max norm (solver roundoff) do not count as support.
inline double ray_integral_disk(const ScalarField& psi, Point z) {
  const Grid& g = psi.grid();
  if (!g.is_disk()) throw PreconditionError("ray_integral_disk: field must live on the disk grid");
  if (std::abs(z.norm() - 1.0) > 1e-12) throw PreconditionError("ray_integral_disk: z must lie on the unit circle");
  int inner = g.n1();
  const double floor = 1e-13 * psi.max_abs();
  for (int k = 0; k < g.num_nodes(); ++k)
    if (std::abs(psi[k]) > floor) inner = std::min(inner, k / g.n2());
  if (inner == g.n1()) return 0.0;
  if (inner == 0) throw PreconditionError("ray_integral_disk: support touches the origin");
  // the interpolant vanishes inside ring inner-1
  std::vector<double> breaks;
  for (int i = inner - 1; i < g.n1(); ++i) breaks.push_back(std::log(g.ring_radius(i)));
  breaks.back() = 0.0;
  double total = 0.0;
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    double a = breaks[k], dt = breaks[k + 1] - a;
    for (int q = 0; q < 5; ++q) {
      double t = a + 0.5 * dt * (detail::kGaussNodes[q] + 1.0);
      total += 0.5 * dt * detail::kGaussWeights[q] * interpolate(psi, std::exp(t) * z);
    }
  }
  return total;
}

enum class RangeStatus { incompatible, compatible_within_tol, constant_offset_detected };

inline std::string to_string(RangeStatus s) {
  switch (s) {
    case RangeStatus::incompatible: return "incompatible";
    case RangeStatus::compatible_within_tol: return "compatible_within_tol";
    default: return "constant_offset_detected";
  }
}

/// Both incompatible and constant_offset_detected rule out a transport
/// solution.
inline bool is_out_of_range(RangeStatus s) { return s != RangeStatus::compatible_within_tol; }

enum class CurveTopology {
  boundary_to_boundary,  ///< non-trapping field (or saddle): curves run between boundary points
  radial_rays            ///< sink at the origin: rays from the origin to the unit circle
};

struct SeedStrategy {
  CurveTopology topology = CurveTopology::boundary_to_boundary;
  int lattice = 16;   ///< lattice seeds per axis
  int targeted = 64;  ///< extra seeds placed where |psi| is large
  int rays = 64;      ///< boundary points for radial_rays
  TraceOptions trace;
};

struct CurveIntegral {
  Point seed;
  double integral = 0.0;
};

struct RangeVerdict {
  RangeStatus status = RangeStatus::compatible_within_tol;
  std::vector<CurveIntegral> curves;
  double max_abs_integral = 0.0;
  double spread = 0.0;  ///< max - min over rays (radial topology)
  double integral_tol = 0.0;
  int seeds = 0;
  int trapped = 0;       ///< curves ending at a critical point
  int unclassified = 0;  ///< curves hitting the step limit
};

inline RangeVerdict range_verdict(const ScoreContext& ctx, const ScalarField& psi, const SeedStrategy& strat = {}) {
  ctx.require(psi);
  const Grid& g = ctx.grid();
  RangeVerdict out;
  out.integral_tol = 1e-4 * psi.max_abs();
  const double tol = out.integral_tol;

  if (strat.topology == CurveTopology::radial_rays) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool witness = false;
    for (int k = 0; k < strat.rays; ++k) {
      double a = 2.0 * std::numbers::pi * k / strat.rays;
      Point z{std::cos(a), std::sin(a)};
      double v = ray_integral_disk(psi, z);
      out.curves.push_back({z, v});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      out.max_abs_integral = std::max(out.max_abs_integral, std::abs(v));
      if (std::abs(v) <= tol) witness = true;
    }
    out.seeds = strat.rays;
    out.spread = hi - lo;
    if (out.spread <= 10.0 * tol)
      out.status = RangeStatus::compatible_within_tol;
    else if (witness && out.max_abs_integral > 10.0 * tol)
      out.status = RangeStatus::constant_offset_detected;
    else
      out.status = RangeStatus::incompatible;
    return out;
  }

  std::vector<Point> seeds;
  double lo = g.is_disk() ? -1.0 : 1.0;
  for (int i = 0; i < strat.lattice; ++i)
    for (int j = 0; j < strat.lattice; ++j) {
      // offset by an irrational fraction so seeds avoid symmetry axes
      Point p{lo + (i + 0.5 + 0.1180339887) / strat.lattice * (g.is_disk() ? 2.0 : 1.0),
              lo + (j + 0.5 + 0.0527864045) / strat.lattice * (g.is_disk() ? 2.0 : 1.0)};
      if (g.boundary_distance(p) > g.collar_width()) seeds.push_back(p);
    }
  {
    std::vector<int> strong;
    double m = psi.max_abs();
    for (int k = 0; k < g.num_nodes(); ++k)
      if (!g.is_boundary(k) && std::abs(psi[k]) >= 0.25 * m) strong.push_back(k);
    int take = std::min<int>(strat.targeted, static_cast<int>(strong.size()));
    for (int s = 0; s < take; ++s) seeds.push_back(g.node(strong[(static_cast<size_t>(s) * strong.size()) / take]));
  }
  TraceOptions topt = strat.trace;
  topt.allow_unclassified = true;
  for (Point s : seeds) {
    auto back = trace_curve(ctx, s, Direction::backward, topt);
    auto fwd = trace_curve(ctx, s, Direction::forward, topt);
    ++out.seeds;
    if (back.termination == Termination::step_limit || fwd.termination == Termination::step_limit) {
      ++out.unclassified;
      continue;
    }
    if (back.termination == Termination::critical_point || fwd.termination == Termination::critical_point) {
      ++out.trapped;
      continue;
    }
    double v = line_integral(psi, back) + line_integral(psi, fwd);
    out.curves.push_back({s, v});
    out.max_abs_integral = std::max(out.max_abs_integral, std::abs(v));
  }
  if (out.unclassified > 0.05 * out.seeds) throw TraceError("range_verdict: more than 5% of curves unclassified");
  out.status = out.max_abs_integral <= 10.0 * tol ? RangeStatus::compatible_within_tol : RangeStatus::incompatible;
  return out;
}

/// Minimum of |grad u_theta| over grid nodes (the gradient lower bound).
inline double gradient_floor(const ScoreContext& ctx) {
  const auto& gu = ctx.grad_u();
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < gu.x.size(); ++k) m = std::min(m, std::hypot(gu.x[k], gu.y[k]));
  return m;
}

struct TransportSolution {
  ScalarField y;
  double outflow_mismatch = 0.0;  ///< max over outflow boundary nodes of |y|
  int worst_node = -1;
};

/// Characteristic solve of grad u . grad y = psi with y = 0 on the inflow
/// boundary: y at each node is the integral of psi along the backward curve.
/// The outflow values measure the obstruction to a zero-boundary solution.
inline TransportSolution solve_transport(const ScoreContext& ctx, const ScalarField& psi, TraceOptions opt = {}) {
  ctx.require(psi);
  const Grid& g = ctx.grid();
  if (g.is_disk()) throw PreconditionError("solve_transport: requires the non-trapping square configuration");
  if (!(gradient_floor(ctx) > 0.0)) throw PreconditionError("solve_transport: gradient lower bound fails");
  FieldSampler sample{&psi};
  TransportSolution out{ScalarField(ctx.grid_ptr()), 0.0, -1};
  opt.allow_unclassified = false;
  for (int k = 0; k < g.num_nodes(); ++k) {
    auto c = detail::trace(ctx, g.node(k), Direction::backward, opt, sample);
    if (c.termination == Termination::critical_point)
      throw TraceError("solve_transport: characteristic reached a critical point");
    out.y[k] = c.payload();
    if (g.is_boundary(k)) {
      Point n = g.outward_normal(g.node(k));
      Point v = ctx.grad_u().at(k);
      if (v.dot(n) > 0.0 && std::abs(out.y[k]) > out.outflow_mismatch) {
        out.outflow_mismatch = std::abs(out.y[k]);
        out.worst_node = k;
      }
    }
  }
  return out;
}

/// Backward characteristic through node k (boundary nodes allowed), as used by
/// solve_transport.
inline IntegralCurve characteristic(const ScoreContext& ctx, int node, const TraceOptions& opt = {}) {
  return detail::trace(ctx, ctx.grid().node(node), Direction::backward, opt, nullptr);
}

struct KernelElement {
  ScalarField h;
  ScalarField r;
  double residual = 0.0;  ///< |div(h grad u)|_{L^2} / |h|_{L^2}
};

/// h = e^{-r} F where grad u . grad r = Laplacian(u) with r = 0 on the inflow
/// boundary and F is constant along integral curves. Throws if F varies along
/// any traced curve by more than `first_integral_tol` (relative).
template <class F>
KernelElement kernel_element(const ScoreContext& ctx, F&& first_integral, double first_integral_tol = 1e-6,
                             TraceOptions opt = {}) {
  const Grid& g = ctx.grid();
  // Laplacian of u in the face form used by T (so T(1) = lap exactly).
  // Boundary nodes copy the adjacent interior value, as T does for h.
  ScalarField lap = laplacian(ctx.u());
  if (g.is_disk()) {
    for (int j = 0; j < g.n2(); ++j) lap[g.index(g.n1() - 1, j)] = lap[g.index(g.n1() - 2, j)];
  } else {
    const int n = g.n1();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (g.is_boundary(g.index(i, j)))
          lap[g.index(i, j)] = lap[g.index(std::clamp(i, 1, n - 2), std::clamp(j, 1, n - 2))];
  }
  FieldSampler sample{&lap};
  KernelElement out{ScalarField(ctx.grid_ptr()), ScalarField(ctx.grid_ptr()), 0.0};
  opt.allow_unclassified = false;
  for (int k = 0; k < g.num_nodes(); ++k) {
    Point x = g.node(k);
    auto c = detail::trace(ctx, x, Direction::backward, opt, sample);
    double f0 = first_integral(x);
    double dev = 0.0;
    for (const auto& s : c.samples) dev = std::max(dev, std::abs(first_integral(s.p) - f0));
    if (dev > first_integral_tol * std::max(1.0, std::abs(f0)))
      throw PreconditionError("kernel_element: F is not constant along integral curves");
    out.r[k] = c.payload();
    out.h[k] = std::exp(-out.r[k]) * f0;
  }
  out.residual = norm_l2(ctx.apply_T_full(out.h)) / norm_l2(out.h);
  return out;
}

}  // namespace infogeo
