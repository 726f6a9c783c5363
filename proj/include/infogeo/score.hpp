#pragma once

// Linearisation of the forward map theta -> u_theta, its adjoint and the
// information operator, together with the numerical verification helpers.
//
// The discrete transport operator T h ~ div(h grad u) is written in face-flux
// form, so that I h = A^{-1} W T h is the exact derivative of the discrete
// forward map along collar-supported directions.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "infogeo/elliptic.hpp"
#include "infogeo/random_fields.hpp"

namespace infogeo {

/// u_theta for fixed source f and boundary data g.
inline ScalarField forward(const Conductivity& theta, const ScalarField& f, const ScalarField& g) {
  return solve_dirichlet(EllipticOperator(theta), f, g);
}

class ScoreContext {
public:
  ScoreContext(Conductivity theta, ScalarField f, ScalarField g)
      : op_(std::move(theta)), f_(std::move(f)), g_(std::move(g)) {
    if (f_.grid_ptr() != op_.grid_ptr() || g_.grid_ptr() != op_.grid_ptr()) throw GridMismatch();
    u_ = solve_dirichlet(op_, f_, g_, &stats_);
    grad_u_ = grad(u_);
    build_T();
  }

  const EllipticOperator& op() const { return op_; }
  const Conductivity& theta() const { return op_.conductivity(); }
  const Grid& grid() const { return op_.grid(); }
  const GridPtr& grid_ptr() const { return op_.grid_ptr(); }
  const ScalarField& u() const { return u_; }
  const ScalarField& f() const { return f_; }
  const ScalarField& g() const { return g_; }
  const VectorField& grad_u() const { return grad_u_; }
  const SolveStats& solve_stats() const { return stats_; }
  int dim() const { return op_.dim(); }
  const Eigen::VectorXd& weights() const { return op_.weights(); }

  /// Interior matrix of h -> div(h grad u_theta). Boundary faces take the
  /// adjacent interior value of h.
  const SparseMatrix& T() const { return T_; }

  Eigen::VectorXd I_interior(const Eigen::VectorXd& h) const {
    return op_.solve_stiffness(Eigen::VectorXd(weights().cwiseProduct(T_ * h)));
  }

  /// Exact adjoint of I in the weighted inner product: -W^{-1} T^T W V g.
  Eigen::VectorXd I_adjoint_interior(const Eigen::VectorXd& g) const {
    Eigen::VectorXd v = op_.apply_V_interior(g);
    return -(T_.transpose() * weights().cwiseProduct(v)).cwiseQuotient(weights());
  }

  Eigen::VectorXd info_interior(const Eigen::VectorXd& h) const { return I_adjoint_interior(I_interior(h)); }

  /// Dense matrix of I on interior dofs (column j = I e_j).
  Eigen::MatrixXd dense_I() const {
    Eigen::MatrixXd rhs = weights().asDiagonal() * Eigen::MatrixXd(T_);
    return op_.solve_stiffness(rhs);
  }

  /// div(h grad u) at interior nodes using the actual values of h on every
  /// node, boundary included.
  ScalarField apply_T_full(const ScalarField& h) const {
    require(h);
    const Grid& gr = grid();
    ScalarField out(grid_ptr());
    for (const Face& fc : gr.faces()) {
      double flux = 0.5 * (h[fc.a] + h[fc.b]) * fc.coef * (u_[fc.b] - u_[fc.a]);
      out[fc.a] += flux;
      if (fc.b_interior) out[fc.b] -= flux;
    }
    for (int d = 0; d < dim(); ++d) out[gr.interior_node(d)] /= weights()[d];
    return out;
  }

  void require(const ScalarField& h) const {
    if (h.grid_ptr() != grid_ptr()) throw GridMismatch();
  }

private:
  void build_T() {
    const Grid& gr = grid();
    std::vector<Eigen::Triplet<double>> trip;
    for (const Face& fc : gr.faces()) {
      int a = gr.interior_index(fc.a);
      double du = fc.coef * (u_[fc.b] - u_[fc.a]);
      if (fc.b_interior) {
        int b = gr.interior_index(fc.b);
        trip.emplace_back(a, a, 0.5 * du / weights()[a]);
        trip.emplace_back(a, b, 0.5 * du / weights()[a]);
        trip.emplace_back(b, a, -0.5 * du / weights()[b]);
        trip.emplace_back(b, b, -0.5 * du / weights()[b]);
      } else {
        trip.emplace_back(a, a, du / weights()[a]);
      }
    }
    T_.resize(dim(), dim());
    T_.setFromTriplets(trip.begin(), trip.end());
    T_.makeCompressed();
  }

  EllipticOperator op_;
  ScalarField f_, g_, u_;
  VectorField grad_u_;
  SparseMatrix T_;
  SolveStats stats_;
};

/// I_theta h = -V_theta[div(h grad u_theta)]. Values of h on the collar are
/// used as given; callers studying the tangent space pass collar-supported h.
inline ScalarField apply_I(const ScoreContext& ctx, const ScalarField& h) {
  ctx.require(h);
  return ScalarField::from_interior(ctx.grid_ptr(), ctx.I_interior(h.interior()));
}

/// div(h grad u_theta) on interior nodes (zero on the boundary).
inline ScalarField apply_T(const ScoreContext& ctx, const ScalarField& h) {
  ctx.require(h);
  return ScalarField::from_interior(ctx.grid_ptr(), ctx.T() * h.interior());
}

/// The nodal adjoint formula grad u_theta . grad V_theta[g], evaluated with
/// the grid's central differences and restricted to interior nodes.
inline ScalarField apply_I_star(const ScoreContext& ctx, const ScalarField& g) {
  ctx.require(g);
  VectorField gv = grad(apply_V(ctx.op(), g));
  const auto& gu = ctx.grad_u();
  const Grid& gr = ctx.grid();
  ScalarField out(ctx.grid_ptr());
  for (int d = 0; d < gr.num_interior(); ++d) {
    int k = gr.interior_node(d);
    out[k] = gu.x[k] * gv.x[k] + gu.y[k] * gv.y[k];
  }
  return out;
}

/// Exact discrete adjoint of apply_I in the weighted inner product.
inline ScalarField apply_I_adjoint(const ScoreContext& ctx, const ScalarField& g) {
  ctx.require(g);
  return ScalarField::from_interior(ctx.grid_ptr(), ctx.I_adjoint_interior(g.interior()));
}

/// I* I h, built from the exact discrete adjoint so that the dense matrix is
/// symmetric positive semidefinite in the weighted inner product.
inline ScalarField apply_info(const ScoreContext& ctx, const ScalarField& h) {
  ctx.require(h);
  return ScalarField::from_interior(ctx.grid_ptr(), ctx.info_interior(h.interior()));
}

/// |<I h, g> - <h, I* g>| / (|h| |g|) with the nodal adjoint formula.
inline double adjoint_defect(const ScoreContext& ctx, const ScalarField& h, const ScalarField& g) {
  double lhs = inner_l2(apply_I(ctx, h), g);
  double rhs = inner_l2(h, apply_I_star(ctx, g));
  return std::abs(lhs - rhs) / (norm_l2(h) * norm_l2(g));
}

struct RemainderStudy {
  std::vector<double> s;
  std::vector<double> remainder;  ///< |G(theta + s h) - G(theta) - s I h|_inf
  double slope = 0.0;             ///< least-squares log-log slope
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Taylor remainder of the forward map along h for each step size s.
inline RemainderStudy linearisation_remainder(const ScoreContext& ctx, const ScalarField& h,
                                              const std::vector<double>& steps) {
  ctx.require(h);
  RemainderStudy out;
  ScalarField ih = apply_I(ctx, h);
  for (double s : steps) {
    Conductivity ts(ctx.theta().field() + s * h);
    ScalarField us = forward(ts, ctx.f(), ctx.g());
    out.s.push_back(s);
    out.remainder.push_back((us - ctx.u() - s * ih).max_abs());
  }
  out.slope = loglog_slope(out.s, out.remainder);
  return out;
}

/// Discrete C^1 proxy: max |h| + max |grad h|.
inline double c1_norm(const ScalarField& h) { return h.max_abs() + grad(h).max_norm(); }

struct StabilityReport {
  bool applicable = true;
  double c0_hat = 0.0;
  double min_ratio_T = std::numeric_limits<double>::infinity();
  double min_ratio_H2 = std::numeric_limits<double>::infinity();
  std::vector<double> ratio_T;
  std::vector<double> ratio_H2;
};

/// Minima over random collar-supported h of |div(h grad u)| / |h| and
/// |I h|_{H^2} / |h|. Skipped (applicable = false) when the identifiability
/// check fails for (mu, c0).
inline StabilityReport stability_report(const ScoreContext& ctx, int trials, std::uint64_t seed, double mu,
                                        double c0 = 0.0, RandomFieldOptions opts = {}) {
  StabilityReport rep;
  auto id = check_identifiability(ctx.u(), mu, c0);
  rep.c0_hat = id.c0_hat;
  if (!id.passes) {
    rep.applicable = false;
    return rep;
  }
  for (int t = 0; t < trials; ++t) {
    ScalarField h = random_field(ctx.grid_ptr(), derive_seed(seed, t), opts);
    double nh = norm_l2(h);
    if (nh == 0.0) continue;
    double rt = norm_l2(apply_T(ctx, h)) / nh;
    double rh = sobolev_norm(apply_I(ctx, h), 2) / nh;
    rep.ratio_T.push_back(rt);
    rep.ratio_H2.push_back(rh);
    rep.min_ratio_T = std::min(rep.min_ratio_T, rt);
    rep.min_ratio_H2 = std::min(rep.min_ratio_H2, rh);
  }
  return rep;
}

struct StabilityPair {
  double lhs = 0.0;  ///< |theta1 - theta2|_{L^2}
  double rhs = 0.0;  ///< |u_theta1 - u_theta2|_{H^2}
};

inline StabilityPair stability_pair(const Conductivity& t1, const Conductivity& t2, const ScalarField& f,
                                    const ScalarField& g) {
  if (t1.grid_ptr() != t2.grid_ptr()) throw GridMismatch();
  const Grid& gr = t1.grid();
  for (int k = 0; k < gr.num_nodes(); ++k)
    if (gr.is_boundary(k) && t1.field()[k] != t2.field()[k])
      throw PreconditionError("conductivities differ on the boundary");
  ScalarField du = forward(t1, f, g) - forward(t2, f, g);
  return {norm_l2(t1.field() - t2.field()), sobolev_norm(du, 2)};
}

}  // namespace infogeo
