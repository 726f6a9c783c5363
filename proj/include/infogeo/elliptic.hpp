#pragma once

// Divergence-form operator L_theta = div(theta grad .), the Dirichlet solve and
// the zero-boundary inverse V_theta.
//
// On interior unknowns the discrete operator is L = -W^{-1} A, where A is the
// symmetric positive definite stiffness matrix assembled from grid faces and W
// the diagonal of quadrature weights. V = -A^{-1} W is then self-adjoint in the
// weighted inner product.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <limits>
#include <memory>
#include <variant>
#include <vector>

#include "infogeo/grid.hpp"

namespace infogeo {

/// Validated coefficient field theta.
class Conductivity {
public:
  /// Throws PreconditionError unless theta > 1/2 everywhere and theta = 1 on
  /// boundary nodes.
  explicit Conductivity(ScalarField theta) : field_(std::move(theta)) {
    const Grid& g = field_.grid();
    min_ = field_.min();
    if (!(min_ > 0.5)) throw PreconditionError("conductivity violates the ellipticity floor theta > 1/2");
    for (int k = 0; k < g.num_nodes(); ++k)
      if (g.is_boundary(k) && std::abs(field_[k] - 1.0) > 1e-12)
        throw PreconditionError("conductivity must equal 1 on the boundary");
    ScalarField dev = field_ - ScalarField::constant(field_.grid_ptr(), 1.0);
    h2_proxy_ = sobolev_norm(dev, 2);
  }

  static Conductivity unit(const GridPtr& grid) { return Conductivity(ScalarField::constant(grid, 1.0)); }

  const ScalarField& field() const { return field_; }
  const Grid& grid() const { return field_.grid(); }
  const GridPtr& grid_ptr() const { return field_.grid_ptr(); }
  double min_value() const { return min_; }
  double boundary_value() const { return 1.0; }
  /// Discrete H^2 norm of theta - 1, the proxy for the parameter-set radius.
  double h2_proxy() const { return h2_proxy_; }
  bool within_eta(double eta) const { return h2_proxy_ < eta; }

private:
  ScalarField field_;
  double min_ = 0.0;
  double h2_proxy_ = 0.0;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
  bool direct = true;
};

inline constexpr int kDirectSolveLimit = 40000;
inline constexpr double kSolverTol = 1e-10;

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Assembled L_theta / V_theta on the interior unknowns of one grid.
class EllipticOperator {
public:
  explicit EllipticOperator(Conductivity theta) : theta_(std::move(theta)) {
    const Grid& g = theta_.grid();
    const int m = g.num_interior();
    const auto& th = theta_.field();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * m);
    for (const Face& f : g.faces()) {
      double c = 0.5 * (th[f.a] + th[f.b]) * f.coef;
      int ia = g.interior_index(f.a);
      trip.emplace_back(ia, ia, c);
      if (f.b_interior) {
        int ib = g.interior_index(f.b);
        trip.emplace_back(ib, ib, c);
        trip.emplace_back(ia, ib, -c);
        trip.emplace_back(ib, ia, -c);
      } else {
        boundary_coupling_.push_back({ia, f.b, c});
      }
    }
    A_.resize(m, m);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();
    w_ = g.interior_weights();

    if (m <= kDirectSolveLimit) {
      auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
      ldlt->compute(A_);
      if (ldlt->info() != Eigen::Success) throw SolverError("stiffness factorization failed");
      ldlt_ = std::move(ldlt);
    } else {
      auto cg = std::make_shared<CG>();
      cg->setTolerance(kSolverTol);
      cg->setMaxIterations(20 * m);
      cg->compute(A_);
      cg_ = std::move(cg);
    }
  }

  const Conductivity& conductivity() const { return theta_; }
  const Grid& grid() const { return theta_.grid(); }
  const GridPtr& grid_ptr() const { return theta_.grid_ptr(); }
  int dim() const { return static_cast<int>(A_.rows()); }

  /// Symmetric positive definite stiffness matrix A (L = -W^{-1} A).
  const SparseMatrix& stiffness() const { return A_; }
  const Eigen::VectorXd& weights() const { return w_; }

  /// Interior matrix of L_theta.
  SparseMatrix matrix() const {
    SparseMatrix L = -(w_.cwiseInverse().asDiagonal() * A_);
    L.makeCompressed();
    return L;
  }

  /// Solves A x = rhs on interior unknowns.
  Eigen::VectorXd solve_stiffness(const Eigen::VectorXd& rhs, SolveStats* stats = nullptr) const {
    Eigen::VectorXd x;
    if (ldlt_) {
      x = ldlt_->solve(rhs);
      if (stats) *stats = {0, relative_residual(x, rhs), true};
      return x;
    }
    x = cg_->solve(rhs);
    if (cg_->info() != Eigen::Success) throw SolverError("conjugate gradient did not converge");
    if (stats) *stats = {static_cast<int>(cg_->iterations()), cg_->error(), false};
    return x;
  }

  /// Column-wise solve for several right-hand sides.
  Eigen::MatrixXd solve_stiffness(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd out(rhs.rows(), rhs.cols());
    if (ldlt_) return ldlt_->solve(rhs);
    for (int c = 0; c < rhs.cols(); ++c) out.col(c) = solve_stiffness(Eigen::VectorXd(rhs.col(c)));
    return out;
  }

  /// V applied to interior dofs: the zero-boundary solution of L v = w.
  Eigen::VectorXd apply_V_interior(const Eigen::VectorXd& w, SolveStats* stats = nullptr) const {
    return -solve_stiffness(Eigen::VectorXd(w_.cwiseProduct(w)), stats);
  }

  /// L_theta u at interior nodes, using the boundary values stored in u.
  /// Boundary entries of the result are zero.
  ScalarField apply_L(const ScalarField& u) const {
    if (u.grid_ptr() != grid_ptr()) throw GridMismatch();
    const Grid& g = grid();
    const auto& th = theta_.field();
    ScalarField out(grid_ptr());
    for (const Face& f : g.faces()) {
      double flux = 0.5 * (th[f.a] + th[f.b]) * f.coef * (u[f.b] - u[f.a]);
      out[f.a] += flux;
      if (f.b_interior) out[f.b] -= flux;
    }
    for (int d = 0; d < dim(); ++d) out[g.interior_node(d)] /= w_[d];
    return out;
  }

  /// Boundary contribution B g to the stiffness form (A u_I + B g = -W L u).
  Eigen::VectorXd boundary_lift(const ScalarField& g_boundary) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim());
    for (const auto& c : boundary_coupling_) b[c.row] -= c.coef * g_boundary[c.node];
    return b;
  }

private:
  using CG = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>;

  struct Coupling {
    int row;
    int node;
    double coef;
  };

  double relative_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const {
    double nb = rhs.norm();
    return nb > 0 ? (A_ * x - rhs).norm() / nb : (A_ * x).norm();
  }

  Conductivity theta_;
  SparseMatrix A_;
  Eigen::VectorXd w_;
  std::vector<Coupling> boundary_coupling_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
  std::shared_ptr<CG> cg_;
};

inline EllipticOperator assemble(const Conductivity& theta) { return EllipticOperator(theta); }

/// Solves div(theta grad u) = f in the domain, u = g on the boundary. Only the
/// boundary values of `g_boundary` and interior values of `f` are read.
inline ScalarField solve_dirichlet(const EllipticOperator& op, const ScalarField& f, const ScalarField& g_boundary,
                                   SolveStats* stats = nullptr) {
  if (f.grid_ptr() != op.grid_ptr() || g_boundary.grid_ptr() != op.grid_ptr()) throw GridMismatch();
  const Grid& g = op.grid();
  Eigen::VectorXd rhs = -op.weights().cwiseProduct(f.interior()) - op.boundary_lift(g_boundary);
  Eigen::VectorXd ui = op.solve_stiffness(rhs, stats);
  ScalarField u(op.grid_ptr());
  for (int k = 0; k < g.num_nodes(); ++k)
    if (g.is_boundary(k)) u[k] = g_boundary[k];
  for (int d = 0; d < op.dim(); ++d) u[g.interior_node(d)] = ui[d];
  return u;
}

/// V_theta w: zero-boundary solution of L_theta v = w.
inline ScalarField apply_V(const EllipticOperator& op, const ScalarField& w, SolveStats* stats = nullptr) {
  if (w.grid_ptr() != op.grid_ptr()) throw GridMismatch();
  return ScalarField::from_interior(op.grid_ptr(), op.apply_V_interior(w.interior(), stats));
}

/// Compact (face-based) Laplacian at interior nodes; zero on the boundary.
/// Exact on quadratics on both grids.
inline ScalarField laplacian(const ScalarField& u) {
  const Grid& g = u.grid();
  ScalarField out(u.grid_ptr());
  for (const Face& f : g.faces()) {
    double flux = f.coef * (u[f.b] - u[f.a]);
    out[f.a] += flux;
    if (f.b_interior) out[f.b] -= flux;
  }
  for (int d = 0; d < g.num_interior(); ++d) out[g.interior_node(d)] /= g.interior_weights()[d];
  return out;
}

struct IdentifiabilityReport {
  double c0_hat = 0.0;
  bool passes = false;
};

/// min over interior nodes of Laplacian(u) + mu |grad u|^2, compared with c0.
inline IdentifiabilityReport check_identifiability(const ScalarField& u, double mu, double c0 = 0.0) {
  const Grid& g = u.grid();
  ScalarField lap = laplacian(u);
  VectorField gu = grad(u);
  double m = std::numeric_limits<double>::infinity();
  for (int d = 0; d < g.num_interior(); ++d) {
    int k = g.interior_node(d);
    m = std::min(m, lap[k] + mu * (gu.x[k] * gu.x[k] + gu.y[k] * gu.y[k]));
  }
  return {m, m > c0};
}

}  // namespace infogeo
