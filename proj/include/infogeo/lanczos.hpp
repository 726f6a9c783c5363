#pragma once

// Lanczos iteration for the leading eigenpairs of an operator that is
// self-adjoint in a diagonally weighted inner product.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "infogeo/errors.hpp"

namespace infogeo {

struct LanczosResult {
  Eigen::VectorXd values;   ///< descending
  Eigen::MatrixXd vectors;  ///< weighted-orthonormal columns
  int iterations = 0;
  double max_residual = 0.0;
};

/// Top-k eigenpairs of `apply`, self-adjoint w.r.t. <x, y> = x^T diag(w) y.
/// Full reorthogonalization; convergence is declared once every requested Ritz
/// pair has residual below tol * (largest Ritz value), and is then confirmed
/// by applying the operator to the Ritz vectors.
///
/// Like every single-vector Krylov method this returns one vector per
/// eigenspace: repeated eigenvalues are reported once.
template <class Apply>
LanczosResult lanczos_top(Apply&& apply, const Eigen::VectorXd& w, int k, double tol = 1e-10,
                          std::uint64_t seed = 1, int max_iter = -1) {
  const int m = static_cast<int>(w.size());
  if (k < 1 || k > m) throw PreconditionError("lanczos: requested count out of range");
  if (max_iter < 0) max_iter = m;
  max_iter = std::min(max_iter, m);

  auto dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a.array() * b.array() * w.array()).sum(); };

  Eigen::MatrixXd Q(m, max_iter);
  Eigen::VectorXd alpha(max_iter), beta(max_iter);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(m);
  for (int i = 0; i < m; ++i) q[i] = nd(rng);
  q /= std::sqrt(dot(q, q));

  LanczosResult out;
  int j = 0;
  for (; j < max_iter; ++j) {
    Q.col(j) = q;
    Eigen::VectorXd z = apply(q);
    alpha[j] = dot(q, z);
    // two passes of classical Gram-Schmidt against the whole basis
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) z -= dot(Q.col(i), z) * Q.col(i);
    }
    beta[j] = std::sqrt(dot(z, z));

    int size = j + 1;
    bool check = size >= k && (size == max_iter || size % 5 == 0 || beta[j] < 1e-14 * std::abs(alpha[0]));
    if (check) {
      Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(size, size);
      for (int i = 0; i < size; ++i) {
        Tm(i, i) = alpha[i];
        if (i + 1 < size) Tm(i, i + 1) = Tm(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
      const auto& ev = es.eigenvalues();
      double top = std::abs(ev[size - 1]);
      bool ok = true;
      for (int i = 0; i < k; ++i) {
        double bound = std::abs(beta[j] * es.eigenvectors()(size - 1, size - 1 - i));
        if (bound > tol * top) {
          ok = false;
          break;
        }
      }
      if (ok || size == max_iter || beta[j] < 1e-14 * top) {
        out.values.resize(k);
        out.vectors.resize(m, k);
        for (int i = 0; i < k; ++i) {
          out.values[i] = ev[size - 1 - i];
          out.vectors.col(i) = Q.leftCols(size) * es.eigenvectors().col(size - 1 - i);
        }
        out.iterations = size;
        out.max_residual = 0.0;
        for (int i = 0; i < k; ++i) {
          Eigen::VectorXd r = apply(Eigen::VectorXd(out.vectors.col(i))) - out.values[i] * out.vectors.col(i);
          out.max_residual = std::max(out.max_residual, std::sqrt(dot(r, r)));
        }
        if (out.max_residual > 10.0 * tol * top)
          throw SolverError("lanczos: Ritz pairs failed the residual check");
        return out;
      }
    }
    if (beta[j] == 0.0) break;
    q = z / beta[j];
  }
  throw SolverError("lanczos: Krylov space exhausted before convergence");
}

}  // namespace infogeo
