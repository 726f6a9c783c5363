#pragma once

// Spectral analysis of the information operator I*I: eigendecomposition,
// square root, range series, efficient Fisher information and degeneracy
// sequences.

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "infogeo/lanczos.hpp"
#include "infogeo/score.hpp"

namespace infogeo {

enum class EigenMode { dense, iterative };

inline constexpr int kDenseOracleLimit = 2500;
inline constexpr double kKernelRelTol = 1e-8;

/// Eigenpairs of I*I on interior dofs, eigenvalues descending, eigenvectors
/// orthonormal in the weighted inner product.
struct SpectralDecomposition {
  GridPtr grid;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd weights;
  double kernel_tol = 0.0;
  bool complete = false;  ///< true when every eigenpair is present

  int size() const { return static_cast<int>(values.size()); }
  /// Leading pairs whose eigenvalue exceeds kernel_tol.
  int range_count() const {
    int n = 0;
    while (n < size() && values[n] >= kernel_tol) ++n;
    return n;
  }
  ScalarField eigenvector(int k) const { return ScalarField::from_interior(grid, vectors.col(k)); }
  Eigen::VectorXd coefficients(const Eigen::VectorXd& v) const { return vectors.transpose() * weights.cwiseProduct(v); }
};

inline SpectralDecomposition eigendecompose(const ScoreContext& ctx, int K, EigenMode mode,
                                            double kernel_rel_tol = kKernelRelTol) {
  const int m = ctx.dim();
  if (K < 1 || K > m) throw PreconditionError("eigendecompose: K must lie in [1, interior dimension]");
  SpectralDecomposition d;
  d.grid = ctx.grid_ptr();
  d.weights = ctx.weights();
  if (mode == EigenMode::dense) {
    if (m > kDenseOracleLimit) throw PreconditionError("dense mode is limited to 2500 interior unknowns");
    Eigen::VectorXd sw = ctx.weights().cwiseSqrt();
    Eigen::MatrixXd B = sw.asDiagonal() * ctx.dense_I() * sw.cwiseInverse().asDiagonal();
    Eigen::MatrixXd S = B.transpose() * B;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    d.values = es.eigenvalues().reverse().head(K);
    d.vectors = sw.cwiseInverse().asDiagonal() * es.eigenvectors().rowwise().reverse().leftCols(K);
    d.complete = (K == m);
  } else {
    auto res = lanczos_top([&](const Eigen::VectorXd& v) { return ctx.info_interior(v); }, ctx.weights(), K, 1e-10);
    d.values = res.values;
    d.vectors = res.vectors;
    d.complete = false;
  }
  d.kernel_tol = kernel_rel_tol * d.values[0];
  return d;
}

/// (I*I)^{1/2} h restricted to the leading `rank` eigenpairs (all when rank < 0).
inline ScalarField sqrt_apply(const SpectralDecomposition& d, const ScalarField& h, int rank = -1) {
  if (h.grid_ptr() != d.grid) throw GridMismatch();
  if (rank < 0) rank = d.size();
  if (rank > d.size()) throw PreconditionError("sqrt_apply: decomposition holds fewer eigenpairs than requested");
  Eigen::VectorXd c = d.coefficients(h.interior()).head(rank);
  Eigen::VectorXd s = d.values.head(rank).cwiseMax(0.0).cwiseSqrt();
  return ScalarField::from_interior(d.grid, d.vectors.leftCols(rank) * s.cwiseProduct(c));
}

struct KernelComponent {
  ScalarField projection;
  double norm = 0.0;
  double relative = 0.0;  ///< norm / |psi|
};

/// Projection onto eigenpairs below kernel_tol. Needs the complete spectrum.
inline KernelComponent kernel_component(const SpectralDecomposition& d, const ScalarField& psi) {
  if (psi.grid_ptr() != d.grid) throw GridMismatch();
  if (!d.complete) throw PreconditionError("kernel_component needs a complete decomposition");
  int r = d.range_count();
  Eigen::VectorXd c = d.coefficients(psi.interior());
  Eigen::VectorXd p = d.vectors.rightCols(d.size() - r) * c.tail(d.size() - r);
  KernelComponent out{ScalarField::from_interior(d.grid, p), 0.0, 0.0};
  out.norm = norm_l2(out.projection);
  double np = norm_l2(ScalarField::from_interior(d.grid, psi.interior()));
  out.relative = np > 0 ? out.norm / np : 0.0;
  return out;
}

struct RangeSeries {
  std::vector<double> M;  ///< M[N-1] = sum_{k<=N} lambda_k^{-1} <e_k, psi>^2
  double kernel_norm = std::numeric_limits<double>::quiet_NaN();
};

/// Partial sums of the range series over non-kernel eigenpairs.
inline RangeSeries range_series(const SpectralDecomposition& d, const ScalarField& psi, int N_max = -1) {
  if (psi.grid_ptr() != d.grid) throw GridMismatch();
  int r = d.range_count();
  if (N_max < 0) N_max = r;
  if (N_max > r) throw PreconditionError("range_series: N_max exceeds the non-kernel eigenpairs available");
  Eigen::VectorXd c = d.coefficients(psi.interior());
  RangeSeries out;
  double acc = 0.0;
  for (int k = 0; k < N_max; ++k) {
    acc += c[k] * c[k] / d.values[k];
    out.M.push_back(acc);
  }
  if (d.complete) out.kernel_norm = kernel_component(d, psi).norm;
  return out;
}

/// M_{N_max} / M_{N_max/2} for a partial-sum sequence.
inline double series_growth(const std::vector<double>& M) {
  if (M.size() < 2) throw PreconditionError("series_growth: need at least two partial sums");
  return M.back() / M[M.size() / 2 - 1];
}

/// max/min - 1 of the partial sums over the top half N in [N_max/2, N_max].
inline double series_tail_spread(const std::vector<double>& M) {
  if (M.size() < 2) throw PreconditionError("series_tail_spread: need at least two partial sums");
  auto first = M.begin() + (M.size() / 2 - 1);
  auto [lo, hi] = std::minmax_element(first, M.end());
  return *hi / *lo - 1.0;
}

enum class FisherMethod { spectral_truncation, direct_solve };
enum class FisherVerdict { in_range, out_of_range_divergent, kernel_obstructed, undetermined };

inline std::string to_string(FisherVerdict v) {
  switch (v) {
    case FisherVerdict::in_range: return "in_range";
    case FisherVerdict::out_of_range_divergent: return "out_of_range_divergent";
    case FisherVerdict::kernel_obstructed: return "kernel_obstructed";
    default: return "undetermined";
  }
}

inline bool is_out_of_range(FisherVerdict v) {
  return v == FisherVerdict::out_of_range_divergent || v == FisherVerdict::kernel_obstructed;
}

struct FisherReport {
  ScalarField psi;
  std::vector<double> M;
  double i_inverse_full = std::numeric_limits<double>::quiet_NaN();
  double i_value = std::numeric_limits<double>::quiet_NaN();
  double kernel_component_norm = std::numeric_limits<double>::quiet_NaN();
  FisherVerdict verdict = FisherVerdict::undetermined;
};

/// Solves the discrete information equation I*I h = psi through the transport
/// operator: with T^T q = W psi and z = A W^{-1} q, the minimizer satisfies
/// I h = W^{-1} z, so psi^T (I*I)^{-1} psi = z^T W^{-1} z.
class InformationSolver {
public:
  explicit InformationSolver(const ScoreContext& ctx) : ctx_(ctx) {
    SparseMatrix Tt = ctx.T().transpose();
    lu_t_.compute(Tt);
    if (lu_t_.info() != Eigen::Success) throw SolverError("information operator is singular (transport matrix not invertible)");
    lu_.compute(ctx.T());
    if (lu_.info() != Eigen::Success) throw SolverError("information operator is singular (transport matrix not invertible)");
  }

  /// I h* for the minimizer h* = (I*I)^{-1} psi.
  Eigen::VectorXd image_of_minimizer(const Eigen::VectorXd& psi) const {
    const auto& w = ctx_.weights();
    Eigen::VectorXd rhs = w.cwiseProduct(psi);
    Eigen::VectorXd q = lu_t_.solve(rhs);
    check(q);
    // an exactly singular T factorizes with a tiny pivot; the residual exposes
    // right-hand sides outside its range
    if ((ctx_.T().transpose() * q - rhs).norm() > 1e-8 * rhs.norm())
      throw SolverError("information operator is singular (psi has a kernel component)");
    Eigen::VectorXd z = ctx_.op().stiffness() * q.cwiseQuotient(w);
    return z.cwiseQuotient(w);
  }

  double i_inverse(const Eigen::VectorXd& psi) const {
    Eigen::VectorXd ih = image_of_minimizer(psi);
    return (ctx_.weights().array() * ih.array().square()).sum();
  }

  /// h* = (I*I)^{-1} psi, recovered from I h* = A^{-1} W T h*.
  Eigen::VectorXd minimizer(const Eigen::VectorXd& psi) const {
    Eigen::VectorXd ih = image_of_minimizer(psi);
    Eigen::VectorXd th = (ctx_.op().stiffness() * ih).cwiseQuotient(ctx_.weights());
    Eigen::VectorXd h = lu_.solve(th);
    check(h);
    return h;
  }

private:
  static void check(const Eigen::VectorXd& v) {
    if (!v.allFinite()) throw SolverError("information operator is singular (non-finite solve)");
  }

  const ScoreContext& ctx_;
  Eigen::SparseLU<SparseMatrix> lu_t_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

/// Efficient Fisher information for psi. `decomp` is required for
/// spectral_truncation and optional for direct_solve (fills M and P0).
inline FisherReport fisher_information(const ScoreContext& ctx, const ScalarField& psi, FisherMethod method,
                                       const SpectralDecomposition* decomp = nullptr) {
  ctx.require(psi);
  if (psi.interior().squaredNorm() == 0.0) throw PreconditionError("fisher_information: psi is identically zero");
  FisherReport rep;
  rep.psi = psi;
  if (decomp) {
    auto rs = range_series(*decomp, psi);
    rep.M = rs.M;
    rep.kernel_component_norm = rs.kernel_norm;
  }
  if (method == FisherMethod::spectral_truncation) {
    if (!decomp) throw PreconditionError("spectral_truncation needs a decomposition");
    rep.i_inverse_full = rep.M.empty() ? 0.0 : rep.M.back();
  } else {
    rep.i_inverse_full = InformationSolver(ctx).i_inverse(psi.interior());
  }
  rep.i_value = 1.0 / rep.i_inverse_full;
  return rep;
}

struct DegeneracyStep {
  int N = 0;
  double M_N = 0.0;
  ScalarField h_N;                ///< collar-masked psi_N
  double quotient = 0.0;          ///< |I h_N|^2 / <psi, h_N>^2
  double quotient_unmasked = 0.0; ///< same for psi_N itself
  double mask_correction = 0.0;   ///< |psi_N - h_N| / |psi_N|
};

/// psi_N = sum_{k<=N} lambda_k^{-1} <e_k, psi> e_k and its collar-masked
/// version, with Rayleigh quotients evaluated through the actual operator I.
inline DegeneracyStep degeneracy_sequence(const ScoreContext& ctx, const SpectralDecomposition& d,
                                          const ScalarField& psi, int N) {
  ctx.require(psi);
  if (N < 1 || N > d.range_count()) throw PreconditionError("degeneracy_sequence: N out of range");
  Eigen::VectorXd c = d.coefficients(psi.interior()).head(N);
  DegeneracyStep s;
  s.N = N;
  s.M_N = (c.array().square() / d.values.head(N).array()).sum();
  if (s.M_N < 2.0) throw PreconditionError("degeneracy_sequence: requires M_N >= 2");
  ScalarField psiN = ScalarField::from_interior(d.grid, d.vectors.leftCols(N) * c.cwiseQuotient(d.values.head(N)));
  s.h_N = psiN.collar_masked();
  auto quotient = [&](const ScalarField& h) {
    double ip = inner_l2(psi, h);
    double ih = norm_l2(apply_I(ctx, h));
    return ih * ih / (ip * ip);
  };
  s.quotient_unmasked = quotient(psiN);
  s.quotient = quotient(s.h_N);
  s.mask_correction = norm_l2(psiN - s.h_N) / norm_l2(psiN);
  return s;
}

struct SweepEntry {
  int resolution = 0;
  double h_mesh = 0.0;
  double i_inverse = std::numeric_limits<double>::quiet_NaN();
};

struct FisherSweep {
  std::vector<SweepEntry> entries;
  double kernel_relative = std::numeric_limits<double>::quiet_NaN();
  int kernel_resolution = 0;
  FisherVerdict verdict = FisherVerdict::undetermined;
};

struct SweepThresholds {
  double kernel_relative = 1e-2;  ///< relative P0 component deciding kernel_obstructed
  double divergent_growth = 2.0;  ///< last/first i_inverse for out_of_range_divergent
  double in_range_spread = 0.2;   ///< max/min - 1 for in_range
};

/// Growth is tested first: a finite i_inverse sequence that keeps increasing
/// is the divergence signature whether or not part of psi also sits in the
/// (near-)kernel. Only then does a kernel component decide the verdict.
inline FisherVerdict classify_sweep(const FisherSweep& s, const SweepThresholds& t = {}) {
  bool finite = s.entries.size() >= 3;
  bool increasing = finite;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (size_t i = 0; i < s.entries.size(); ++i) {
    double v = s.entries[i].i_inverse;
    if (!std::isfinite(v)) finite = false;
    if (i > 0 && !(v > s.entries[i - 1].i_inverse)) increasing = false;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (finite && increasing && s.entries.back().i_inverse >= t.divergent_growth * s.entries.front().i_inverse)
    return FisherVerdict::out_of_range_divergent;
  if (s.kernel_relative > t.kernel_relative) return FisherVerdict::kernel_obstructed;
  if (finite && hi <= (1.0 + t.in_range_spread) * lo) return FisherVerdict::in_range;
  return FisherVerdict::undetermined;
}

/// A discretized problem: the score context on one grid and psi on that grid.
struct DiscreteProblem {
  std::shared_ptr<const ScoreContext> ctx;
  ScalarField psi;
};

/// Refinement sweep over at least three resolutions. i_inverse comes from the
/// direct solve on every grid; the kernel component is measured with a dense
/// decomposition on the middle resolution (or the finest smaller grid that
/// fits the dense limit).
inline FisherSweep refinement_sweep(const std::function<DiscreteProblem(int)>& problem,
                                    const std::vector<int>& resolutions, const SweepThresholds& t = {}) {
  if (resolutions.size() < 3) throw PreconditionError("refinement sweeps need at least three resolutions");
  FisherSweep out;
  std::vector<DiscreteProblem> probs;
  for (int n : resolutions) probs.push_back(problem(n));

  int kidx = -1;
  int mid = static_cast<int>(resolutions.size()) / 2;
  for (int i = mid; i >= 0; --i)
    if (probs[i].ctx->dim() <= kDenseOracleLimit) {
      kidx = i;
      break;
    }
  if (kidx >= 0) {
    const auto& p = probs[kidx];
    auto d = eigendecompose(*p.ctx, p.ctx->dim(), EigenMode::dense);
    out.kernel_relative = kernel_component(d, p.psi).relative;
    out.kernel_resolution = resolutions[kidx];
  }
  for (size_t i = 0; i < probs.size(); ++i) {
    SweepEntry e{resolutions[i], probs[i].ctx->grid().h_mesh(), std::numeric_limits<double>::infinity()};
    try {
      e.i_inverse = InformationSolver(*probs[i].ctx).i_inverse(probs[i].psi.interior());
    } catch (const SolverError&) {
      // singular transport matrix: exact kernel, i_inverse stays infinite
    }
    out.entries.push_back(e);
  }
  out.verdict = classify_sweep(out, t);
  return out;
}

}  // namespace infogeo
