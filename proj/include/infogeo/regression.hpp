#pragma once

// Monte Carlo for the regression model Y = u_theta(X) + eps: sampling,
// scores, log-likelihood ratios, and the spectral-cutoff plug-in estimator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "infogeo/random_fields.hpp"
#include "infogeo/score.hpp"
#include "infogeo/spectral.hpp"

namespace infogeo {

/// splitmix64 as a UniformRandomBitGenerator; cheap to seed per sample.
class SplitMix64 {
public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

struct Sample {
  Point X;
  double Y = 0.0;
  double eps = 0.0;
};

/// Sample i depends only on (seed, i). The design law is uniform on the
/// domain (area-uniform on the disk via r = sqrt(U)).
inline Sample draw_sample(const ScoreContext& ctx, std::uint64_t seed, std::uint64_t index, bool noiseless = false) {
  SplitMix64 rng(derive_seed(seed, index));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  Sample s;
  if (ctx.grid().is_disk()) {
    double r = std::sqrt(unif(rng));
    double a = 2.0 * std::numbers::pi * unif(rng);
    s.X = {r * std::cos(a), r * std::sin(a)};
  } else {
    s.X = {1.0 + unif(rng), 1.0 + unif(rng)};
  }
  s.eps = noiseless ? 0.0 : normal(rng);
  s.Y = interpolate(ctx.u(), s.X) + s.eps;
  return s;
}

inline std::vector<Sample> sample_data(const ScoreContext& ctx, int N, std::uint64_t seed, bool noiseless = false) {
  if (N < 1) throw PreconditionError("sample_data: N must be positive");
  std::vector<Sample> out(N);
  for (int i = 0; i < N; ++i) out[i] = draw_sample(ctx, seed, static_cast<std::uint64_t>(i), noiseless);
  return out;
}

/// Score A[h](y, x) = (y - u_theta(x)) * (I h)(x); `Ih` is I h precomputed.
inline double score_eval(const ScoreContext& ctx, const ScalarField& Ih, const Sample& s) {
  ctx.require(Ih);
  return (s.Y - interpolate(ctx.u(), s.X)) * interpolate(Ih, s.X);
}

struct MCReport {
  std::string statistic;
  int N = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;  ///< per-replicate (or per-sample) statistic
  double mean = 0.0, variance = 0.0;
  double se_mean = 0.0, se_variance = 0.0;
  double reference_mean = 0.0, reference_variance = 0.0;
  double ks_distance = std::numeric_limits<double>::quiet_NaN();
  bool low_power = false;

  double z_mean() const { return se_mean > 0 ? std::abs(mean - reference_mean) / se_mean : 0.0; }
  double z_variance() const { return se_variance > 0 ? std::abs(variance - reference_variance) / se_variance : 0.0; }
};

inline constexpr int kLowPowerSamples = 1000;

namespace detail {

/// Fills mean, variance and their standard errors from r.values.
inline void summarize(MCReport& r) {
  const double n = static_cast<double>(r.values.size());
  double m = 0.0;
  for (double v : r.values) m += v;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : r.values) {
    double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  double var = n > 1 ? m2 / (n - 1) : 0.0;
  m4 /= n;
  r.mean = m;
  r.variance = var;
  r.se_mean = std::sqrt(var / n);
  r.se_variance = std::sqrt(std::max(m4 - (m2 / n) * (m2 / n), 0.0) / n);
}

inline double normal_cdf(double x, double mean, double var) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

}  // namespace detail

/// Kolmogorov-Smirnov distance between the empirical law of `values` and
/// N(mean, var).
inline double ks_distance_normal(std::vector<double> values, double mean, double var) {
  if (values.empty() || !(var > 0.0)) throw PreconditionError("ks_distance_normal: need data and positive variance");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    double F = detail::normal_cdf(values[i], mean, var);
    d = std::max({d, F - i / n, (i + 1) / n - F});
  }
  return d;
}

/// Empirical covariance of (A[h1], A[h2]) over N samples against <I h1, I h2>.
inline MCReport info_identity_mc(const ScoreContext& ctx, const ScalarField& h1, const ScalarField& h2, int N,
                                 std::uint64_t seed) {
  if (N < 2) throw PreconditionError("info_identity_mc: need at least two samples");
  ScalarField I1 = apply_I(ctx, h1), I2 = apply_I(ctx, h2);
  MCReport r;
  r.statistic = "score_product";
  r.N = N;
  r.replicates = 1;
  r.seed = seed;
  r.values.resize(N);
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    Sample s = draw_sample(ctx, seed, i);
    double a = score_eval(ctx, I1, s), b = score_eval(ctx, I2, s);
    r.values[i] = a * b;
    s1 += a;
    s2 += b;
  }
  detail::summarize(r);
  r.mean -= (s1 / N) * (s2 / N);
  r.reference_mean = inner_l2(I1, I2);
  r.low_power = N < kLowPowerSamples;
  return r;
}

struct GramReport {
  int N = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd empirical, se, reference;
  Eigen::VectorXd score_means, score_se;
  bool low_power = false;

  /// Largest |empirical - reference| / se over all entries.
  double max_z() const {
    double z = 0.0;
    for (int i = 0; i < reference.rows(); ++i)
      for (int j = 0; j < reference.cols(); ++j)
        if (se(i, j) > 0) z = std::max(z, std::abs(empirical(i, j) - reference(i, j)) / se(i, j));
    return z;
  }
};

/// Empirical score Gram matrix over a set of directions, all entries from
/// one common sample.
inline GramReport info_gram_mc(const ScoreContext& ctx, const std::vector<ScalarField>& basis, int N,
                               std::uint64_t seed) {
  const int m = static_cast<int>(basis.size());
  if (m < 1 || N < 2) throw PreconditionError("info_gram_mc: need directions and at least two samples");
  std::vector<ScalarField> Ih;
  for (const auto& h : basis) Ih.push_back(apply_I(ctx, h));
  Eigen::MatrixXd S(N, m);
  for (int i = 0; i < N; ++i) {
    Sample s = draw_sample(ctx, seed, i);
    for (int j = 0; j < m; ++j) S(i, j) = score_eval(ctx, Ih[j], s);
  }
  GramReport r;
  r.N = N;
  r.seed = seed;
  r.low_power = N < kLowPowerSamples;
  r.empirical.resize(m, m);
  r.se.resize(m, m);
  r.reference.resize(m, m);
  r.score_means = S.colwise().mean().transpose();
  r.score_se.resize(m);
  for (int j = 0; j < m; ++j) {
    double v = (S.col(j).array() - r.score_means[j]).square().sum() / (N - 1);
    r.score_se[j] = std::sqrt(v / N);
  }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      Eigen::ArrayXd p = S.col(a).array() * S.col(b).array();
      double mean = p.mean();
      double var = (p - mean).square().sum() / (N - 1);
      r.empirical(a, b) = mean - r.score_means[a] * r.score_means[b];
      r.se(a, b) = std::sqrt(var / N);
      r.reference(a, b) = inner_l2(Ih[a], Ih[b]);
    }
  return r;
}

/// Exact Gaussian log-likelihood ratio of theta + h / sqrt(N) against theta,
/// one value per replicate of N samples, compared with N(-|Ih|^2 / 2, |Ih|^2).
inline MCReport lan_mc(const ScoreContext& ctx, const ScalarField& h, int N, int replicates, std::uint64_t seed) {
  if (N < 1 || replicates < 2) throw PreconditionError("lan_mc: need N >= 1 and at least two replicates");
  ctx.require(h);
  ScalarField thp = ctx.theta().field() + h * (1.0 / std::sqrt(static_cast<double>(N)));
  Conductivity theta_p(thp);  // throws if ellipticity or boundary values break
  ScalarField u_p = solve_dirichlet(EllipticOperator(theta_p), ctx.f(), ctx.g());
  ScalarField Ih = apply_I(ctx, h);

  MCReport r;
  r.statistic = "log_likelihood_ratio";
  r.N = N;
  r.replicates = replicates;
  r.seed = seed;
  r.values.resize(replicates);
  for (int k = 0; k < replicates; ++k) {
    std::uint64_t rs = derive_seed(seed, k);
    double llr = 0.0;
    for (int i = 0; i < N; ++i) {
      Sample s = draw_sample(ctx, rs, i);
      double a = s.Y - interpolate(ctx.u(), s.X);
      double b = s.Y - interpolate(u_p, s.X);
      llr += 0.5 * (a * a - b * b);
    }
    r.values[k] = llr;
  }
  detail::summarize(r);
  double lan = inner_l2(Ih, Ih);
  r.reference_mean = -0.5 * lan;
  r.reference_variance = lan;
  if (lan > 0.0) r.ks_distance = ks_distance_normal(r.values, r.reference_mean, r.reference_variance);
  r.low_power = replicates * N < kLowPowerSamples;
  return r;
}

/// Spectral-cutoff least squares: the residuals Y - u_theta(X) are regressed
/// on I e_1..I e_K, and <psi, theta> is estimated by <psi, theta> + sum a_k <psi, e_k>.
struct EstimatorConfig {
  double k_exponent = 1.0 / 3.0;  ///< K(N) = ceil(N^k_exponent)
  int k_fixed = -1;               ///< overrides the rule when positive
  bool noiseless = false;
  int min_replicates = 100;

  int cutoff(int N) const {
    return k_fixed > 0 ? k_fixed : static_cast<int>(std::ceil(std::pow(static_cast<double>(N), k_exponent) - 1e-9));
  }
};

struct RiskRow {
  int N = 0;
  int K = 0;
  double n_mse = 0.0;  ///< N * mean squared error
  double se = 0.0;     ///< standard error of n_mse
  double bias = 0.0;
};

struct RiskTable {
  std::vector<RiskRow> rows;
  int replicates = 0;
  bool flagged = false;  ///< too few replicates for a trend statement
  double truth = 0.0;

  double ratio_last_first() const { return rows.empty() ? 0.0 : rows.back().n_mse / rows.front().n_mse; }
};

/// Empirical N * MSE of the plug-in estimate of <psi, theta> for each N.
/// Data come from `truth` (defaults to the context itself, i.e. h = 0). The
/// decomposition supplies the eigenpairs of I*I on ctx.
inline RiskTable plugin_risk_study(const ScoreContext& ctx, const SpectralDecomposition& d, const ScalarField& psi,
                                   const std::vector<int>& N_list, int replicates, std::uint64_t seed,
                                   const EstimatorConfig& cfg = {}, const ScoreContext* truth = nullptr) {
  ctx.require(psi);
  if (d.grid != ctx.grid_ptr()) throw GridMismatch();
  if (N_list.empty() || replicates < 2) throw PreconditionError("plugin_risk_study: need N values and replicates");
  const ScoreContext& data_ctx = truth ? *truth : ctx;
  if (data_ctx.grid_ptr() != ctx.grid_ptr()) throw GridMismatch();

  RiskTable out;
  out.replicates = replicates;
  out.flagged = replicates < cfg.min_replicates;
  out.truth = inner_l2(psi, data_ctx.theta().field());
  const double base = inner_l2(psi, ctx.theta().field());

  int Kmax = 0;
  for (int N : N_list) Kmax = std::max(Kmax, cfg.cutoff(N));
  if (Kmax > d.range_count()) throw PreconditionError("plugin_risk_study: cutoff exceeds the available eigenpairs");
  std::vector<ScalarField> feat;
  std::vector<double> psi_c;
  for (int k = 0; k < Kmax; ++k) {
    ScalarField e = d.eigenvector(k);
    feat.push_back(apply_I(ctx, e));
    psi_c.push_back(inner_l2(psi, e));
  }

  for (size_t q = 0; q < N_list.size(); ++q) {
    const int N = N_list[q], K = cfg.cutoff(N);
    std::vector<double> err(replicates);
    for (int rep = 0; rep < replicates; ++rep) {
      std::uint64_t rs = derive_seed(derive_seed(seed, q), rep);
      Eigen::MatrixXd F(N, K);
      Eigen::VectorXd res(N);
      for (int i = 0; i < N; ++i) {
        Sample s = draw_sample(data_ctx, rs, i, cfg.noiseless);
        res[i] = s.Y - interpolate(ctx.u(), s.X);
        for (int k = 0; k < K; ++k) F(i, k) = interpolate(feat[k], s.X);
      }
      Eigen::VectorXd a = (F.transpose() * F).ldlt().solve(F.transpose() * res);
      double est = base;
      for (int k = 0; k < K; ++k) est += a[k] * psi_c[k];
      err[rep] = est - out.truth;
    }
    RiskRow row;
    row.N = N;
    row.K = K;
    double m = 0.0, m2 = 0.0;
    for (double e : err) {
      m += e;
      m2 += e * e;
    }
    m /= replicates;
    m2 /= replicates;
    row.bias = m;
    row.n_mse = N * m2;
    double v = 0.0;
    for (double e : err) v += (N * e * e - row.n_mse) * (N * e * e - row.n_mse);
    row.se = std::sqrt(v / (replicates - 1) / replicates);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace infogeo
