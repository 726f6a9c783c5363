#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "infogeo/experiments.hpp"

using namespace infogeo;

namespace {

std::shared_ptr<const ScoreContext> ctx_of(Fixture f, int n, double amp = 0.0, std::uint64_t seed = 0) {
  return make_context(f, n, {amp, seed});
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

FisherSweep synthetic(std::vector<double> values, double kernel) {
  FisherSweep s;
  int n = 17;
  for (double v : values) {
    s.entries.push_back({n, 1.0 / (n - 1), v});
    n = 2 * n - 1;
  }
  s.kernel_relative = kernel;
  return s;
}

}  // namespace

TEST(Eigendecompose, PsdAndOrthonormal) {
  auto c = ctx_of(Fixture::square_ex1, 17, 0.3, 2);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  EXPECT_TRUE(d.complete);
  EXPECT_GE(d.values.minCoeff(), -1e-10);
  Eigen::MatrixXd G = d.vectors.transpose() * d.weights.asDiagonal() * d.vectors;
  EXPECT_LE((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-8);
  for (int k = 1; k < d.size(); ++k) EXPECT_GE(d.values[k - 1], d.values[k]);
}

TEST(Eigendecompose, DenseAndLanczosAgree) {
  auto c = ctx_of(Fixture::square_ex1, 17, 0.3, 2);
  ASSERT_EQ(c->dim(), 15 * 15);
  auto dd = eigendecompose(*c, 10, EigenMode::dense);
  auto dl = eigendecompose(*c, 10, EigenMode::iterative);
  for (int k = 0; k < 10; ++k) EXPECT_LT(rel(dl.values[k], dd.values[k]), 1e-6) << k;
  Eigen::MatrixXd G = dl.vectors.transpose() * dl.weights.asDiagonal() * dl.vectors;
  EXPECT_LE((G - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eigendecompose, BadRequests) {
  auto c = ctx_of(Fixture::square_ex1, 17);
  EXPECT_THROW(eigendecompose(*c, 0, EigenMode::dense), PreconditionError);
  EXPECT_THROW(eigendecompose(*c, c->dim() + 1, EigenMode::iterative), PreconditionError);
  auto big = ctx_of(Fixture::square_ex1, 65);
  EXPECT_THROW(eigendecompose(*big, 5, EigenMode::dense), PreconditionError);
}

TEST(SquareOracle, FrozenSpectrumAndInformation) {
  // tests/oracles/square_fv_oracle.py (independent numpy assembly), n = 9
  auto g = build_grid(DomainSpec::square(9));
  Conductivity th(ScalarField::from_function(
      g, [](Point q) { return 1.0 + 0.3 * std::sin(std::numbers::pi * q.x) * std::sin(std::numbers::pi * q.y); }));
  ScoreContext c(th, fixture_source(Fixture::square_ex1, g), fixture_boundary(Fixture::square_ex1, g));
  auto d = eigendecompose(c, c.dim(), EigenMode::dense);
  EXPECT_LT(rel(d.values[0], 0.15648006926721691), 1e-10);
  EXPECT_LT(rel(d.values[1], 0.055284510916518689), 1e-10);
  EXPECT_LT(rel(d.values.sum(), 0.41997396593233277), 1e-10);
  auto psi = ScalarField::from_function(
      g, [](Point q) { return std::sin(std::numbers::pi * (q.x - 1)) * std::sin(std::numbers::pi * (q.y - 1)); });
  EXPECT_LT(rel(InformationSolver(c).i_inverse(psi.interior()), 115110358.75243191), 1e-7);
}

TEST(SqrtApply, Eigenvector) {
  auto c = ctx_of(Fixture::square_ex1, 17, 0.2, 3);
  auto d = eigendecompose(*c, 20, EigenMode::dense);
  auto e1 = d.eigenvector(0);
  auto s = sqrt_apply(d, e1);
  EXPECT_LT((s - std::sqrt(d.values[0]) * e1).max_abs(), 1e-10 * e1.max_abs());
  auto e15 = d.eigenvector(15);
  EXPECT_LT(sqrt_apply(d, e15, 10).max_abs(), 1e-10 * e15.max_abs());
}

TEST(SqrtApply, CompositionIsInformation) {
  auto c = ctx_of(Fixture::square_ex1, 17, 0.2, 3);
  auto d = eigendecompose(*c, 12, EigenMode::dense);
  Eigen::VectorXd coef = Eigen::VectorXd::LinSpaced(12, 1.0, -1.0);
  auto h = ScalarField::from_interior(c->grid_ptr(), d.vectors * coef);
  auto twice = sqrt_apply(d, sqrt_apply(d, h));
  EXPECT_LT(norm_l2(twice - apply_info(*c, h)), 1e-6 * norm_l2(apply_info(*c, h)));
}

TEST(RangeSeries, LeadingEigenvector) {
  auto c = ctx_of(Fixture::disk_ex2, 17);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  auto rs = range_series(d, d.eigenvector(0));
  for (double m : rs.M) EXPECT_LT(rel(m, 1.0 / d.values[0]), 1e-8);
  EXPECT_LT(kernel_component(d, d.eigenvector(0)).relative, 1e-8);
}

TEST(RangeSeries, NondecreasingAndShapes) {
  auto c = ctx_of(Fixture::square_ex1, 33);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  auto bump = range_series(d, make_psi(*c, find_psi_fixture("square_bump")));
  auto info = range_series(d, make_psi(*c, find_psi_fixture("square_information")));
  for (size_t k = 1; k < bump.M.size(); ++k) EXPECT_GE(bump.M[k], bump.M[k - 1]);
  EXPECT_GE(series_growth(bump.M), 3.0);
  EXPECT_LE(series_growth(info.M), 1.05);
}

TEST(Fisher, InformationImageOfKnownDirection) {
  for (Fixture f : {Fixture::square_ex1, Fixture::disk_ex2}) {
    auto c = ctx_of(f, 33, 0.3, 9);
    auto h0 = random_field(c->grid_ptr(), 17);
    auto psi = apply_info(*c, h0);
    double ih = norm_l2(apply_I(*c, h0));
    auto rep = fisher_information(*c, psi, FisherMethod::direct_solve);
    EXPECT_LT(rel(rep.i_inverse_full, ih * ih), 1e-8) << to_string(f);
    EXPECT_LT(rel(rep.i_value, 1.0 / (ih * ih)), 1e-8);
  }
}

TEST(Fisher, DirectMatchesDenseQuadraticForm) {
  auto c = ctx_of(Fixture::disk_ex2, 33, 0.3, 1);
  auto psi = make_psi(*c, find_psi_fixture("disk_quadrant_bump"));
  Eigen::MatrixXd I = c->dense_I();
  Eigen::VectorXd w = c->weights();
  Eigen::MatrixXd G = I.transpose() * w.asDiagonal() * I;
  Eigen::VectorXd wp = w.cwiseProduct(psi.interior());
  double dense = wp.dot(G.ldlt().solve(wp));
  EXPECT_LT(rel(InformationSolver(*c).i_inverse(psi.interior()), dense), 1e-6);
}

TEST(Fisher, SpectralTruncationNeedsDecomposition) {
  auto c = ctx_of(Fixture::square_ex1, 17);
  auto psi = make_bump(c->grid_ptr(), {1.5, 1.5}, 0.2, 1.0);
  EXPECT_THROW(fisher_information(*c, psi, FisherMethod::spectral_truncation), PreconditionError);
  EXPECT_THROW(fisher_information(*c, ScalarField(c->grid_ptr()), FisherMethod::direct_solve), PreconditionError);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  auto rep = fisher_information(*c, psi, FisherMethod::spectral_truncation, &d);
  EXPECT_EQ(rep.i_inverse_full, rep.M.back());
}

TEST(Fisher, SaddleConstantIsSingular) {
  auto c = ctx_of(Fixture::saddle, 17);
  EXPECT_THROW(InformationSolver(*c).i_inverse(Eigen::VectorXd::Ones(c->dim())), SolverError);
}

TEST(Fisher, BumpSweepDiverges) {
  auto s = psi_refinement_sweep(find_psi_fixture("square_bump"), {17, 33, 65});
  ASSERT_EQ(s.entries.size(), 3u);
  EXPECT_GT(s.entries[1].i_inverse, s.entries[0].i_inverse);
  EXPECT_GT(s.entries[2].i_inverse, s.entries[1].i_inverse);
  EXPECT_GE(s.entries[2].i_inverse, 2.0 * s.entries[0].i_inverse);
  EXPECT_EQ(s.verdict, FisherVerdict::out_of_range_divergent);
}

TEST(Fisher, InRangeSweepStable) {
  auto s = psi_refinement_sweep(find_psi_fixture("square_in_range"), {17, 33, 65});
  double lo = 1e300, hi = 0;
  for (const auto& e : s.entries) {
    lo = std::min(lo, e.i_inverse);
    hi = std::max(hi, e.i_inverse);
  }
  EXPECT_LE(hi / lo - 1.0, 0.2);
  EXPECT_EQ(s.verdict, FisherVerdict::in_range);
}

TEST(Fisher, RayleighSandwich) {
  auto c = ctx_of(Fixture::square_ex1, 33, 0.3, 4);
  auto psi = make_psi(*c, find_psi_fixture("square_in_range"));
  InformationSolver solver(*c);
  double iv = 1.0 / solver.i_inverse(psi.interior());
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto h = random_field(c->grid_ptr(), derive_seed(3, t));
    double ip = inner_l2(psi, h);
    if (ip == 0.0) continue;
    double ih = norm_l2(apply_I(*c, h));
    EXPECT_GE(ih * ih / (ip * ip), iv * (1.0 - 1e-6));
  }
  auto hs = ScalarField::from_interior(c->grid_ptr(), solver.minimizer(psi.interior()));
  double ip = inner_l2(psi, hs), ih = norm_l2(apply_I(*c, hs));
  EXPECT_LT(rel(ih * ih / (ip * ip), iv), 1e-6);
}

TEST(Degeneracy, UnmaskedQuotientIsReciprocal) {
  auto c = ctx_of(Fixture::square_ex1, 33);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  auto psi = 10.0 * make_psi(*c, find_psi_fixture("square_bump"));
  for (int N : {50, 200, 600}) {
    auto st = degeneracy_sequence(*c, d, psi, N);
    EXPECT_LT(rel(st.quotient_unmasked, 1.0 / st.M_N), 1e-8) << N;
  }
}

TEST(Degeneracy, MaskedQuotientBoundAtFifty) {
  auto c = ctx_of(Fixture::square_ex1, 33);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  // quotient * M_N is scale free; the factor lifts M_50 above 2
  auto psi = 10.0 * make_psi(*c, find_psi_fixture("square_bump"));
  auto st = degeneracy_sequence(*c, d, psi, 50);
  EXPECT_LE(st.quotient, 16.0 / st.M_N);
  EXPECT_TRUE(st.h_N.vanishes_on_collar());
}

TEST(Degeneracy, QuotientNonincreasing) {
  auto c = ctx_of(Fixture::square_ex1, 33);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  auto psi = 10.0 * make_psi(*c, find_psi_fixture("square_bump"));
  double prev = 1e300;
  for (int N : {20, 50, 100, 200, 400, 600}) {
    auto st = degeneracy_sequence(*c, d, psi, N);
    EXPECT_LE(st.quotient, prev) << N;
    prev = st.quotient;
  }
}

TEST(Degeneracy, Preconditions) {
  auto c = ctx_of(Fixture::square_ex1, 17);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  // a tiny psi keeps M_N below 2
  auto psi = 1e-6 * make_bump(c->grid_ptr(), {1.5, 1.5}, 0.2, 1.0);
  EXPECT_THROW(degeneracy_sequence(*c, d, psi, 5), PreconditionError);
  EXPECT_THROW(degeneracy_sequence(*c, d, psi, 0), PreconditionError);
}

TEST(Kernel, SaddleConstants) {
  auto c = ctx_of(Fixture::saddle, 33);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  EXPECT_GE(kernel_component(d, ScalarField::constant(c->grid_ptr(), 1.0)).relative, 0.9);
}

TEST(Kernel, DiskRandomPsiCoarseGrid) {
  auto c = ctx_of(Fixture::disk_ex2, 17);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  for (std::uint64_t t = 0; t < 20; ++t)
    EXPECT_LE(kernel_component(d, random_field(c->grid_ptr(), derive_seed(1000, t))).relative, 1e-3);
}

TEST(Kernel, DiskNearNullModesSitAtTheOrigin) {
  // below the relative tolerance on finer disk grids are small but positive
  // eigenvalues whose eigenvectors live on the innermost rings, where grad u
  // vanishes
  auto c = ctx_of(Fixture::disk_ex2, 33);
  auto d = eigendecompose(*c, c->dim(), EigenMode::dense);
  const Grid& g = c->grid();
  int near_null = 0;
  for (int k = d.range_count(); k < d.size(); ++k) {
    EXPECT_GT(d.values[k], 0.0);
    auto e = d.eigenvector(k);
    double inner = 0.0, total = 0.0;
    for (int n = 0; n < g.num_nodes(); ++n) {
      double m = g.quad_weights()[n] * e[n] * e[n];
      total += m;
      if (g.node(n).norm() < 3.5 * g.spacing1()) inner += m;
    }
    EXPECT_GE(inner / total, 0.9) << k;
    ++near_null;
  }
  EXPECT_GT(near_null, 0);
}

TEST(Classify, Precedence) {
  SweepThresholds t;
  EXPECT_EQ(classify_sweep(synthetic({1, 3, 9}, 0.5), t), FisherVerdict::out_of_range_divergent);
  EXPECT_EQ(classify_sweep(synthetic({1, 1.1, 1.05}, 0.5), t), FisherVerdict::kernel_obstructed);
  EXPECT_EQ(classify_sweep(synthetic({1, 1.1, 1.15}, 0.0), t), FisherVerdict::in_range);
  EXPECT_EQ(classify_sweep(synthetic({1, 1.5, 1.9}, 0.0), t), FisherVerdict::undetermined);
  EXPECT_EQ(classify_sweep(synthetic({1, std::numeric_limits<double>::infinity(), 2}, 0.0), t),
            FisherVerdict::undetermined);
  EXPECT_TRUE(is_out_of_range(FisherVerdict::kernel_obstructed));
  EXPECT_FALSE(is_out_of_range(FisherVerdict::undetermined));
}

TEST(Classify, SweepNeedsThreeLevels) {
  EXPECT_THROW(psi_refinement_sweep(find_psi_fixture("square_bump"), {17, 33}), PreconditionError);
}
