// Acceptance runner: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes or every failing criterion is
// listed with --known-failure (ctest registers the documented ones).

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "infogeo/infogeo.hpp"

using namespace infogeo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. theta = 1, f = 2 reproduces (|x|^2 - 1)/2 on both fixtures.
Outcome exact_recovery() {
  double worst = 0.0, worst_time = 0.0;
  for (Fixture f : {Fixture::square_ex1, Fixture::disk_ex2}) {
    GridPtr g = fixture_grid(f, 65);
    auto t0 = std::chrono::steady_clock::now();
    ScalarField u = solve_dirichlet(EllipticOperator(Conductivity::unit(g)), fixture_source(f, g), fixture_boundary(f, g));
    worst_time = std::max(worst_time, seconds_since(t0));
    auto exact = ScalarField::from_function(g, [](Point p) { return (p.x * p.x + p.y * p.y - 1.0) / 2.0; });
    worst = std::max(worst, (u - exact).max_abs());
  }
  return {worst <= 1e-10 && worst_time < 1.0,
          "max_err=" + fmt("%.2e", worst) + " (tol 1e-10) solve_time=" + fmt("%.3f", worst_time) + "s (limit 1s)"};
}

// 2. Taylor remainder slope 2 +- 0.1 for five random (theta, h).
Outcome linearisation_order() {
  double lo = 1e9, hi = -1e9;
  for (int t = 0; t < 5; ++t) {
    Fixture f = t % 2 == 0 ? Fixture::square_ex1 : Fixture::disk_ex2;
    auto ctx = make_context(f, 33, {0.3, derive_seed(101, t)});
    ScalarField h = random_field(ctx->grid_ptr(), derive_seed(202, t));
    h = h * (0.2 / h.max_abs());
    double s = linearisation_remainder(*ctx, h, {1e-1, 1e-2, 1e-3, 1e-4}).slope;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo >= 1.9 && hi <= 2.1, "slopes in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "] (target 2.0 +- 0.1)"};
}

// 3. Nodal adjoint defect <= 5 h and shrinking at least by the factor 0.75
// under 2x refinement.
Outcome adjoint_consistency() {
  bool ok = true;
  std::string detail;
  for (Fixture f : {Fixture::square_ex1, Fixture::disk_ex2}) {
    double prev = 0.0;
    for (int n : {33, 65}) {
      auto ctx = make_context(f, n);
      double worst = 0.0;
      for (int k = 0; k < 100; ++k) {
        ScalarField h = random_field(ctx->grid_ptr(), derive_seed(303, 2 * k));
        ScalarField g = random_field(ctx->grid_ptr(), derive_seed(303, 2 * k + 1));
        worst = std::max(worst, adjoint_defect(*ctx, h, g));
      }
      double bound = 5.0 * ctx->grid().h_mesh();
      ok = ok && worst <= bound;
      detail += to_string(f) + "@" + std::to_string(n) + "=" + fmt("%.2e", worst) + "(<=" + fmt("%.2e", bound) + ") ";
      if (n == 65) {
        double ratio = worst / prev;
        ok = ok && ratio <= 0.75;
        detail += "ratio=" + fmt("%.3f", ratio) + " ";
      }
      prev = worst;
    }
  }
  return {ok, detail + "(ratio <= 0.75)"};
}

// 4. Stability floor over 200 random collar-supported h on 33 and 65.
Outcome stability_floor() {
  bool ok = true;
  std::string detail;
  int applicable = 0;
  for (Fixture f : {Fixture::square_ex1, Fixture::disk_ex2, Fixture::saddle}) {
    auto r33 = stability_report(*make_context(f, 33), 200, 404, 1.0);
    auto r65 = stability_report(*make_context(f, 65), 200, 404, 1.0);
    if (!r33.applicable || !r65.applicable) {
      detail += to_string(f) + ": identifiability fails, skipped; ";
      continue;
    }
    ++applicable;
    double change = std::abs(r33.min_ratio_T - r65.min_ratio_T) / r65.min_ratio_T;
    ok = ok && r33.min_ratio_T > 0 && r65.min_ratio_T > 0 && change <= 0.25;
    detail += to_string(f) + ": min " + fmt("%.4f", r33.min_ratio_T) + " -> " + fmt("%.4f", r65.min_ratio_T) +
              " change=" + fmt("%.3f", change) + "; ";
  }
  return {ok && applicable > 0, detail + "(change <= 0.25)"};
}

// 5. Degeneracy for the non-negative square bump.
Outcome degeneracy() {
  auto t0 = std::chrono::steady_clock::now();
  PsiSpec spec = find_psi_fixture("square_bump");
  auto ctx = make_context(Fixture::square_ex1, 33);
  ScalarField psi = make_psi(*ctx, spec);
  auto d = eigendecompose(*ctx, ctx->dim(), EigenMode::dense);
  auto rs = range_series(d, psi);
  double growth = series_growth(rs.M);

  auto sweep = psi_refinement_sweep(spec, {17, 33, 65});
  double sweep_growth = sweep.entries.back().i_inverse / sweep.entries.front().i_inverse;

  double worst = 0.0;
  int worst_N = 0, violations = 0, tested = 0;
  for (int N = 1; N <= static_cast<int>(rs.M.size()); ++N) {
    if (rs.M[N - 1] < 2.0) continue;
    auto step = degeneracy_sequence(*ctx, d, psi, N);
    double qm = step.quotient * step.M_N;
    ++tested;
    if (qm > 17.6) ++violations;
    if (qm > worst) {
      worst = qm;
      worst_N = N;
    }
  }
  double secs = seconds_since(t0);
  bool a = growth >= 3.0, b = sweep_growth >= 2.0, c = violations == 0, t = secs < 300.0;
  return {a && b && c && t,
          "(a) M_N growth=" + fmt("%.3e", growth) + (a ? " ok" : " FAIL") + " (b) i_inverse 17->65 x" +
              fmt("%.3e", sweep_growth) + (b ? " ok" : " FAIL") + " (c) max quotient*M_N=" + fmt("%.3f", worst) +
              " at N=" + std::to_string(worst_N) + ", " + std::to_string(violations) + "/" + std::to_string(tested) +
              " above 17.6" + (c ? " ok" : " FAIL") + " time=" + fmt("%.1f", secs) + "s"};
}

// 6. In-range contrast: M_N plateau and stable i_inverse.
Outcome in_range_contrast() {
  bool ok = true;
  std::string detail;
  for (const auto& spec : shipped_psi_fixtures()) {
    if (!spec.expect_in_range) continue;
    auto res = default_sweep_resolutions(spec.fixture);
    int dense_n = spec.fixture == Fixture::square_ex1 ? 33 : 65;
    auto ctx = make_context(spec.fixture, dense_n);
    auto d = eigendecompose(*ctx, ctx->dim(), EigenMode::dense);
    double spread = series_tail_spread(range_series(d, make_psi(*ctx, spec)).M);
    auto sweep = psi_refinement_sweep(spec, res);
    double lo = 1e300, hi = 0.0;
    for (const auto& e : sweep.entries) {
      lo = std::min(lo, e.i_inverse);
      hi = std::max(hi, e.i_inverse);
    }
    double change = hi / lo - 1.0;
    ok = ok && spread <= 0.05 && change <= 0.20;
    detail += spec.name + ": plateau=" + fmt("%.4f", spread) + " i_inverse change=" + fmt("%.3f", change) + "; ";
  }
  return {ok, detail + "(plateau <= 0.05, change <= 0.20)"};
}

// 7. Transport obstruction and the travel time from (1.5, 1.5).
Outcome transport_obstruction() {
  bool ok = true;
  std::string detail;
  auto sq = make_context(Fixture::square_ex1, 65);
  const GridPtr& gs = sq->grid_ptr();
  int bumps = 0, bad = 0;
  const std::vector<std::pair<Point, double>> square_bumps{
      {{1.5, 1.5}, 0.2}, {{1.3, 1.65}, 0.15}, {{1.2, 1.2}, 0.1}, {{1.8, 1.4}, 0.12}, {{1.5, 1.8}, 0.15}, {{1.35, 1.35}, 0.3}};
  for (const auto& [c, r] : square_bumps) {
    ++bumps;
    if (range_verdict(*sq, make_bump(gs, c, r, 1.0)).status != RangeStatus::incompatible) ++bad;
  }
  auto dk = make_context(Fixture::disk_ex2, 129);
  SeedStrategy rays = default_seed_strategy(Fixture::disk_ex2);
  const std::vector<std::pair<Point, double>> quadrant_bumps{
      {{0.35, 0.35}, 0.2}, {{-0.4, 0.3}, 0.15}, {{0.1, -0.6}, 0.1}, {{-0.5, -0.5}, 0.2}};
  for (const auto& [c, r] : quadrant_bumps) {
    ++bumps;
    if (!is_out_of_range(range_verdict(*dk, make_bump(dk->grid_ptr(), c, r, 1.0), rays).status)) ++bad;
  }
  ok = ok && bad == 0;
  detail += std::to_string(bumps - bad) + "/" + std::to_string(bumps) + " bumps out of range; ";

  int inr = 0, inr_bad = 0;
  for (const auto& spec : shipped_psi_fixtures()) {
    if (!spec.expect_in_range) continue;
    ++inr;
    auto ctx = make_context(spec.fixture, default_transport_resolution(spec.fixture));
    auto v = range_verdict(*ctx, make_psi(*ctx, spec), default_seed_strategy(spec.fixture));
    if (v.status != RangeStatus::compatible_within_tol) ++inr_bad;
  }
  ok = ok && inr_bad == 0;
  detail += std::to_string(inr - inr_bad) + "/" + std::to_string(inr) + " in-range compatible; ";

  double T = trace_curve(*sq, {1.5, 1.5}, Direction::forward).travel_time;
  double err = std::abs(T - std::log(4.0 / 3.0));
  ok = ok && err <= 1e-4;
  detail += "T=" + fmt("%.8f", T) + " |T-ln(4/3)|=" + fmt("%.2e", err) + " (tol 1e-4)";
  return {ok, detail};
}

// 8. LAN at N = 1e4 with 2000 replicates.
Outcome lan() {
  auto t0 = std::chrono::steady_clock::now();
  auto ctx = make_context(Fixture::square_ex1, 33);
  ScalarField h = make_bump(ctx->grid_ptr(), {1.6, 1.6}, 0.3, 1.0);
  h = h * (std::sqrt(0.1) / norm_l2(apply_I(*ctx, h)));
  auto r = lan_mc(*ctx, h, 10000, 2000, 808);
  double secs = seconds_since(t0);
  bool ok = r.z_mean() <= 4.0 && r.z_variance() <= 4.0 && r.ks_distance <= 0.05 && secs < 600.0;
  return {ok, "mean=" + fmt("%.5f", r.mean) + " ref=" + fmt("%.5f", r.reference_mean) + " z=" + fmt("%.2f", r.z_mean()) +
                  " var=" + fmt("%.5f", r.variance) + " ref=" + fmt("%.5f", r.reference_variance) +
                  " z=" + fmt("%.2f", r.z_variance()) + " KS=" + fmt("%.4f", r.ks_distance) +
                  " (z <= 4, KS <= 0.05) time=" + fmt("%.1f", secs) + "s"};
}

// 9. Score Gram matrix over four directions at N = 1e5.
Outcome information_identity() {
  auto ctx = make_context(Fixture::square_ex1, 33);
  const GridPtr& g = ctx->grid_ptr();
  std::vector<ScalarField> basis{make_bump(g, {1.3, 1.3}, 0.15, 1.0), make_bump(g, {1.7, 1.3}, 0.15, 1.0),
                                 make_bump(g, {1.5, 1.6}, 0.25, 1.0), random_field(g, 909)};
  auto r = info_gram_mc(*ctx, basis, 100000, 910);
  return {r.max_z() <= 4.0, "max entrywise z=" + fmt("%.2f", r.max_z()) + " (<= 4)"};
}

// 10. Saddle kernel contains the constants; the disk shows no kernel.
Outcome saddle_kernel() {
  auto sd = make_context(Fixture::saddle, 33);
  auto d = eigendecompose(*sd, sd->dim(), EigenMode::dense);
  double rel_one = kernel_component(d, ScalarField::constant(sd->grid_ptr(), 1.0)).relative;

  auto dk = make_context(Fixture::disk_ex2, 33);
  auto dd = eigendecompose(*dk, dk->dim(), EigenMode::dense);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k)
    worst = std::max(worst, kernel_component(dd, random_field(dk->grid_ptr(), derive_seed(1010, k))).relative);
  return {rel_one >= 0.9 && worst <= 1e-3, "saddle psi=1 relative kernel=" + fmt("%.4f", rel_one) +
                                               " (>= 0.9); disk max over 20 random psi=" + fmt("%.2e", worst) +
                                               " (<= 1e-3)"};
}

// 11. Transport and spectral verdicts agree on every shipped psi fixture.
Outcome coherence_all() {
  int agree = 0, total = 0;
  std::string detail;
  for (const auto& spec : shipped_psi_fixtures()) {
    auto c = coherence(spec);
    ++total;
    if (c.agree) ++agree;
    detail += spec.name + "=" + to_string(c.transport.status) + "/" + to_string(c.sweep.verdict) + " ";
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " agree: " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> known;
  std::vector<int> only;
  app.add_option("--known-failure", known, "criterion allowed to fail (documented)");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact-solution recovery", exact_recovery},
      {"linearisation order", linearisation_order},
      {"adjoint consistency", adjoint_consistency},
      {"stability floor", stability_floor},
      {"Fisher information degeneracy", degeneracy},
      {"in-range contrast", in_range_contrast},
      {"transport obstruction", transport_obstruction},
      {"LAN Monte Carlo", lan},
      {"information identity", information_identity},
      {"saddle kernel", saddle_kernel},
      {"cross-module coherence", coherence_all},
  };
  std::set<int> allowed(known.begin(), known.end());
  std::set<int> selected(only.begin(), only.end());
  int unexpected = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass && !allowed.count(id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
