// Smallest end-to-end use of the library: solve the square problem, then
// compare the refinement behaviour of an in-range and an out-of-range psi.

#include <cstdio>

#include "infogeo/infogeo.hpp"

using namespace infogeo;

int main() {
  auto ctx = make_context(Fixture::square_ex1, 33, {0.3, 7});
  const ScoreContext& c = *ctx;
  std::printf("interior unknowns: %d\n", c.dim());

  // theta = 1 recovers (|x|^2 - 1)/2 to roundoff
  auto flat = make_context(Fixture::square_ex1, 33, {0.0, 0});
  double err = 0.0;
  for (int k = 0; k < flat->grid().num_nodes(); ++k) {
    Point p = flat->grid().node(k);
    err = std::max(err, std::abs(flat->u()[k] - (p.x * p.x + p.y * p.y - 1.0) / 2.0));
  }
  std::printf("max error against exact solution: %.2e\n", err);

  auto d = eigendecompose(c, 10, EigenMode::dense);
  std::printf("top eigenvalues of I*I:");
  for (int k = 0; k < 5; ++k) std::printf(" %.4e", d.values[k]);
  std::printf("\n");

  for (const char* name : {"square_bump", "square_in_range"}) {
    PsiSpec spec = find_psi_fixture(name);
    FisherSweep s = psi_refinement_sweep(spec, {17, 33, 65});
    std::printf("%-16s verdict %-24s", name, to_string(s.verdict).c_str());
    for (const auto& e : s.entries) std::printf("  n=%d: %.4e", e.resolution, e.i_inverse);
    std::printf("\n");
  }

  RangeVerdict v = range_verdict(c, make_bump(c.grid_ptr(), {1.5, 1.5}, 0.2, 1.0), default_seed_strategy(Fixture::square_ex1));
  std::printf("transport test on a bump: %s (max |integral| %.3e)\n", to_string(v.status).c_str(), v.max_abs_integral);
  return 0;
}
