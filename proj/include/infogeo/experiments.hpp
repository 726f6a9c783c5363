#pragma once

// Named fixtures: forward problems, conductivities and psi functionals, plus
// the compositions used by the CLI and the acceptance runner.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "infogeo/random_fields.hpp"
#include "infogeo/score.hpp"
#include "infogeo/spectral.hpp"
#include "infogeo/transport.hpp"

namespace infogeo {

/// square_ex1: [1,2]^2, f = 2, g = (|x|^2 - 1)/2.
/// disk_ex2: unit disk, f = 2, g = 0 (u = (|x|^2 - 1)/2, grad u = x).
/// saddle: unit disk, f = 0, g = x^2 - y^2.
enum class Fixture { square_ex1, disk_ex2, saddle };

inline std::string to_string(Fixture f) {
  switch (f) {
    case Fixture::square_ex1: return "square_ex1";
    case Fixture::disk_ex2: return "disk_ex2";
    case Fixture::saddle: return "saddle";
  }
  return "?";
}

inline Fixture fixture_from_string(const std::string& s) {
  if (s == "square_ex1") return Fixture::square_ex1;
  if (s == "disk_ex2") return Fixture::disk_ex2;
  if (s == "saddle") return Fixture::saddle;
  throw PreconditionError("unknown fixture '" + s + "'");
}

inline DomainKind fixture_domain(Fixture f) {
  return f == Fixture::square_ex1 ? DomainKind::square_shifted : DomainKind::unit_disk;
}

inline GridPtr fixture_grid(Fixture f, int resolution) {
  return build_grid(DomainSpec::from_resolution(fixture_domain(f), resolution));
}

inline ScalarField fixture_source(Fixture f, const GridPtr& g) {
  return ScalarField::constant(g, f == Fixture::saddle ? 0.0 : 2.0);
}

inline ScalarField fixture_boundary(Fixture f, const GridPtr& g) {
  switch (f) {
    case Fixture::square_ex1:
      return ScalarField::from_function(g, [](Point p) { return (p.x * p.x + p.y * p.y - 1.0) / 2.0; });
    case Fixture::disk_ex2: return ScalarField(g);
    case Fixture::saddle: return ScalarField::from_function(g, [](Point p) { return p.x * p.x - p.y * p.y; });
  }
  return ScalarField(g);
}

/// theta = 1 + amplitude * (smooth random field scaled to unit max norm);
/// amplitude 0 gives theta = 1.
struct ConductivitySpec {
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

inline Conductivity make_conductivity(const GridPtr& g, const ConductivitySpec& spec) {
  if (spec.amplitude == 0.0) return Conductivity::unit(g);
  ScalarField r = random_field(g, spec.seed);
  double m = r.max_abs();
  if (m == 0.0) return Conductivity::unit(g);
  return Conductivity(ScalarField::constant(g, 1.0) + r * (spec.amplitude / m));
}

inline std::shared_ptr<const ScoreContext> make_context(Fixture f, int resolution, const ConductivitySpec& cs = {}) {
  GridPtr g = fixture_grid(f, resolution);
  return std::make_shared<const ScoreContext>(make_conductivity(g, cs), fixture_source(f, g), fixture_boundary(f, g));
}

/// (1 - s^2)^4 on the ball, s = |x - c| / radius. Used as the potential y of
/// manufactured in-range functionals; its Laplacian is resolved on coarse
/// grids far better than that of the exponential mollifier.
inline ScalarField poly_bump(const GridPtr& g, Point center, double radius) {
  if (g->boundary_distance(center) - radius < g->collar_width() - 1e-12)
    throw PreconditionError("bump support intersects the boundary collar");
  return ScalarField::from_function(g, [&](Point p) {
    double s2 = (p - center).norm() * (p - center).norm() / (radius * radius);
    return s2 < 1.0 ? std::pow(1.0 - s2, 4) : 0.0;
  });
}

/// psi functionals. `bump` is the non-negative mollifier bump. `in_range`
/// is psi = I*_theta g with g = L_theta y for the polynomial bump y, so that
/// V_theta g = y (exactly, in the discrete adjoint). `information` is
/// psi = I*_theta I_theta h for the mollifier bump h.
enum class PsiKind { bump, in_range, information, constant };

inline std::string to_string(PsiKind k) {
  switch (k) {
    case PsiKind::bump: return "bump";
    case PsiKind::in_range: return "in_range";
    case PsiKind::information: return "information";
    default: return "constant";
  }
}

struct PsiSpec {
  std::string name;
  Fixture fixture = Fixture::square_ex1;
  PsiKind kind = PsiKind::bump;
  Point center{1.5, 1.5};
  double radius = 0.2;
  bool expect_in_range = false;
};

inline ScalarField make_psi(const ScoreContext& ctx, const PsiSpec& s) {
  const GridPtr& g = ctx.grid_ptr();
  switch (s.kind) {
    case PsiKind::bump: return make_bump(g, s.center, s.radius, 1.0);
    case PsiKind::in_range: {
      ScalarField y = poly_bump(g, s.center, s.radius);
      return apply_I_adjoint(ctx, ctx.op().apply_L(y));
    }
    case PsiKind::information: return apply_info(ctx, make_bump(g, s.center, s.radius, 1.0));
    case PsiKind::constant: return ScalarField::constant(g, 1.0);
  }
  return ScalarField(g);
}

/// Every shipped psi fixture.
inline std::vector<PsiSpec> shipped_psi_fixtures() {
  return {
      {"square_bump", Fixture::square_ex1, PsiKind::bump, {1.5, 1.5}, 0.2, false},
      {"square_bump_offset", Fixture::square_ex1, PsiKind::bump, {1.3, 1.65}, 0.15, false},
      {"square_in_range", Fixture::square_ex1, PsiKind::in_range, {1.5, 1.5}, 0.35, true},
      {"square_information", Fixture::square_ex1, PsiKind::information, {1.5, 1.5}, 0.3, true},
      {"disk_quadrant_bump", Fixture::disk_ex2, PsiKind::bump, {0.35, 0.35}, 0.2, false},
      {"disk_in_range", Fixture::disk_ex2, PsiKind::in_range, {0.5, 0.0}, 0.37, true},
      {"saddle_bump", Fixture::saddle, PsiKind::bump, {0.5, 0.3}, 0.15, false},
  };
}

inline PsiSpec find_psi_fixture(const std::string& name) {
  for (const auto& p : shipped_psi_fixtures())
    if (p.name == name) return p;
  throw PreconditionError("unknown psi fixture '" + name + "'");
}

/// Refinement resolutions: the disk maps N to N/2 + 1 rings, so it starts one
/// level finer.
inline std::vector<int> default_sweep_resolutions(Fixture f) {
  if (f == Fixture::square_ex1) return {17, 33, 65};
  return {33, 65, 129};
}

/// Transport diagnostics run on the finest sweep level.
inline int default_transport_resolution(Fixture f) { return default_sweep_resolutions(f).back(); }

inline SeedStrategy default_seed_strategy(Fixture f) {
  SeedStrategy s;
  s.topology = f == Fixture::disk_ex2 ? CurveTopology::radial_rays : CurveTopology::boundary_to_boundary;
  return s;
}

inline FisherSweep psi_refinement_sweep(const PsiSpec& spec, const std::vector<int>& resolutions,
                                        const ConductivitySpec& cs = {}, const SweepThresholds& t = {}) {
  return refinement_sweep(
      [&](int n) {
        auto ctx = make_context(spec.fixture, n, cs);
        return DiscreteProblem{ctx, make_psi(*ctx, spec)};
      },
      resolutions, t);
}

struct CoherenceResult {
  PsiSpec psi;
  RangeVerdict transport;
  FisherSweep sweep;
  bool agree = false;
};

/// Transport and spectral verdicts for one psi fixture.
inline CoherenceResult coherence(const PsiSpec& spec, int transport_resolution = -1,
                                 std::optional<std::vector<int>> resolutions = std::nullopt) {
  CoherenceResult out;
  out.psi = spec;
  if (transport_resolution < 0) transport_resolution = default_transport_resolution(spec.fixture);
  auto ctx = make_context(spec.fixture, transport_resolution);
  out.transport = range_verdict(*ctx, make_psi(*ctx, spec), default_seed_strategy(spec.fixture));
  out.sweep = psi_refinement_sweep(spec, resolutions.value_or(default_sweep_resolutions(spec.fixture)));
  out.agree = is_out_of_range(out.transport.status) == is_out_of_range(out.sweep.verdict);
  return out;
}

}  // namespace infogeo
