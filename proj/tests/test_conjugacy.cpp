#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dalab/conjugacy.hpp"
#include "dalab/errors.hpp"
#include "dalab/foliation.hpp"
#include "dalab/lyapunov.hpp"
#include "dalab/rng.hpp"
#include "oracles.hpp"

using namespace dalab;

namespace {

ToralAutomorphism a7() { return make_linear_map(oracle::to_imat(oracle::kA7)); }

DAMap family(ConstructionTag mode, double eps) { return make_da_map(a7(), reference_shears(), eps, mode); }

// Periodic difference of two lifts, reduced to the fundamental domain around 0.
Vec3 wrap(const Vec3& d) { return d.array() - d.array().round(); }

double sup_displacement(const ConjugacyApprox& c, int n) {
  double m = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) m = std::max(m, c.displacement(TorusPoint(Vec3(i, j, k) / n)).norm());
    }
  }
  return m;
}

}  // namespace

TEST_CASE("the linear map has zero displacement") {
  const ConjugacyApprox c = solve_conjugacy(DAMap::linear(a7()), 1e-12);
  CHECK(c.tail_bound == 0.0);
  CHECK(sup_displacement(c, 8) == 0.0);
  CHECK(conjugacy_residual(c, 8) < 1e-14);
  const ConjugacyApprox zero = solve_conjugacy(family(ConstructionTag::post_composed, 0.0), 1e-12);
  CHECK(sup_displacement(zero, 8) == 0.0);
}

TEST_CASE("post_composed conjugacy residual and truncation refinement") {
  const DAMap f = family(ConstructionTag::post_composed, 0.05);
  const ConjugacyApprox c = solve_conjugacy(f, 1e-12);
  CHECK(c.tail_bound < 1e-12);
  CHECK(conjugacy_residual(c, 16) < 1e-8);

  std::array<int, 3> doubled = c.truncation;
  for (int& k : doubled) k *= 2;
  const ConjugacyApprox d = conjugacy_with_truncation(f, doubled);
  SplitMix64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const TorusPoint x = rng.point();
    CHECK((c.displacement(x) - d.displacement(x)).norm() < 1e-12);
  }

  double prev = conjugacy_residual(conjugacy_with_truncation(f, {2, 2, 2}), 12);
  for (int k = 4; k <= 12; k += 2) {
    const double cur = conjugacy_residual(conjugacy_with_truncation(f, {k, k, k}), 12);
    CHECK(cur <= 0.5 * prev);
    prev = cur;
  }
}

TEST_CASE("smooth_conjugate recovers the conjugating shear") {
  const double eps = 0.05;
  const ConjugacyApprox c = solve_conjugacy(family(ConstructionTag::smooth_conjugate, eps), 1e-12);
  SplitMix64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const Vec3 x = rng.point().coords();
    const Vec3 expected = oracle::reference_shear(x, eps) - x;
    CHECK((c.displacement(TorusPoint(x)) - expected).norm() < 2e-12);
  }
  CHECK(conjugacy_residual(c, 16) < 1e-10);
}

TEST_CASE("h and its inverse") {
  const ConjugacyApprox c = solve_conjugacy(family(ConstructionTag::smooth_conjugate, 0.05), 1e-12);
  SplitMix64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const TorusPoint x = rng.point();
    const TorusPoint hx = evaluate_h(c, x);
    CHECK(wrap(hx.coords() - x.coords() - c.displacement(x)).norm() < 1e-14);
    CHECK(torus_distance(hx, TorusPoint(oracle::reference_shear(x.coords(), 0.05))) < 1e-11);
    const TorusPoint back = evaluate_h(c, hx, Direction::inverse);
    CHECK(torus_distance(back, x) < 1e-10);
  }
  const ConjugacyApprox lin = solve_conjugacy(DAMap::linear(a7()), 1e-12);
  const TorusPoint p(Vec3(0.3, 0.4, 0.5));
  CHECK(torus_distance(evaluate_h(lin, p), p) == 0.0);
  CHECK(torus_distance(evaluate_h(lin, p, Direction::inverse), p) == 0.0);

  // u is only Hoelder here, so the fixed-point iteration cannot contract down to 1e-11.
  const ConjugacyApprox post = solve_conjugacy(family(ConstructionTag::post_composed, 0.05), 1e-12);
  try {
    evaluate_h(post, evaluate_h(post, p), Direction::inverse);
    FAIL("expected InversionDiverged");
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::InversionDiverged);
  }
}

TEST_CASE("h sends fixed points of f to fixed points of A") {
  const ConjugacyApprox ref = solve_conjugacy(family(ConstructionTag::post_composed, 0.05), 1e-12);
  const PeriodicOrbit origin = continue_periodic(ref.map, periodic_points_linear(a7(), 1).front(), 1);
  CHECK(torus_distance(evaluate_h(ref, origin.points.front()), TorusPoint()) < 1e-8);

  // A moved fixed point and the period-2 orbits; the Newton points carry round-off that
  // the Hoelder map h amplifies, hence the looser bound.
  ShearSpec g = reference_shears().front();
  g.phase = 0.7;
  const DAMap f = make_da_map(a7(), {g}, 0.05, ConstructionTag::post_composed);
  const PeriodicOrbit fix = continue_periodic(f, TorusPoint(), 1);
  REQUIRE(torus_distance(fix.points.front(), TorusPoint()) > 1e-4);
  const ConjugacyApprox c = solve_conjugacy(f, 1e-12);
  CHECK(torus_distance(evaluate_h(c, fix.points.front()), TorusPoint()) < 1e-6);
  for (const auto& seed : periodic_points_linear(a7(), 2)) {
    const PeriodicOrbit o = continue_periodic(ref.map, seed, 2);
    CHECK(torus_distance(evaluate_h(ref, o.points.front()), seed) < 1e-6);
  }
}

TEST_CASE("u is periodic on the lift") {
  const ConjugacyApprox c = solve_conjugacy(family(ConstructionTag::post_composed, 0.05), 1e-12);
  const IVec3 shift(3, -2, 5);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const Vec3 x = Vec3(i, j, (i + 3 * j) % 8) / 8.0;
      const Vec3 a = c.displacement(TorusPoint(x));
      const Vec3 b = c.displacement(TorusPoint(x + shift.cast<double>()));
      CHECK((a - b).norm() == 0.0);
    }
  }
}

TEST_CASE("u is first order in epsilon") {
  const ConjugacyApprox c1 = solve_conjugacy(family(ConstructionTag::post_composed, 0.01), 1e-13);
  const ConjugacyApprox c2 = solve_conjugacy(family(ConstructionTag::post_composed, 0.02), 1e-13);
  const double ratio = sup_displacement(c2, 10) / sup_displacement(c1, 10);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("Hoelder probe") {
  const std::vector<double> scales{1e-2, 1e-3, 1e-4};
  const Vec3 lin = holder_probe(solve_conjugacy(DAMap::linear(a7()), 1e-12), scales, 20, 1);
  CHECK(lin == Vec3::Ones());
  const Vec3 smooth = holder_probe(solve_conjugacy(family(ConstructionTag::smooth_conjugate, 0.05), 1e-12), scales, 20, 1);
  CHECK(smooth.minCoeff() >= 0.95);
  CHECK(smooth.maxCoeff() < 1.1);
  const Vec3 post = holder_probe(solve_conjugacy(family(ConstructionTag::post_composed, 0.05), 1e-12), scales, 20, 1);
  CHECK(post.allFinite());
  CHECK(holder_probe(solve_conjugacy(family(ConstructionTag::post_composed, 0.05), 1e-12), scales, 20, 1) == post);
  CHECK(post.minCoeff() > 0);
}

TEST_CASE("center derivative of h against the leaf density") {
  const TorusPoint x0(Vec3(0.31, 0.17, 0.62));

  const DAMap lin = DAMap::linear(a7());
  const LeafSegment ls = integrate_leaf(lin, x0, Bundle::wu, 0.25, 1e-3);
  const CenterDerivativeComparison cl =
      center_derivative_check(solve_conjugacy(lin, 1e-12), ls, leaf_density_profile(lin, ls, 1e-8));
  CHECK(cl.max_deviation < 1e-9);
  CHECK(oracle::trapezoid(ls.arclength, cl.h_prime) == doctest::Approx(1.0).epsilon(1e-12));

  const DAMap smooth = family(ConstructionTag::smooth_conjugate, 0.05);
  const LeafSegment ss = integrate_leaf(smooth, x0, Bundle::wu, 0.25, 1e-3);
  REQUIRE(ss.length() == doctest::Approx(0.5).epsilon(1e-6));
  const CenterDerivativeComparison cs =
      center_derivative_check(solve_conjugacy(smooth, 1e-12), ss, leaf_density_profile(smooth, ss, 1e-8));
  CHECK(cs.max_deviation < 1e-2);
  CHECK(cs.points == static_cast<int>(ss.points.size()));

  const DAMap post = family(ConstructionTag::post_composed, 0.05);
  const LeafSegment ps = integrate_leaf(post, x0, Bundle::wu, 0.25, 1e-3);
  const CenterDerivativeComparison cp =
      center_derivative_check(solve_conjugacy(post, 1e-12), ps, leaf_density_profile(post, ps, 1e-8));
  CHECK(std::isfinite(cp.max_deviation));
  CHECK(cp.max_deviation > cs.max_deviation);

  LeafSegment tiny = ss;
  tiny.points.resize(5);
  tiny.arclength.resize(5);
  tiny.base_index = 0;
  DensityProfile tp;
  tp.segment = tiny;
  tp.rho.assign(5, 1.0);
  tp.log_ratio.assign(5, 0.0);
  CHECK_THROWS_AS(center_derivative_check(solve_conjugacy(smooth, 1e-12), tiny, tp), LabError);
}

TEST_CASE("no spectral gap") {
  DAMap f = family(ConstructionTag::post_composed, 0.05);
  f.linear_part.eigenvalues[1] = 1.0 + 1e-8;
  try {
    solve_conjugacy(f, 1e-12);
    FAIL("expected NoSpectralGap");
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::NoSpectralGap);
  }
  CHECK_THROWS_AS(solve_conjugacy(family(ConstructionTag::post_composed, 0.05), 0.0), LabError);
}
