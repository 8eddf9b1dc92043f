#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dalab/errors.hpp"
#include "dalab/lyapunov.hpp"
#include "dalab/rng.hpp"
#include "oracles.hpp"

using namespace dalab;

namespace {

ToralAutomorphism a7() { return make_linear_map(oracle::to_imat(oracle::kA7)); }

DAMap family(ConstructionTag mode, double eps) { return make_da_map(a7(), reference_shears(), eps, mode); }

const auto kLogs = oracle::a7_log_moduli();

Vec3 a7_logs() { return Vec3(kLogs[0], kLogs[1], kLogs[2]); }

// Fixed point near the origin by shrinking-grid search of |f(x) - x|.
Vec3 brute_fixed_point(const DAMap& f) {
  Vec3 center = Vec3::Zero();
  double half = 0.1;
  for (int round = 0; round < 40; ++round) {
    double best = 1e9;
    Vec3 arg = center;
    for (int i = -5; i <= 5; ++i) {
      for (int j = -5; j <= 5; ++j) {
        for (int k = -5; k <= 5; ++k) {
          const Vec3 x = center + half / 5 * Vec3(i, j, k);
          const double r = (f.lift_forward(x) - x).norm();
          if (r < best) {
            best = r;
            arg = x;
          }
        }
      }
    }
    center = arg;
    half *= 0.5;
  }
  return center;
}

}  // namespace

TEST_CASE("QR exponents of A7 match the root oracle") {
  const DAMap lin = DAMap::linear(a7());
  const ExponentEstimate e = orbit_exponents(lin, TorusPoint(Vec3(0.3, 0.7, 0.11)), 100000, 1000);
  CHECK((e.values - a7_logs()).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(e.values[0] == doctest::Approx(-1.6190).epsilon(1e-3));
  CHECK(e.values[1] == doctest::Approx(0.4415).epsilon(1e-3));
  CHECK(e.values[2] == doctest::Approx(1.1777).epsilon(1e-3));
  CHECK(e.steps == 100000);
  CHECK(e.history.size() == 1000);

  for (long long steps : {1LL, 10LL, 137LL}) {
    const ExponentEstimate s = orbit_exponents(lin, TorusPoint(Vec3(0.9, 0.1, 0.4)), steps, 1000);
    CHECK((s.values - a7_logs()).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(orbit_exponents(lin, TorusPoint(), 0), LabError);
}

TEST_CASE("exponent sum vanishes for volume-preserving maps") {
  for (auto mode : {ConstructionTag::post_composed, ConstructionTag::smooth_conjugate}) {
    const ExponentEstimate e = orbit_exponents(family(mode, 0.05), TorusPoint(Vec3(0.21, 0.57, 0.83)), 100000);
    CHECK(std::abs(e.values.sum()) < 1e-3);
    CHECK(e.values[0] < 0);
    CHECK(e.values[0] < e.values[1]);
    CHECK(e.values[1] > 0);
    CHECK(e.values[1] < e.values[2]);
  }
}

TEST_CASE("exponent fields") {
  const ExponentField lin = exponent_field(DAMap::linear(a7()), 50, 10000, 7);
  CHECK(lin.stats.sd.maxCoeff() < 1e-6);
  CHECK(lin.stats.samples == 50);

  const DAMap smooth = family(ConstructionTag::smooth_conjugate, 0.05);
  const ExponentField s1 = exponent_field(smooth, 50, 100000, 7);
  CHECK((s1.stats.mean - a7_logs()).cwiseAbs().maxCoeff() < 2e-3);
  const ExponentField s2 = exponent_field(smooth, 50, 100000, 7);
  CHECK(s1.stats.mean == s2.stats.mean);
  CHECK(s1.stats.sd == s2.stats.sd);
  CHECK_THROWS_AS(exponent_field(smooth, 1, 100, 7), LabError);
}

TEST_CASE("periodic point counts match |det(A^p - I)|") {
  const ToralAutomorphism a = a7();
  for (int p = 1; p <= 4; ++p) {
    const long long expected = std::llabs(oracle::det3(oracle::power_minus_identity(oracle::kA7, p)));
    const auto seeds = periodic_seeds_linear(a, p);
    CHECK(static_cast<long long>(seeds.size()) == expected);
    const IMat3 ap = integer_power(a.matrix, p) - IMat3::Identity();
    std::set<std::array<long long, 3>> distinct;
    for (const auto& s : seeds) {
      // (A^p - I) x is an integer vector: check exactly on the rational numerators.
      const IVec3 image = ap * s.numerators;
      for (int c = 0; c < 3; ++c) CHECK(image[c] % s.denominator == 0);
      CHECK(image / s.denominator == s.translation);
      for (int c = 0; c < 3; ++c) {
        CHECK(s.numerators[c] >= 0);
        CHECK(s.numerators[c] < s.denominator);
      }
      distinct.insert({s.numerators[0], s.numerators[1], s.numerators[2]});
    }
    CHECK(static_cast<long long>(distinct.size()) == expected);
  }
  const auto fix = periodic_points_linear(a, 1);
  REQUIRE(fix.size() == 1);
  CHECK(fix[0].coords().norm() == 0.0);
  CHECK(periodic_points_linear(a, 2).size() == 13);
  CHECK(periodic_points_linear(a, 3).size() == 91);
  CHECK_THROWS_AS(periodic_points_linear(a, 25), LabError);
  CHECK_THROWS_AS(periodic_points_linear(a, 6, 100), LabError);
}

TEST_CASE("Newton continuation of periodic orbits") {
  const PeriodicOrbit lin = continue_periodic(DAMap::linear(a7()), TorusPoint(), 1);
  CHECK(lin.points.front().coords().norm() == 0.0);
  CHECK((lin.exponents - a7_logs()).cwiseAbs().maxCoeff() < 1e-12);

  // post_composed fixes the origin exactly, so use a phase-shifted shear to move the fixed point.
  ShearSpec g = reference_shears().front();
  g.phase = 0.7;
  const DAMap shifted = make_da_map(a7(), {g}, 0.05, ConstructionTag::post_composed);
  const PeriodicOrbit fix = continue_periodic(shifted, TorusPoint(), 1);
  CHECK(fix.newton_residual < 1e-12);
  const Vec3 brute = brute_fixed_point(shifted);
  CHECK(torus_distance(fix.points.front(), TorusPoint(brute)) < 1e-6);
  CHECK(torus_distance(fix.points.front(), TorusPoint()) < 0.2);
  CHECK(torus_distance(fix.points.front(), TorusPoint()) > 1e-4);

  const DAMap post = family(ConstructionTag::post_composed, 0.05);
  std::vector<TorusPoint> found;
  for (const auto& seed : periodic_points_linear(a7(), 2)) {
    const PeriodicOrbit o = continue_periodic(post, seed, 2);
    CHECK(o.newton_residual < 1e-12);
    CHECK(o.points.size() == 2);
    TorusPoint y = o.points.front();
    for (int k = 0; k < 2; ++k) y = apply(post, y);
    CHECK(torus_distance(y, o.points.front()) < 1e-10);
    CHECK(o.exponents[0] < o.exponents[1]);
    CHECK(o.exponents[1] < o.exponents[2]);
    found.push_back(o.points.front());
  }
  REQUIRE(found.size() == 13);
  for (std::size_t i = 0; i < found.size(); ++i) {
    for (std::size_t j = i + 1; j < found.size(); ++j) CHECK(torus_distance(found[i], found[j]) > 1e-4);
  }
}

TEST_CASE("periodic data spreads") {
  const PeriodicDataSummary lin = periodic_data_spread(DAMap::linear(a7()), 3);
  CHECK(lin.spread.maxCoeff() < 1e-12);
  CHECK(lin.failures.empty());

  const PeriodicDataSummary smooth = periodic_data_spread(family(ConstructionTag::smooth_conjugate, 0.05), 2);
  CHECK(smooth.spread.maxCoeff() < 1e-9);
  CHECK(smooth.max_deviation_from_linear.maxCoeff() < 1e-9);

  const DAMap post = family(ConstructionTag::post_composed, 0.05);
  const PeriodicDataSummary p = periodic_data_spread(post, 2);
  CHECK(p.failures.empty());
  REQUIRE(p.fixed_point_exponents.has_value());
  // Fixed-point eigenvalue oracle: eigenvalues of Df at the origin, which post_composed fixes.
  Eigen::EigenSolver<Mat3> es(derivative(post, TorusPoint()));
  std::vector<double> logs;
  for (int i = 0; i < 3; ++i) logs.push_back(std::log(std::abs(es.eigenvalues()[i])));
  std::sort(logs.begin(), logs.end());
  const Vec3 fix(logs[0], logs[1], logs[2]);
  CHECK((*p.fixed_point_exponents - fix).cwiseAbs().maxCoeff() < 1e-10);
  const double dev_wu = std::abs(fix[1] - kLogs[1]);
  CHECK(dev_wu > 1e-3);
  CHECK(p.spread[1] + 1e-12 >= std::abs(fix[1] - p.min[1]));
  CHECK(p.max_deviation_from_linear[1] + 1e-12 >= dev_wu);

  // One orbit per A-orbit of minimal period: 1 + 12/2 orbits up to period 2.
  CHECK(p.orbits.size() == 7);
}

TEST_CASE("summaries") {
  const BundleStats s = summarize({Vec3(1, 2, 3), Vec3(3, 2, 1)});
  CHECK(s.mean == Vec3(2, 2, 2));
  CHECK(s.min == Vec3(1, 2, 1));
  CHECK(s.max == Vec3(3, 2, 3));
  CHECK(s.sd[1] == 0.0);
}
