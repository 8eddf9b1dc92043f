#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dalab/da_map.hpp"
#include "dalab/parallel.hpp"

namespace dalab {

inline constexpr int kDefaultBurnIn = 1000;
inline constexpr int kHistoryStride = 100;
inline constexpr long long kDefaultPeriodicCap = 1000000;

struct ExponentEstimate {
  Vec3 values = Vec3::Zero();  // (lambda_s, lambda_wu, lambda_su), ascending
  long long steps = 0;
  std::vector<Vec3> history;   // running averages every kHistoryStride steps
};

/// Discrete QR method: Q_{k+1} R_k = Df(x_k) Q_k from a random orthonormal Q_0,
/// burn_in steps discarded. The random start is drawn from `qr_seed`.
/// Throws NumericalBlowup on non-finite data.
ExponentEstimate orbit_exponents(const DAMap& f, const TorusPoint& x0, long long steps,
                                 int burn_in = kDefaultBurnIn, std::uint64_t qr_seed = 0);

struct BundleStats {
  Vec3 mean = Vec3::Zero();
  Vec3 sd = Vec3::Zero();
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  int samples = 0;
};

BundleStats summarize(const std::vector<Vec3>& values);

struct ExponentField {
  BundleStats stats;
  std::vector<TorusPoint> starts;
  std::vector<ExponentEstimate> estimates;
};

/// Exponents from `samples` uniform random starting points; sample i uses
/// stream_seed(seed, i) for both its start and its QR initialization.
ExponentField exponent_field(const DAMap& f, int samples, long long steps, std::uint64_t seed,
                             int burn_in = kDefaultBurnIn, Execution exec = Execution::parallel);

/// A periodic point of the linear part with exact rational coordinates numerators / denominator.
struct LinearPeriodicPoint {
  TorusPoint point;
  IVec3 numerators;
  long long denominator = 1;
  IVec3 translation;  // A^p x - x
};

/// All solutions of (A^p - I) x in Z^3 with x in [0,1)^3. Count equals |det(A^p - I)|.
std::vector<TorusPoint> periodic_points_linear(const ToralAutomorphism& a, int period,
                                               long long cap = kDefaultPeriodicCap);
std::vector<LinearPeriodicPoint> periodic_seeds_linear(const ToralAutomorphism& a, int period,
                                                       long long cap = kDefaultPeriodicCap);

struct PeriodicOrbit {
  int period = 0;
  std::vector<TorusPoint> points;
  IVec3 translation = IVec3::Zero();  // f~^p(x) = x + translation
  Vec3 exponents = Vec3::Zero();      // (1/p) log |eigenvalues of D(f^p)|, ascending
  double newton_residual = 0;
  int newton_iterations = 0;
};

struct NewtonOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
  double hyperbolicity_gap = 1e-8;
};

/// Newton iteration on F(x) = f~^p(x) - x - m, m taken from the linear seed.
/// Throws NewtonDiverged or NonHyperbolicOrbit.
PeriodicOrbit continue_periodic(const DAMap& f, const TorusPoint& seed_point, int period,
                                const NewtonOptions& opts = {});

/// (1/p) log of eigenvalue moduli of D(f^p) at x, ascending.
Vec3 periodic_exponents(const DAMap& f, const TorusPoint& x, int period);

struct PeriodicFailure {
  TorusPoint seed;
  int period = 0;
  std::string message;
};

struct PeriodicDataSummary {
  int max_period = 0;
  std::vector<PeriodicOrbit> orbits;   // one per orbit of the linear part, ordered by period
  std::vector<PeriodicFailure> failures;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 spread = Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  Vec3 max_deviation_from_linear = Vec3::Zero();
  std::optional<Vec3> fixed_point_exponents;  // orbit continued from the origin, if any
};

/// Continues one representative of every periodic orbit of the linear part with
/// minimal period <= max_period. Continuation failures are collected, not thrown.
PeriodicDataSummary periodic_data_spread(const DAMap& f, int max_period,
                                         Execution exec = Execution::parallel,
                                         long long cap = kDefaultPeriodicCap);

}  // namespace dalab
