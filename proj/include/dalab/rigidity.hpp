#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dalab/conjugacy.hpp"
#include "dalab/da_map.hpp"
#include "dalab/foliation.hpp"
#include "dalab/lyapunov.hpp"
#include "dalab/parallel.hpp"
#include "dalab/splitting.hpp"

namespace dalab {

/// Sum of the positive exponents. Throws NoPositiveExponents.
double pesin_entropy(const Vec3& exponents);
double pesin_entropy(const ExponentEstimate& exponents);

enum class VerdictState { pass, fail, not_applicable, error };

const char* state_name(VerdictState s);
VerdictState parse_state(const std::string& name);

/// One predicate evaluated at an explicit tolerance. `value` is compared
/// against `tolerance` in the sense given by `comparison` ("<" or ">").
struct Verdict {
  std::string id;
  std::string description;
  double value = 0;
  double tolerance = 0;
  std::string comparison = "<";
  VerdictState state = VerdictState::not_applicable;
  std::string note;

  bool passed() const { return state == VerdictState::pass; }
};

struct EntropyBalance {
  double lambda_f = 0;  // Lambda^wu_f + Lambda^su_f from periodic data
  double lambda_a = 0;  // lambda^wu_A + lambda^su_A
  double residual = 0;
  double tolerance = 0;
  VerdictState state = VerdictState::not_applicable;
};

/// Compares the constant periodic values with A's. Not applicable when any
/// periodic spread reaches `spread_threshold`.
EntropyBalance entropy_balance_check(const PeriodicDataSummary& periodic,
                                     const ToralAutomorphism& a, double tolerance,
                                     double spread_threshold = 1e-3);

struct RigidityConfig {
  std::uint64_t seed = 1;
  Execution exec = Execution::parallel;

  int cone_grid = 16;
  double cone_aperture = 0.5;

  int exponent_samples = 16;
  long long exponent_steps = 100000;
  int burn_in = kDefaultBurnIn;

  int max_period = 3;

  std::vector<double> ubd_scales{0.2, 0.1, 0.05};
  int ubd_samples = 8;
  UBDOptions ubd;

  int cocycle_pairs = 20;
  int cocycle_n_max = 200;
  double cocycle_separation = 0.1;

  double conjugacy_tolerance = 1e-12;
  int conjugacy_grid = 16;

  double claim1_halflength = 0.25;
  double leaf_step = kDefaultLeafStep;
  double density_tolerance = 1e-8;

  int center_samples = 100;
  int center_steps = 200;

  double exponent_tolerance = 5e-3;
  double spread_threshold = 1e-3;
  double ubd_spread_limit = 1.5;
  double entropy_tolerance = 1e-6;
  double claim1_tolerance = 1e-2;
  double conjugacy_check = 1e-8;
  double pesin_slack = 5e-3;
};

enum class Overall { rigid_evidence, non_rigid_evidence, inconclusive };

const char* overall_name(Overall o);
Overall parse_overall(const std::string& name);

struct SectionError {
  std::string section;
  std::string code;
  std::string message;
};

struct ConeSection {
  int grid_resolution = 0;
  double aperture = 0;
  double min_margin = 0;
  ConeMargins margins;
  bool verdict = false;
};

struct ExponentSection {
  BundleStats stats;
  Vec3 linear = Vec3::Zero();
  Vec3 deviation = Vec3::Zero();
  long long steps = 0;
};

struct PeriodicSection {
  int max_period = 0;
  int orbits = 0;
  int failures = 0;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 spread = Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  Vec3 max_deviation_from_linear = Vec3::Zero();
  std::optional<Vec3> fixed_point_exponents;
  std::optional<Vec3> fixed_point_deviation;
};

struct EntropySection {
  double pesin = 0;
  double linear_sum = 0;
  bool pesin_within_bound = true;
  EntropyBalance balance;
};

struct ConjugacySection {
  std::array<int, 3> truncation{0, 0, 0};
  double tail_bound = 0;
  double residual = 0;
  double max_displacement = 0;
  std::optional<double> conjugator_deviation;  // sup |u - (phi - id)|, smooth_conjugate only
};

struct Claim1Section {
  double max_deviation = 0;
  double mean_deviation = 0;
  int points = 0;
  double segment_length = 0;
};

struct CenterSection {
  double min_growth = 0;
  double mean_growth = 0;
  double threshold = 0;
  int samples = 0;
  int steps = 0;
};

struct RigidityReport {
  MapSpec map;
  std::uint64_t seed = 0;
  std::optional<ConeSection> cone;
  std::optional<ExponentSection> exponents;
  std::optional<PeriodicSection> periodic;
  std::vector<UBDStatistic> ubd;
  std::vector<CocycleStatistic> cocycle;
  std::optional<EntropySection> entropy;
  std::optional<ConjugacySection> conjugacy;
  std::optional<Claim1Section> claim1;
  std::optional<CenterSection> center;
  /// Ordered: P1, P2, P2.constant, P2.equal, P3, P4, P5, P6, entropy.
  std::vector<Verdict> verdicts;
  std::vector<SectionError> errors;
  Overall overall = Overall::inconclusive;

  const Verdict& verdict(const std::string& id) const;
  bool has_errors() const { return !errors.empty(); }
};

/// Minimum and mean of (1/n) sum log J^wu along orbits of random points.
CenterSection center_growth(const DAMap& f, int samples, int steps, std::uint64_t seed,
                            Execution exec = Execution::parallel);

/// Runs every analysis, evaluates P1-P6 and the entropy balance, and aggregates.
/// Failing sub-analyses are recorded in `errors`; the report is always returned.
RigidityReport rigidity_report(const DAMap& f, const RigidityConfig& config);

/// rigid_evidence iff P1, P2 and the entropy balance pass; non_rigid_evidence if P1
/// or P2 fails outright; inconclusive otherwise.
Overall aggregate(const std::vector<Verdict>& verdicts);

}  // namespace dalab
