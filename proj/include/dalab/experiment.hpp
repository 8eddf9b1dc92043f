#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dalab/rigidity.hpp"
#include "dalab/serialize.hpp"

namespace dalab {

inline constexpr int kConfigSchemaVersion = 1;

enum ExitCode { kExitOk = 0, kExitInvalid = 2, kExitNumerical = 3 };

struct FoliationSettings {
  Bundle bundle = Bundle::wu;
  double halflength = 0.25;
  double step = kDefaultLeafStep;
  std::optional<Vec3> point;  // drawn from the seed when absent
};

struct ExperimentConfig {
  MapSpec map;
  std::vector<std::string> analyses{"report"};
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "dalab_out";
  RigidityConfig rigidity;
  FoliationSettings foliation;
  std::vector<double> holder_scales{1e-2, 1e-3, 1e-4};
};

/// All analysis names accepted in `analyses`.
const std::vector<std::string>& analysis_names();

/// Structural parse; rejects unknown keys and ill-typed values with ConfigInvalid.
/// Does not enforce the seed requirement (see validate_config).
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Budgets positive, analyses known, seed present for stochastic analyses, map
/// buildable. Throws ConfigInvalid naming the offending field.
void validate_config(const ExperimentConfig& cfg);

Json to_json(const ExperimentConfig& cfg);

/// Runs the selected analyses and writes outputs into cfg.output_dir.
/// Returns 0 on success, 2 on validation error, 3 on numerical failure; files
/// produced before a failure are kept.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace dalab
