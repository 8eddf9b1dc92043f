#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "dalab/rigidity.hpp"

namespace dalab {

using Json = nlohmann::json;

/// Bumped whenever a report field is renamed or removed.
inline constexpr int kReportSchemaVersion = 1;

Json to_json(const ShearSpec& g);
ShearSpec shear_from_json(const Json& j);
Json to_json(const MapSpec& m);
MapSpec map_from_json(const Json& j);

Json to_json(const ConeCertificate& c);
Json to_json(const ExponentField& e);
Json to_json(const PeriodicDataSummary& p);
Json to_json(const UBDStatistic& u);
Json to_json(const CocycleStatistic& c);

Json to_json(const RigidityReport& r);
/// Throws ConfigInvalid on a schema mismatch or missing field.
RigidityReport report_from_json(const Json& j);

/// One line per section and per predicate; failed sections are marked FAILED.
std::string render_text(const RigidityReport& r);

enum class ReportFormat { json, text };

/// Writes the report; throws IOFailure.
void emit_report(const RigidityReport& r, ReportFormat format, const std::filesystem::path& path);

/// Writes `content` to `path`, throwing IOFailure.
void write_file(const std::filesystem::path& path, const std::string& content);

// CSV appendices. Columns are listed in the README.
void write_exponents_csv(std::ostream& out, const ExponentField& e);
void write_periodic_csv(std::ostream& out, const PeriodicDataSummary& p);
void write_ubd_csv(std::ostream& out, const std::vector<UBDStatistic>& u);
void write_cocycle_csv(std::ostream& out, const std::vector<CocycleStatistic>& c);
void write_density_csv(std::ostream& out, const DensityProfile& d);
void write_verdicts_csv(std::ostream& out, const RigidityReport& r);

}  // namespace dalab
