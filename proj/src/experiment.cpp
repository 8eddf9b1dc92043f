#include "dalab/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw LabError(ErrorCode::ConfigInvalid, what); }

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) invalid(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) invalid("unknown key '" + key + "' in " + where);
  }
}

int get_int(const Json& j, const std::string& name) {
  if (!j.is_number_integer()) invalid("'" + name + "' must be an integer");
  return j.get<int>();
}

double get_real(const Json& j, const std::string& name) {
  if (!j.is_number()) invalid("'" + name + "' must be a number");
  return j.get<double>();
}

// Binds config keys to fields so parse and dump share one table.
struct Field {
  std::function<void(const Json&)> read;
  std::function<Json()> write;
};

Field int_field(int& target, const std::string& name) {
  return {[&target, name](const Json& j) { target = get_int(j, name); }, [&target] { return Json(target); }};
}

Field long_field(long long& target, const std::string& name) {
  return {[&target, name](const Json& j) {
            if (!j.is_number_integer()) invalid("'" + name + "' must be an integer");
            target = j.get<long long>();
          },
          [&target] { return Json(target); }};
}

Field real_field(double& target, const std::string& name) {
  return {[&target, name](const Json& j) { target = get_real(j, name); }, [&target] { return Json(target); }};
}

Field scales_field(std::vector<double>& target, const std::string& name) {
  return {[&target, name](const Json& j) {
            if (!j.is_array() || j.empty()) invalid("'" + name + "' must be a non-empty array");
            target.clear();
            for (const auto& v : j) target.push_back(get_real(v, name));
          },
          [&target] { return Json(target); }};
}

std::map<std::string, Field> budget_fields(RigidityConfig& r) {
  return {
      {"cone_grid", int_field(r.cone_grid, "cone_grid")},
      {"exponent_samples", int_field(r.exponent_samples, "exponent_samples")},
      {"exponent_steps", long_field(r.exponent_steps, "exponent_steps")},
      {"burn_in", int_field(r.burn_in, "burn_in")},
      {"max_period", int_field(r.max_period, "max_period")},
      {"ubd_scales", scales_field(r.ubd_scales, "ubd_scales")},
      {"ubd_samples", int_field(r.ubd_samples, "ubd_samples")},
      {"ubd_points_per_segment", int_field(r.ubd.points_per_segment, "ubd_points_per_segment")},
      {"frame_depth", int_field(r.ubd.depth, "frame_depth")},
      {"cocycle_pairs", int_field(r.cocycle_pairs, "cocycle_pairs")},
      {"cocycle_n_max", int_field(r.cocycle_n_max, "cocycle_n_max")},
      {"conjugacy_grid", int_field(r.conjugacy_grid, "conjugacy_grid")},
      {"center_samples", int_field(r.center_samples, "center_samples")},
      {"center_steps", int_field(r.center_steps, "center_steps")},
      {"claim1_halflength", real_field(r.claim1_halflength, "claim1_halflength")},
      {"leaf_step", real_field(r.leaf_step, "leaf_step")},
  };
}

std::map<std::string, Field> tolerance_fields(RigidityConfig& r) {
  return {
      {"exponent", real_field(r.exponent_tolerance, "exponent")},
      {"spread", real_field(r.spread_threshold, "spread")},
      {"ubd_spread", real_field(r.ubd_spread_limit, "ubd_spread")},
      {"entropy", real_field(r.entropy_tolerance, "entropy")},
      {"claim1", real_field(r.claim1_tolerance, "claim1")},
      {"conjugacy", real_field(r.conjugacy_tolerance, "conjugacy")},
      {"conjugacy_check", real_field(r.conjugacy_check, "conjugacy_check")},
      {"density", real_field(r.density_tolerance, "density")},
      {"ubd_density", real_field(r.ubd.tolerance, "ubd_density")},
      {"cone_aperture", real_field(r.cone_aperture, "cone_aperture")},
      {"cocycle_separation", real_field(r.cocycle_separation, "cocycle_separation")},
      {"pesin_slack", real_field(r.pesin_slack, "pesin_slack")},
  };
}

void read_table(const Json& j, std::map<std::string, Field> fields, const std::string& where) {
  std::set<std::string> allowed;
  for (const auto& [k, _] : fields) allowed.insert(k);
  check_keys(j, allowed, where);
  for (const auto& [key, value] : j.items()) fields.at(key).read(value);
}

Json write_table(const std::map<std::string, Field>& fields) {
  Json j = Json::object();
  for (const auto& [k, f] : fields) j[k] = f.write();
  return j;
}

bool stochastic(const std::string& analysis) {
  return analysis == "exponents" || analysis == "ubd" || analysis == "foliation" || analysis == "report";
}

struct Writer {
  std::filesystem::path dir;
  std::ostream& log;

  void json(const std::string& name, const Json& j) const {
    write_file(dir / name, j.dump(2) + "\n");
    log << "wrote " << (dir / name).string() << '\n';
  }
  template <class F>
  void csv(const std::string& name, F&& body) const {
    std::ostringstream out;
    body(out);
    write_file(dir / name, out.str());
    log << "wrote " << (dir / name).string() << '\n';
  }
};

}  // namespace

const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"exponents", "periodic", "conjugacy", "foliation", "ubd", "report"};
  return names;
}

ExperimentConfig parse_config(const Json& j) {
  try {
    check_keys(j, {"schema_version", "map", "analyses", "seed", "output_dir", "budgets", "tolerances",
                   "foliation", "holder_scales"},
               "config");
    if (!j.contains("schema_version")) invalid("missing field 'schema_version'");
    if (get_int(j.at("schema_version"), "schema_version") != kConfigSchemaVersion) {
      invalid("unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    ExperimentConfig cfg;
    if (!j.contains("map")) invalid("missing field 'map'");
    cfg.map = map_from_json(j.at("map"));
    if (j.contains("analyses")) {
      const Json& a = j.at("analyses");
      if (!a.is_array()) invalid("'analyses' must be an array of names");
      cfg.analyses.clear();
      for (const auto& name : a) {
        if (!name.is_string()) invalid("'analyses' must be an array of names");
        cfg.analyses.push_back(name.get<std::string>());
      }
    }
    if (j.contains("seed")) {
      const Json& s = j.at("seed");
      if (!s.is_number_unsigned()) invalid("'seed' must be a non-negative integer");
      cfg.seed = s.get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
      if (!j.at("output_dir").is_string()) invalid("'output_dir' must be a string");
      cfg.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("budgets")) read_table(j.at("budgets"), budget_fields(cfg.rigidity), "budgets");
    if (j.contains("tolerances")) read_table(j.at("tolerances"), tolerance_fields(cfg.rigidity), "tolerances");
    if (j.contains("foliation")) {
      const Json& f = j.at("foliation");
      check_keys(f, {"bundle", "halflength", "step", "point"}, "foliation");
      if (f.contains("bundle")) cfg.foliation.bundle = parse_bundle(f.at("bundle").get<std::string>());
      if (f.contains("halflength")) cfg.foliation.halflength = get_real(f.at("halflength"), "halflength");
      if (f.contains("step")) cfg.foliation.step = get_real(f.at("step"), "step");
      if (f.contains("point")) {
        const Json& p = f.at("point");
        if (!p.is_array() || p.size() != 3) invalid("'foliation.point' must have 3 coordinates");
        cfg.foliation.point = Vec3(get_real(p[0], "point"), get_real(p[1], "point"), get_real(p[2], "point"));
      }
    }
    if (j.contains("holder_scales")) scales_field(cfg.holder_scales, "holder_scales").read(j.at("holder_scales"));
    return cfg;
  } catch (const Json::exception& e) {
    invalid(std::string("malformed config: ") + e.what());
  } catch (const LabError& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    invalid(e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.analyses.empty()) invalid("'analyses' must select at least one analysis");
  for (const auto& a : cfg.analyses) {
    const auto& names = analysis_names();
    if (std::find(names.begin(), names.end(), a) == names.end()) invalid("unknown analysis '" + a + "'");
    if (stochastic(a) && !cfg.seed) invalid("missing field 'seed' (required by analysis '" + a + "')");
  }
  RigidityConfig r = cfg.rigidity;
  for (const auto& [name, field] : budget_fields(r)) {
    const Json v = field.write();
    if (v.is_array()) {
      for (const auto& x : v) {
        if (!(x.get<double>() > 0)) invalid("budget '" + name + "' must be positive");
      }
    } else if (!(v.get<double>() > 0)) {
      invalid("budget '" + name + "' must be positive");
    }
  }
  for (const auto& [name, field] : tolerance_fields(r)) {
    if (!(field.write().get<double>() > 0)) invalid("tolerance '" + name + "' must be positive");
  }
  if (!(cfg.foliation.halflength > 0) || !(cfg.foliation.step > 0)) {
    invalid("foliation halflength and step must be positive");
  }
  for (double s : cfg.holder_scales) {
    if (!(s > 0)) invalid("holder_scales must be positive");
  }
  try {
    build_map(cfg.map);
  } catch (const LabError& e) {
    invalid(std::string("map: ") + e.what());
  }
}

Json to_json(const ExperimentConfig& cfg) {
  RigidityConfig r = cfg.rigidity;
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["map"] = to_json(cfg.map);
  j["analyses"] = cfg.analyses;
  if (cfg.seed) j["seed"] = *cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["budgets"] = write_table(budget_fields(r));
  j["tolerances"] = write_table(tolerance_fields(r));
  Json f = {{"bundle", bundle_name(cfg.foliation.bundle)},
            {"halflength", cfg.foliation.halflength},
            {"step", cfg.foliation.step}};
  if (cfg.foliation.point) {
    f["point"] = {(*cfg.foliation.point)[0], (*cfg.foliation.point)[1], (*cfg.foliation.point)[2]};
  }
  j["foliation"] = f;
  j["holder_scales"] = cfg.holder_scales;
  return j;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  DAMap f;
  try {
    validate_config(cfg);
    f = build_map(cfg.map);
    std::filesystem::create_directories(cfg.output_dir);
  } catch (const LabError& e) {
    log << "invalid config: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "cannot create output directory: " << e.what() << '\n';
    return kExitInvalid;
  }

  const Writer out{cfg.output_dir, log};
  const RigidityConfig& rc = cfg.rigidity;
  const std::uint64_t seed = cfg.seed.value_or(0);
  int status = kExitOk;

  for (const auto& analysis : cfg.analyses) {
    try {
      if (analysis == "exponents") {
        const ExponentField e = exponent_field(f, rc.exponent_samples, rc.exponent_steps, seed, rc.burn_in, rc.exec);
        Json j = to_json(e);
        j["pesin"] = pesin_entropy(e.stats.mean);
        out.json("exponents.json", j);
        out.csv("exponents.csv", [&](std::ostream& s) { write_exponents_csv(s, e); });
      } else if (analysis == "periodic") {
        const PeriodicDataSummary p = periodic_data_spread(f, rc.max_period, rc.exec);
        Json j = to_json(p);
        const EntropyBalance b = entropy_balance_check(p, f.linear_part, rc.entropy_tolerance, rc.spread_threshold);
        j["entropy_balance"] = {{"residual", b.residual}, {"state", state_name(b.state)}, {"tolerance", b.tolerance}};
        out.json("periodic.json", j);
        out.csv("periodic.csv", [&](std::ostream& s) { write_periodic_csv(s, p); });
        if (!p.failures.empty()) {
          log << p.failures.size() << " periodic orbit(s) failed to continue\n";
          status = kExitNumerical;
        }
      } else if (analysis == "conjugacy") {
        const ConjugacyApprox c = solve_conjugacy(f, rc.conjugacy_tolerance);
        const double residual = conjugacy_residual(c, rc.conjugacy_grid, rc.exec);
        const Vec3 holder = holder_probe(c, cfg.holder_scales, 32, seed, rc.exec);
        out.json("conjugacy.json", {{"truncation", c.truncation},
                                    {"tail_bound", c.tail_bound},
                                    {"tolerance", c.tolerance},
                                    {"grid_resolution", rc.conjugacy_grid},
                                    {"residual", residual},
                                    {"holder_exponents", {holder[0], holder[1], holder[2]}}});
      } else if (analysis == "foliation") {
        SplitMix64 rng(stream_seed(seed, 5000));
        const TorusPoint x = cfg.foliation.point ? TorusPoint(*cfg.foliation.point) : rng.point();
        const LeafSegment seg =
            integrate_leaf(f, x, cfg.foliation.bundle, cfg.foliation.halflength, cfg.foliation.step, rc.ubd.depth);
        DeltaOptions dopts;
        dopts.depth = rc.ubd.depth;
        const DensityProfile prof = leaf_density_profile(f, seg, rc.density_tolerance, dopts);
        const double equiv = equivariance_check(f, seg, rc.density_tolerance, dopts);
        out.json("foliation.json", {{"bundle", bundle_name(seg.bundle)},
                                    {"base_point", {x[0], x[1], x[2]}},
                                    {"length", seg.length()},
                                    {"points", seg.points.size()},
                                    {"iterations", prof.iterations},
                                    {"tail_bound", prof.tail_bound},
                                    {"converged", prof.converged},
                                    {"equivariance_residual", equiv}});
        out.csv("density.csv", [&](std::ostream& s) { write_density_csv(s, prof); });
        if (!prof.converged) status = kExitNumerical;
      } else if (analysis == "ubd") {
        std::vector<UBDStatistic> u;
        for (Bundle b : kAllBundles) {
          u.push_back(ubd_statistic(f, b, rc.ubd_scales, rc.ubd_samples,
                                    stream_seed(seed, 1000 + static_cast<int>(b)), rc.ubd, rc.exec));
        }
        std::vector<CocycleStatistic> c;
        for (Bundle b : {Bundle::wu, Bundle::su}) {
          c.push_back(cocycle_ratio_statistic(f, b, rc.cocycle_pairs, rc.cocycle_n_max,
                                              stream_seed(seed, 2000 + static_cast<int>(b)), rc.cocycle_separation,
                                              rc.ubd.depth, rc.exec));
        }
        Json j = {{"ubd", Json::array()}, {"cocycle", Json::array()}};
        for (const auto& s : u) j["ubd"].push_back(to_json(s));
        for (std::size_t i = 0; i < c.size(); ++i) {
          Json cj = to_json(c[i]);
          cj["violates_ubd"] = cocycle_violates_ubd(c[i], u[static_cast<int>(c[i].bundle)]);
          j["cocycle"].push_back(cj);
        }
        out.json("ubd.json", j);
        out.csv("ubd.csv", [&](std::ostream& s) { write_ubd_csv(s, u); });
        out.csv("cocycle.csv", [&](std::ostream& s) { write_cocycle_csv(s, c); });
      } else if (analysis == "report") {
        RigidityConfig run = rc;
        run.seed = seed;
        const RigidityReport r = rigidity_report(f, run);
        out.json("report.json", to_json(r));
        emit_report(r, ReportFormat::text, cfg.output_dir / "report.txt");
        log << "wrote " << (cfg.output_dir / "report.txt").string() << '\n';
        out.csv("verdicts.csv", [&](std::ostream& s) { write_verdicts_csv(s, r); });
        out.csv("ubd.csv", [&](std::ostream& s) { write_ubd_csv(s, r.ubd); });
        out.csv("cocycle.csv", [&](std::ostream& s) { write_cocycle_csv(s, r.cocycle); });
        log << "overall: " << overall_name(r.overall) << '\n';
        if (r.has_errors()) {
          for (const auto& e : r.errors) log << "section " << e.section << " FAILED: " << e.message << '\n';
          status = kExitNumerical;
        }
      }
    } catch (const LabError& e) {
      log << analysis << " FAILED (" << to_string(e.code()) << "): " << e.what() << '\n';
      status = kExitNumerical;
    }
  }
  return status;
}

}  // namespace dalab
