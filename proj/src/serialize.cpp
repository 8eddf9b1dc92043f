#include "dalab/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "dalab/errors.hpp"

namespace dalab {

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double get_num(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json vec(const Vec3& v) { return Json::array({num(v[0]), num(v[1]), num(v[2])}); }

Vec3 get_vec(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw LabError(ErrorCode::ConfigInvalid, "expected a 3-vector");
  return Vec3(get_num(j[0]), get_num(j[1]), get_num(j[2]));
}

Json ivec(const IVec3& v) { return Json::array({v[0], v[1], v[2]}); }

IVec3 get_ivec(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw LabError(ErrorCode::ConfigInvalid, "expected an integer 3-vector");
  return IVec3(j[0].get<long long>(), j[1].get<long long>(), j[2].get<long long>());
}

Json point(const TorusPoint& p) { return vec(p.coords()); }

template <class T, class F>
Json opt(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : Json(nullptr);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Json to_json(const BundleStats& s) {
  return {{"mean", vec(s.mean)}, {"sd", vec(s.sd)}, {"min", vec(s.min)}, {"max", vec(s.max)},
          {"samples", s.samples}};
}

BundleStats stats_from_json(const Json& j) {
  BundleStats s;
  s.mean = get_vec(j.at("mean"));
  s.sd = get_vec(j.at("sd"));
  s.min = get_vec(j.at("min"));
  s.max = get_vec(j.at("max"));
  s.samples = j.at("samples").get<int>();
  return s;
}

Json to_json(const ConeMargins& m) {
  return {{"su_aperture", num(m.su_aperture)}, {"su_expansion", num(m.su_expansion)},
          {"s_aperture", num(m.s_aperture)},   {"s_expansion", num(m.s_expansion)},
          {"cu_aperture", num(m.cu_aperture)}, {"cs_aperture", num(m.cs_aperture)}};
}

ConeMargins margins_from_json(const Json& j) {
  ConeMargins m;
  m.su_aperture = get_num(j.at("su_aperture"));
  m.su_expansion = get_num(j.at("su_expansion"));
  m.s_aperture = get_num(j.at("s_aperture"));
  m.s_expansion = get_num(j.at("s_expansion"));
  m.cu_aperture = get_num(j.at("cu_aperture"));
  m.cs_aperture = get_num(j.at("cs_aperture"));
  return m;
}

UBDStatistic ubd_from_json(const Json& j) {
  UBDStatistic u;
  u.bundle = parse_bundle(j.at("bundle").get<std::string>());
  u.box_scales = j.at("box_scales").get<std::vector<double>>();
  for (const auto& k : j.at("K_estimates")) u.K_estimates.push_back(get_num(k));
  u.K_global = get_num(j.at("K_global"));
  u.samples_per_scale = j.at("samples_per_scale").get<int>();
  return u;
}

CocycleStatistic cocycle_from_json(const Json& j) {
  CocycleStatistic c;
  c.bundle = parse_bundle(j.at("bundle").get<std::string>());
  c.pairs = j.at("pairs").get<int>();
  c.n_max = j.at("n_max").get<int>();
  c.pair_separation = get_num(j.at("pair_separation"));
  c.sup_ratio = get_num(j.at("sup_ratio"));
  c.sup_reciprocal = get_num(j.at("sup_reciprocal"));
  return c;
}

Json to_json(const Verdict& v) {
  return {{"id", v.id},
          {"description", v.description},
          {"value", num(v.value)},
          {"tolerance", num(v.tolerance)},
          {"comparison", v.comparison},
          {"state", state_name(v.state)},
          {"note", v.note}};
}

Verdict verdict_from_json(const Json& j) {
  Verdict v;
  v.id = j.at("id").get<std::string>();
  v.description = j.at("description").get<std::string>();
  v.value = get_num(j.at("value"));
  v.tolerance = get_num(j.at("tolerance"));
  v.comparison = j.at("comparison").get<std::string>();
  v.state = parse_state(j.at("state").get<std::string>());
  v.note = j.at("note").get<std::string>();
  return v;
}

}  // namespace

Json to_json(const ShearSpec& g) {
  return {{"axis", g.axis}, {"wave_vector", ivec(g.wave_vector)}, {"amplitude", g.amplitude}, {"phase", g.phase}};
}

ShearSpec shear_from_json(const Json& j) {
  if (!j.is_object()) throw LabError(ErrorCode::ConfigInvalid, "shear must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "axis" && key != "wave_vector" && key != "amplitude" && key != "phase") {
      throw LabError(ErrorCode::ConfigInvalid, "unknown shear key '" + key + "'");
    }
  }
  ShearSpec g;
  g.axis = j.at("axis").get<int>();
  g.wave_vector = get_ivec(j.at("wave_vector"));
  g.amplitude = j.at("amplitude").get<double>();
  g.phase = j.value("phase", 0.0);
  return g;
}

Json to_json(const MapSpec& m) {
  Json rows = Json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(ivec(m.matrix.row(i).transpose()));
  Json shears = Json::array();
  for (const auto& g : m.shears) shears.push_back(to_json(g));
  return {{"matrix", rows}, {"shears", shears}, {"epsilon", m.epsilon_scale}, {"mode", tag_name(m.mode)}};
}

MapSpec map_from_json(const Json& j) {
  if (!j.is_object()) throw LabError(ErrorCode::ConfigInvalid, "map must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "matrix" && key != "shears" && key != "epsilon" && key != "mode") {
      throw LabError(ErrorCode::ConfigInvalid, "unknown map key '" + key + "'");
    }
  }
  MapSpec m;
  const Json& rows = j.at("matrix");
  if (!rows.is_array() || rows.size() != 3) throw LabError(ErrorCode::ConfigInvalid, "matrix must be 3x3");
  for (int i = 0; i < 3; ++i) m.matrix.row(i) = get_ivec(rows[i]).transpose();
  if (j.contains("shears")) {
    for (const auto& g : j.at("shears")) m.shears.push_back(shear_from_json(g));
  }
  m.epsilon_scale = j.value("epsilon", 0.0);
  m.mode = parse_tag(j.at("mode").get<std::string>());
  return m;
}

Json to_json(const ConeCertificate& c) {
  return {{"grid_resolution", c.grid_resolution}, {"aperture", c.aperture}, {"margins", to_json(c.margins)},
          {"min_margin", num(c.margins.min())},   {"worst_point", point(c.worst_point)},
          {"verdict", c.verdict}};
}

Json to_json(const ExponentField& e) {
  Json samples = Json::array();
  for (std::size_t i = 0; i < e.estimates.size(); ++i) {
    samples.push_back({{"start", point(e.starts[i])}, {"exponents", vec(e.estimates[i].values)}});
  }
  return {{"stats", to_json(e.stats)}, {"samples", samples}};
}

Json to_json(const PeriodicDataSummary& p) {
  Json orbits = Json::array();
  for (const auto& o : p.orbits) {
    orbits.push_back({{"period", o.period},
                      {"point", point(o.points.front())},
                      {"exponents", vec(o.exponents)},
                      {"newton_residual", num(o.newton_residual)},
                      {"newton_iterations", o.newton_iterations}});
  }
  Json failures = Json::array();
  for (const auto& f : p.failures) {
    failures.push_back({{"period", f.period}, {"seed", point(f.seed)}, {"message", f.message}});
  }
  return {{"max_period", p.max_period},
          {"orbits", orbits},
          {"failures", failures},
          {"min", vec(p.min)},
          {"max", vec(p.max)},
          {"spread", vec(p.spread)},
          {"mean", vec(p.mean)},
          {"max_deviation_from_linear", vec(p.max_deviation_from_linear)},
          {"fixed_point_exponents", opt(p.fixed_point_exponents, vec)}};
}

Json to_json(const UBDStatistic& u) {
  Json ks = Json::array();
  for (double k : u.K_estimates) ks.push_back(num(k));
  return {{"bundle", bundle_name(u.bundle)}, {"box_scales", u.box_scales}, {"K_estimates", ks},
          {"K_global", num(u.K_global)},     {"samples_per_scale", u.samples_per_scale},
          {"scale_spread", num(u.scale_spread())}};
}

Json to_json(const CocycleStatistic& c) {
  return {{"bundle", bundle_name(c.bundle)},      {"pairs", c.pairs},
          {"n_max", c.n_max},                     {"pair_separation", c.pair_separation},
          {"sup_ratio", num(c.sup_ratio)},        {"sup_reciprocal", num(c.sup_reciprocal)},
          {"bound", num(c.bound())}};
}

Json to_json(const RigidityReport& r) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["map"] = to_json(r.map);
  j["seed"] = r.seed;
  j["cone"] = opt(r.cone, [](const ConeSection& c) -> Json {
    return {{"grid_resolution", c.grid_resolution}, {"aperture", c.aperture}, {"min_margin", num(c.min_margin)},
            {"margins", to_json(c.margins)},        {"verdict", c.verdict}};
  });
  j["exponents"] = opt(r.exponents, [](const ExponentSection& e) -> Json {
    return {{"stats", to_json(e.stats)}, {"linear", vec(e.linear)}, {"deviation", vec(e.deviation)},
            {"steps", e.steps}};
  });
  j["periodic"] = opt(r.periodic, [](const PeriodicSection& p) -> Json {
    return {{"max_period", p.max_period},
            {"orbits", p.orbits},
            {"failures", p.failures},
            {"min", vec(p.min)},
            {"max", vec(p.max)},
            {"spread", vec(p.spread)},
            {"mean", vec(p.mean)},
            {"max_deviation_from_linear", vec(p.max_deviation_from_linear)},
            {"fixed_point_exponents", opt(p.fixed_point_exponents, vec)},
            {"fixed_point_deviation", opt(p.fixed_point_deviation, vec)}};
  });
  j["ubd"] = Json::array();
  for (const auto& u : r.ubd) j["ubd"].push_back(to_json(u));
  j["cocycle"] = Json::array();
  for (const auto& c : r.cocycle) j["cocycle"].push_back(to_json(c));
  j["entropy"] = opt(r.entropy, [](const EntropySection& e) -> Json {
    return {{"pesin", num(e.pesin)},
            {"linear_sum", num(e.linear_sum)},
            {"pesin_within_bound", e.pesin_within_bound},
            {"balance",
             {{"lambda_f", num(e.balance.lambda_f)},
              {"lambda_a", num(e.balance.lambda_a)},
              {"residual", num(e.balance.residual)},
              {"tolerance", num(e.balance.tolerance)},
              {"state", state_name(e.balance.state)}}}};
  });
  j["conjugacy"] = opt(r.conjugacy, [](const ConjugacySection& c) -> Json {
    return {{"truncation", c.truncation},
            {"tail_bound", num(c.tail_bound)},
            {"residual", num(c.residual)},
            {"max_displacement", num(c.max_displacement)},
            {"conjugator_deviation", opt(c.conjugator_deviation, num)}};
  });
  j["claim1"] = opt(r.claim1, [](const Claim1Section& c) -> Json {
    return {{"max_deviation", num(c.max_deviation)},
            {"mean_deviation", num(c.mean_deviation)},
            {"points", c.points},
            {"segment_length", num(c.segment_length)}};
  });
  j["center"] = opt(r.center, [](const CenterSection& c) -> Json {
    return {{"min_growth", num(c.min_growth)},
            {"mean_growth", num(c.mean_growth)},
            {"threshold", num(c.threshold)},
            {"samples", c.samples},
            {"steps", c.steps}};
  });
  j["verdicts"] = Json::array();
  for (const auto& v : r.verdicts) j["verdicts"].push_back(to_json(v));
  j["errors"] = Json::array();
  for (const auto& e : r.errors) {
    j["errors"].push_back({{"section", e.section}, {"code", e.code}, {"message", e.message}});
  }
  j["overall"] = overall_name(r.overall);
  return j;
}

RigidityReport report_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw LabError(ErrorCode::ConfigInvalid, "unsupported report schema_version");
    }
    RigidityReport r;
    r.map = map_from_json(j.at("map"));
    r.seed = j.at("seed").get<std::uint64_t>();
    if (const Json& c = j.at("cone"); !c.is_null()) {
      r.cone = ConeSection{c.at("grid_resolution").get<int>(), c.at("aperture").get<double>(),
                           get_num(c.at("min_margin")), margins_from_json(c.at("margins")),
                           c.at("verdict").get<bool>()};
    }
    if (const Json& e = j.at("exponents"); !e.is_null()) {
      r.exponents = ExponentSection{stats_from_json(e.at("stats")), get_vec(e.at("linear")),
                                    get_vec(e.at("deviation")), e.at("steps").get<long long>()};
    }
    if (const Json& p = j.at("periodic"); !p.is_null()) {
      PeriodicSection s;
      s.max_period = p.at("max_period").get<int>();
      s.orbits = p.at("orbits").get<int>();
      s.failures = p.at("failures").get<int>();
      s.min = get_vec(p.at("min"));
      s.max = get_vec(p.at("max"));
      s.spread = get_vec(p.at("spread"));
      s.mean = get_vec(p.at("mean"));
      s.max_deviation_from_linear = get_vec(p.at("max_deviation_from_linear"));
      if (!p.at("fixed_point_exponents").is_null()) s.fixed_point_exponents = get_vec(p.at("fixed_point_exponents"));
      if (!p.at("fixed_point_deviation").is_null()) s.fixed_point_deviation = get_vec(p.at("fixed_point_deviation"));
      r.periodic = s;
    }
    for (const auto& u : j.at("ubd")) r.ubd.push_back(ubd_from_json(u));
    for (const auto& c : j.at("cocycle")) r.cocycle.push_back(cocycle_from_json(c));
    if (const Json& e = j.at("entropy"); !e.is_null()) {
      EntropySection s;
      s.pesin = get_num(e.at("pesin"));
      s.linear_sum = get_num(e.at("linear_sum"));
      s.pesin_within_bound = e.at("pesin_within_bound").get<bool>();
      const Json& b = e.at("balance");
      s.balance = EntropyBalance{get_num(b.at("lambda_f")), get_num(b.at("lambda_a")),
                                 get_num(b.at("residual")), get_num(b.at("tolerance")),
                                 parse_state(b.at("state").get<std::string>())};
      r.entropy = s;
    }
    if (const Json& c = j.at("conjugacy"); !c.is_null()) {
      ConjugacySection s;
      s.truncation = c.at("truncation").get<std::array<int, 3>>();
      s.tail_bound = get_num(c.at("tail_bound"));
      s.residual = get_num(c.at("residual"));
      s.max_displacement = get_num(c.at("max_displacement"));
      if (!c.at("conjugator_deviation").is_null()) s.conjugator_deviation = get_num(c.at("conjugator_deviation"));
      r.conjugacy = s;
    }
    if (const Json& c = j.at("claim1"); !c.is_null()) {
      r.claim1 = Claim1Section{get_num(c.at("max_deviation")), get_num(c.at("mean_deviation")),
                               c.at("points").get<int>(), get_num(c.at("segment_length"))};
    }
    if (const Json& c = j.at("center"); !c.is_null()) {
      CenterSection s;
      s.min_growth = get_num(c.at("min_growth"));
      s.mean_growth = get_num(c.at("mean_growth"));
      s.threshold = get_num(c.at("threshold"));
      s.samples = c.at("samples").get<int>();
      s.steps = c.at("steps").get<int>();
      r.center = s;
    }
    for (const auto& v : j.at("verdicts")) r.verdicts.push_back(verdict_from_json(v));
    for (const auto& e : j.at("errors")) {
      r.errors.push_back({e.at("section").get<std::string>(), e.at("code").get<std::string>(),
                          e.at("message").get<std::string>()});
    }
    r.overall = parse_overall(j.at("overall").get<std::string>());
    return r;
  } catch (const Json::exception& e) {
    throw LabError(ErrorCode::ConfigInvalid, std::string("malformed report: ") + e.what());
  }
}

std::string render_text(const RigidityReport& r) {
  std::ostringstream out;
  out << "map: " << tag_name(r.map.mode) << " epsilon " << short_fmt(r.map.epsilon_scale) << " matrix [";
  for (int i = 0; i < 3; ++i) {
    out << (i ? "; " : "") << r.map.matrix(i, 0) << ' ' << r.map.matrix(i, 1) << ' ' << r.map.matrix(i, 2);
  }
  out << "]\nseed: " << r.seed << '\n';

  auto failed = [&](const std::string& section) {
    for (const auto& e : r.errors) {
      if (e.section == section) return &e;
    }
    return static_cast<const SectionError*>(nullptr);
  };
  const std::pair<const char*, bool> sections[] = {
      {"cone", r.cone.has_value()},         {"exponents", r.exponents.has_value()},
      {"periodic", r.periodic.has_value()}, {"entropy", r.entropy.has_value()},
      {"ubd", !r.ubd.empty()},              {"cocycle", !r.cocycle.empty()},
      {"conjugacy", r.conjugacy.has_value()}, {"center", r.center.has_value()},
      {"claim1", r.claim1.has_value()}};
  for (const auto& [s, present] : sections) {
    out << "section " << s << ": ";
    if (const SectionError* e = failed(s)) {
      out << "FAILED (" << e->message << ")\n";
    } else {
      out << (present ? "ok" : "not run") << '\n';
    }
  }
  for (const auto& v : r.verdicts) {
    out << v.id << "  " << v.description << "  value " << short_fmt(v.value) << ' ' << v.comparison << ' '
        << short_fmt(v.tolerance) << "  ";
    if (v.state == VerdictState::error) {
      out << "FAILED";
    } else {
      out << state_name(v.state);
    }
    if (!v.note.empty()) out << "  (" << v.note << ')';
    out << '\n';
  }
  out << "overall: " << overall_name(r.overall) << '\n';
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LabError(ErrorCode::IOFailure, "cannot open " + path.string());
  f << content;
  if (!f) throw LabError(ErrorCode::IOFailure, "cannot write " + path.string());
}

void emit_report(const RigidityReport& r, ReportFormat format, const std::filesystem::path& path) {
  write_file(path, format == ReportFormat::json ? to_json(r).dump(2) + "\n" : render_text(r));
}

void write_exponents_csv(std::ostream& out, const ExponentField& e) {
  out << "sample,x1,x2,x3,lambda_s,lambda_wu,lambda_su\n";
  for (std::size_t i = 0; i < e.estimates.size(); ++i) {
    const Vec3& p = e.starts[i].coords();
    const Vec3& v = e.estimates[i].values;
    out << i << ',' << fmt(p[0]) << ',' << fmt(p[1]) << ',' << fmt(p[2]) << ',' << fmt(v[0]) << ','
        << fmt(v[1]) << ',' << fmt(v[2]) << '\n';
  }
}

void write_periodic_csv(std::ostream& out, const PeriodicDataSummary& p) {
  out << "period,x1,x2,x3,lambda_s,lambda_wu,lambda_su,newton_residual,newton_iterations\n";
  for (const auto& o : p.orbits) {
    const Vec3& x = o.points.front().coords();
    out << o.period << ',' << fmt(x[0]) << ',' << fmt(x[1]) << ',' << fmt(x[2]) << ',' << fmt(o.exponents[0])
        << ',' << fmt(o.exponents[1]) << ',' << fmt(o.exponents[2]) << ',' << fmt(o.newton_residual) << ','
        << o.newton_iterations << '\n';
  }
}

void write_ubd_csv(std::ostream& out, const std::vector<UBDStatistic>& u) {
  out << "bundle,box_scale,K,samples\n";
  for (const auto& s : u) {
    for (std::size_t i = 0; i < s.box_scales.size(); ++i) {
      out << bundle_name(s.bundle) << ',' << fmt(s.box_scales[i]) << ',' << fmt(s.K_estimates[i]) << ','
          << s.samples_per_scale << '\n';
    }
  }
}

void write_cocycle_csv(std::ostream& out, const std::vector<CocycleStatistic>& c) {
  out << "bundle,pairs,n_max,pair_separation,sup_ratio,sup_reciprocal\n";
  for (const auto& s : c) {
    out << bundle_name(s.bundle) << ',' << s.pairs << ',' << s.n_max << ',' << fmt(s.pair_separation) << ','
        << fmt(s.sup_ratio) << ',' << fmt(s.sup_reciprocal) << '\n';
  }
}

void write_density_csv(std::ostream& out, const DensityProfile& d) {
  out << "index,arclength,x1,x2,x3,rho,log_ratio\n";
  for (std::size_t i = 0; i < d.rho.size(); ++i) {
    const Vec3& x = d.segment.points[i].coords();
    out << i << ',' << fmt(d.segment.arclength[i]) << ',' << fmt(x[0]) << ',' << fmt(x[1]) << ',' << fmt(x[2])
        << ',' << fmt(d.rho[i]) << ',' << fmt(d.log_ratio[i]) << '\n';
  }
}

void write_verdicts_csv(std::ostream& out, const RigidityReport& r) {
  out << "id,value,comparison,tolerance,state\n";
  for (const auto& v : r.verdicts) {
    out << v.id << ',' << fmt(v.value) << ',' << v.comparison << ',' << fmt(v.tolerance) << ','
        << state_name(v.state) << '\n';
  }
}

}  // namespace dalab
