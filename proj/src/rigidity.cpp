#include "dalab/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

double pesin_entropy(const Vec3& exponents) {
  double sum = 0;
  bool any = false;
  for (int i = 0; i < 3; ++i) {
    if (exponents[i] > 0) {
      sum += exponents[i];
      any = true;
    }
  }
  if (!any) throw LabError(ErrorCode::NoPositiveExponents, "no positive exponent");
  return sum;
}

double pesin_entropy(const ExponentEstimate& exponents) { return pesin_entropy(exponents.values); }

const char* state_name(VerdictState s) {
  switch (s) {
    case VerdictState::pass: return "pass";
    case VerdictState::fail: return "fail";
    case VerdictState::not_applicable: return "not_applicable";
    case VerdictState::error: return "error";
  }
  return "?";
}

VerdictState parse_state(const std::string& name) {
  for (auto s : {VerdictState::pass, VerdictState::fail, VerdictState::not_applicable, VerdictState::error}) {
    if (name == state_name(s)) return s;
  }
  throw LabError(ErrorCode::InvalidArgument, "unknown verdict state '" + name + "'");
}

const char* overall_name(Overall o) {
  switch (o) {
    case Overall::rigid_evidence: return "rigid_evidence";
    case Overall::non_rigid_evidence: return "non_rigid_evidence";
    case Overall::inconclusive: return "inconclusive";
  }
  return "?";
}

Overall parse_overall(const std::string& name) {
  for (auto o : {Overall::rigid_evidence, Overall::non_rigid_evidence, Overall::inconclusive}) {
    if (name == overall_name(o)) return o;
  }
  throw LabError(ErrorCode::InvalidArgument, "unknown overall verdict '" + name + "'");
}

EntropyBalance entropy_balance_check(const PeriodicDataSummary& periodic,
                                     const ToralAutomorphism& a, double tolerance,
                                     double spread_threshold) {
  EntropyBalance out;
  out.tolerance = tolerance;
  out.lambda_a = a.log_modulus(Bundle::wu) + a.log_modulus(Bundle::su);
  out.lambda_f = periodic.mean[1] + periodic.mean[2];
  out.residual = std::abs(out.lambda_f - out.lambda_a);
  if (periodic.orbits.empty() || periodic.spread.maxCoeff() >= spread_threshold) {
    out.state = VerdictState::not_applicable;
  } else {
    out.state = out.residual < tolerance ? VerdictState::pass : VerdictState::fail;
  }
  return out;
}

const Verdict& RigidityReport::verdict(const std::string& id) const {
  for (const auto& v : verdicts) {
    if (v.id == id) return v;
  }
  throw LabError(ErrorCode::InvalidArgument, "no verdict '" + id + "'");
}

Overall aggregate(const std::vector<Verdict>& verdicts) {
  auto state = [&](const std::string& id) {
    for (const auto& v : verdicts) {
      if (v.id == id) return v.state;
    }
    return VerdictState::not_applicable;
  };
  const auto p1 = state("P1"), p2 = state("P2"), en = state("entropy");
  if (p1 == VerdictState::pass && p2 == VerdictState::pass && en == VerdictState::pass) {
    return Overall::rigid_evidence;
  }
  if (p1 == VerdictState::fail || p2 == VerdictState::fail) return Overall::non_rigid_evidence;
  return Overall::inconclusive;
}

CenterSection center_growth(const DAMap& f, int samples, int steps, std::uint64_t seed,
                            Execution exec) {
  if (samples < 1 || steps < 1) throw LabError(ErrorCode::InvalidArgument, "samples and steps must be >= 1");
  auto growth = indexed_map<double>(
      static_cast<std::size_t>(samples),
      [&](std::size_t i) {
        SplitMix64 rng(stream_seed(seed, i));
        TorusPoint x = rng.point();
        double sum = 0;
        for (int n = 0; n < steps; ++n) {
          sum += std::log(leaf_jacobian(f, x, Bundle::wu));
          x = apply(f, x);
        }
        return sum / steps;
      },
      exec);
  CenterSection c;
  c.samples = samples;
  c.steps = steps;
  c.threshold = 0.5 * f.linear_part.log_modulus(Bundle::wu);
  c.min_growth = *std::min_element(growth.begin(), growth.end());
  double total = 0;
  for (double g : growth) total += g;
  c.mean_growth = total / samples;
  return c;
}

namespace {

Verdict evaluate(std::string id, std::string description, double value, double tolerance,
                 std::string comparison = "<") {
  Verdict v;
  v.id = std::move(id);
  v.description = std::move(description);
  v.value = value;
  v.tolerance = tolerance;
  v.comparison = comparison;
  const bool ok = comparison == "<" ? value < tolerance : value > tolerance;
  v.state = std::isfinite(value) && ok ? VerdictState::pass : VerdictState::fail;
  return v;
}

Verdict unavailable(std::string id, std::string description, double tolerance, VerdictState state,
                    std::string note, std::string comparison = "<") {
  Verdict v;
  v.id = std::move(id);
  v.description = std::move(description);
  v.tolerance = tolerance;
  v.comparison = std::move(comparison);
  v.state = state;
  v.note = std::move(note);
  return v;
}

const char* kP1 = "exponent match per bundle";
const char* kP2 = "periodic data constant and equal to A";
const char* kP2c = "periodic data constant";
const char* kP2e = "periodic data equal to A";
const char* kP3 = "lambda^su constant on periodic orbits";
const char* kP4 = "UBD constant stable across box scales";
const char* kP5 = "uniform center expansion";
const char* kP6 = "center derivative of h matches leaf density";
const char* kEntropy = "entropy balance";

}  // namespace

RigidityReport rigidity_report(const DAMap& f, const RigidityConfig& cfg) {
  RigidityReport rep;
  rep.map = describe(f);
  rep.seed = cfg.seed;
  const ToralAutomorphism& a = f.linear_part;
  const Vec3 linear(a.log_modulus(Bundle::s), a.log_modulus(Bundle::wu), a.log_modulus(Bundle::su));

  // Runs one section; on failure records the error and returns false.
  auto section = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
      return true;
    } catch (const LabError& e) {
      rep.errors.push_back({name, std::string(to_string(e.code())), e.what()});
    } catch (const std::exception& e) {
      rep.errors.push_back({name, "Exception", e.what()});
    }
    return false;
  };
  auto all_failed = [&](const std::string& why) {
    rep.verdicts = {
        unavailable("P1", kP1, cfg.exponent_tolerance, VerdictState::error, why),
        unavailable("P2", kP2, cfg.spread_threshold, VerdictState::error, why),
        unavailable("P2.constant", kP2c, cfg.spread_threshold, VerdictState::error, why),
        unavailable("P2.equal", kP2e, cfg.spread_threshold, VerdictState::error, why),
        unavailable("P3", kP3, cfg.spread_threshold, VerdictState::error, why),
        unavailable("P4", kP4, cfg.ubd_spread_limit, VerdictState::error, why),
        unavailable("P5", kP5, 0.5 * linear[1], VerdictState::error, why, ">"),
        unavailable("P6", kP6, cfg.claim1_tolerance, VerdictState::error, why),
        unavailable("entropy", kEntropy, cfg.entropy_tolerance, VerdictState::error, why),
    };
    rep.overall = Overall::inconclusive;
  };

  const bool cone_ok = section("cone", [&] {
    const ConeCertificate c = cone_certificate(f, cfg.cone_grid, cfg.cone_aperture, cfg.exec);
    rep.cone = ConeSection{c.grid_resolution, c.aperture, c.margins.min(), c.margins, c.verdict};
    if (!c.verdict) {
      throw LabError(ErrorCode::NotPartiallyHyperbolic,
                     "cone certificate failed, min margin " + std::to_string(c.margins.min()));
    }
  });
  if (!cone_ok) {
    all_failed("cone certificate failed");
    return rep;
  }

  // P1
  Verdict p1;
  if (section("exponents", [&] {
        const ExponentField field =
            exponent_field(f, cfg.exponent_samples, cfg.exponent_steps, cfg.seed, cfg.burn_in, cfg.exec);
        ExponentSection ex;
        ex.stats = field.stats;
        ex.linear = linear;
        ex.deviation = (field.stats.mean - linear).cwiseAbs();
        ex.steps = cfg.exponent_steps;
        rep.exponents = ex;
      })) {
    p1 = evaluate("P1", kP1, rep.exponents->deviation.maxCoeff(), cfg.exponent_tolerance);
  } else {
    p1 = unavailable("P1", kP1, cfg.exponent_tolerance, VerdictState::error, "exponent section failed");
  }

  // P2, P3
  PeriodicDataSummary periodic;
  Verdict p2, p2c, p2e, p3;
  if (section("periodic", [&] {
        periodic = periodic_data_spread(f, cfg.max_period, cfg.exec);
        if (periodic.orbits.empty()) {
          throw LabError(ErrorCode::NewtonDiverged, "no periodic orbit could be continued");
        }
        PeriodicSection ps;
        ps.max_period = periodic.max_period;
        ps.orbits = static_cast<int>(periodic.orbits.size());
        ps.failures = static_cast<int>(periodic.failures.size());
        ps.min = periodic.min;
        ps.max = periodic.max;
        ps.spread = periodic.spread;
        ps.mean = periodic.mean;
        ps.max_deviation_from_linear = periodic.max_deviation_from_linear;
        ps.fixed_point_exponents = periodic.fixed_point_exponents;
        if (periodic.fixed_point_exponents) {
          ps.fixed_point_deviation = (*periodic.fixed_point_exponents - linear).cwiseAbs();
        }
        rep.periodic = ps;
      })) {
    const auto& ps = *rep.periodic;
    p2c = evaluate("P2.constant", kP2c, ps.spread.maxCoeff(), cfg.spread_threshold);
    p2e = evaluate("P2.equal", kP2e, ps.max_deviation_from_linear.maxCoeff(), cfg.spread_threshold);
    p2 = evaluate("P2", kP2, std::max(ps.spread.maxCoeff(), ps.max_deviation_from_linear.maxCoeff()),
                  cfg.spread_threshold);
    p3 = evaluate("P3", kP3, ps.spread[2], cfg.spread_threshold);
    if (ps.failures > 0) {
      const std::string note = std::to_string(ps.failures) + " orbit(s) failed to continue";
      for (Verdict* v : {&p2, &p2c, &p2e, &p3}) v->note = note;
    }
  } else {
    const std::string why = "periodic section failed";
    p2 = unavailable("P2", kP2, cfg.spread_threshold, VerdictState::error, why);
    p2c = unavailable("P2.constant", kP2c, cfg.spread_threshold, VerdictState::error, why);
    p2e = unavailable("P2.equal", kP2e, cfg.spread_threshold, VerdictState::error, why);
    p3 = unavailable("P3", kP3, cfg.spread_threshold, VerdictState::error, why);
  }

  // Entropy
  Verdict entropy;
  if (section("entropy", [&] {
        if (!rep.exponents || !rep.periodic) {
          throw LabError(ErrorCode::InvalidArgument, "entropy needs exponent and periodic sections");
        }
        EntropySection es;
        es.pesin = pesin_entropy(rep.exponents->stats.mean);
        es.linear_sum = linear[1] + linear[2];
        es.pesin_within_bound = es.pesin <= es.linear_sum + cfg.pesin_slack;
        es.balance = entropy_balance_check(periodic, a, cfg.entropy_tolerance, cfg.spread_threshold);
        rep.entropy = es;
      })) {
    const auto& b = rep.entropy->balance;
    if (b.state == VerdictState::not_applicable) {
      entropy = unavailable("entropy", kEntropy, b.tolerance, VerdictState::not_applicable,
                            "periodic spread above threshold");
      entropy.value = b.residual;
    } else {
      entropy = evaluate("entropy", kEntropy, b.residual, b.tolerance);
    }
    if (!rep.entropy->pesin_within_bound) entropy.note = "Pesin sum exceeds the linear entropy";
  } else {
    entropy = unavailable("entropy", kEntropy, cfg.entropy_tolerance, VerdictState::error, "entropy section failed");
  }

  // P4
  Verdict p4;
  if (section("ubd", [&] {
        for (Bundle b : kAllBundles) {
          rep.ubd.push_back(ubd_statistic(f, b, cfg.ubd_scales, cfg.ubd_samples,
                                          stream_seed(cfg.seed, 1000 + static_cast<int>(b)), cfg.ubd,
                                          cfg.exec));
        }
      })) {
    double worst = 1.0;
    for (const auto& u : rep.ubd) worst = std::max(worst, u.scale_spread());
    p4 = evaluate("P4", kP4, worst, cfg.ubd_spread_limit);
  } else {
    p4 = unavailable("P4", kP4, cfg.ubd_spread_limit, VerdictState::error, "ubd section failed");
  }

  section("cocycle", [&] {
    for (Bundle b : {Bundle::wu, Bundle::su}) {
      rep.cocycle.push_back(cocycle_ratio_statistic(f, b, cfg.cocycle_pairs, cfg.cocycle_n_max,
                                                    stream_seed(cfg.seed, 2000 + static_cast<int>(b)),
                                                    cfg.cocycle_separation, kDefaultFrameDepth, cfg.exec));
    }
  });

  // Conjugacy
  std::optional<ConjugacyApprox> conj;
  section("conjugacy", [&] {
    conj = solve_conjugacy(f, cfg.conjugacy_tolerance);
    ConjugacySection cs;
    cs.truncation = conj->truncation;
    cs.tail_bound = conj->tail_bound;
    cs.residual = conjugacy_residual(*conj, cfg.conjugacy_grid, cfg.exec);
    const int n = cfg.conjugacy_grid;
    const bool smooth = f.construction_tag == ConstructionTag::smooth_conjugate;
    struct Sup {
      double u = 0, phi = 0;
    };
    auto sups = indexed_map<Sup>(
        static_cast<std::size_t>(n) * n * n,
        [&](std::size_t idx) {
          const Vec3 x(double(idx / (n * n)) / n, double((idx / n) % n) / n, double(idx % n) / n);
          const Vec3 u = conj->displacement(TorusPoint(x));
          Sup s;
          s.u = u.cwiseAbs().maxCoeff();
          if (smooth) s.phi = (u - (conjugator_lift(f, x) - x)).cwiseAbs().maxCoeff();
          return s;
        },
        cfg.exec);
    double phi = 0;
    for (const auto& s : sups) {
      cs.max_displacement = std::max(cs.max_displacement, s.u);
      phi = std::max(phi, s.phi);
    }
    if (smooth) cs.conjugator_deviation = phi;
    rep.conjugacy = cs;
    if (!(cs.residual < cfg.conjugacy_check)) {
      throw LabError(ErrorCode::NumericalBlowup,
                     "conjugacy residual " + std::to_string(cs.residual) + " above check tolerance");
    }
  });

  // P5
  Verdict p5;
  if (section("center", [&] {
        rep.center = center_growth(f, cfg.center_samples, cfg.center_steps,
                                   stream_seed(cfg.seed, 3000), cfg.exec);
      })) {
    p5 = evaluate("P5", kP5, rep.center->min_growth, rep.center->threshold, ">");
  } else {
    p5 = unavailable("P5", kP5, 0.5 * linear[1], VerdictState::error, "center section failed", ">");
  }

  // P6
  Verdict p6;
  if (!p1.passed()) {
    p6 = unavailable("P6", kP6, cfg.claim1_tolerance, VerdictState::not_applicable, "requires P1");
  } else if (!conj) {
    p6 = unavailable("P6", kP6, cfg.claim1_tolerance, VerdictState::error, "conjugacy section failed");
  } else if (section("claim1", [&] {
               SplitMix64 rng(stream_seed(cfg.seed, 4000));
               const TorusPoint x = rng.point();
               const LeafSegment seg =
                   integrate_leaf(f, x, Bundle::wu, cfg.claim1_halflength, cfg.leaf_step);
               const DensityProfile prof = leaf_density_profile(f, seg, cfg.density_tolerance);
               const CenterDerivativeComparison cmp = center_derivative_check(*conj, seg, prof);
               rep.claim1 = Claim1Section{cmp.max_deviation, cmp.mean_deviation, cmp.points, seg.length()};
             })) {
    p6 = evaluate("P6", kP6, rep.claim1->max_deviation, cfg.claim1_tolerance);
  } else {
    p6 = unavailable("P6", kP6, cfg.claim1_tolerance, VerdictState::error, "claim1 section failed");
  }

  rep.verdicts = {p1, p2, p2c, p2e, p3, p4, p5, p6, entropy};
  rep.overall = aggregate(rep.verdicts);
  return rep;
}

}  // namespace dalab
