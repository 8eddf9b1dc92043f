// Acceptance run: one PASS/FAIL line per criterion, each with its time limit.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "dalab/conjugacy.hpp"
#include "dalab/errors.hpp"
#include "dalab/experiment.hpp"
#include "dalab/foliation.hpp"
#include "dalab/lyapunov.hpp"
#include "dalab/rigidity.hpp"
#include "oracles.hpp"

using namespace dalab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    ok = ok && cond;
    if (!detail.empty()) detail += "; ";
    detail += what + (cond ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ToralAutomorphism a7() { return make_linear_map(oracle::to_imat(oracle::kA7)); }

DAMap family(ConstructionTag mode, double eps) { return make_da_map(a7(), reference_shears(), eps, mode); }

const auto kLogs = oracle::a7_log_moduli();
const Vec3 kLinear(kLogs[0], kLogs[1], kLogs[2]);

int failures = 0;

void criterion(int id, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = dt < limit_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("criterion %2d: %s  %s  (%.2f s, limit %.0f s)\n", id, pass ? "PASS" : "FAIL", o.detail.c_str(), dt,
              limit_s);
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  criterion(1, 5, [] {
    Outcome o;
    const ExponentEstimate e = orbit_exponents(DAMap::linear(a7()), TorusPoint(Vec3(0.3, 0.7, 0.11)), 100000);
    const double dev = (e.values - Vec3(-1.6190, 0.4415, 1.1777)).cwiseAbs().maxCoeff();
    const double dev_root = (e.values - kLinear).cwiseAbs().maxCoeff();
    o.require(dev < 1e-3, "max |lambda - (-1.6190, 0.4415, 1.1777)| = " + fmt("%.2e", dev));
    o.require(dev_root < 1e-3, "vs root oracle " + fmt("%.2e", dev_root));
    return o;
  });

  criterion(2, 20, [] {
    Outcome o;
    for (auto mode : {ConstructionTag::post_composed, ConstructionTag::smooth_conjugate}) {
      for (double eps : {0.02, 0.05}) {
        const auto t0 = std::chrono::steady_clock::now();
        const ExponentEstimate e = orbit_exponents(family(mode, eps), TorusPoint(Vec3(0.21, 0.57, 0.83)), 100000);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(std::abs(e.values.sum()) < 1e-3 && dt < 10,
                  std::string(mode == ConstructionTag::post_composed ? "post" : "smooth") + fmt(" eps %g", eps) +
                      " |sum| " + fmt("%.1e", std::abs(e.values.sum())) + fmt(" in %.2f s", dt));
      }
    }
    return o;
  });

  criterion(3, 30, [] {
    Outcome o;
    const ToralAutomorphism a = a7();
    const DAMap f = family(ConstructionTag::post_composed, 0.05);
    const long long expected[] = {1, 13, 91};
    for (int p = 1; p <= 3; ++p) {
      const auto pts = periodic_points_linear(a, p);
      double worst = 0;
      for (const auto& x : pts) worst = std::max(worst, continue_periodic(f, x, p).newton_residual);
      o.require(static_cast<long long>(pts.size()) == expected[p - 1] && worst < 1e-12,
                "period " + std::to_string(p) + ": " + std::to_string(pts.size()) + " points, max residual " +
                    fmt("%.1e", worst));
    }
    return o;
  });

  criterion(4, 60, [] {
    Outcome o;
    for (auto mode : {ConstructionTag::post_composed, ConstructionTag::smooth_conjugate}) {
      const double r = conjugacy_residual(solve_conjugacy(family(mode, 0.05), 1e-12), 16);
      o.require(r < 1e-8, std::string(mode == ConstructionTag::post_composed ? "post" : "smooth") + " residual " +
                              fmt("%.1e", r));
    }
    const ConjugacyApprox zero = solve_conjugacy(family(ConstructionTag::post_composed, 0.0), 1e-12);
    double sup = 0;
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        for (int k = 0; k < 16; ++k) sup = std::max(sup, zero.displacement(TorusPoint(Vec3(i, j, k) / 16.0)).norm());
      }
    }
    o.require(sup == 0.0, "eps 0 sup|u| = " + fmt("%g", sup));
    return o;
  });

  criterion(5, 120, [] {
    Outcome o;
    const double eps = 0.05;
    const DAMap f = family(ConstructionTag::smooth_conjugate, eps);
    const ConjugacyApprox c = solve_conjugacy(f, 1e-12);
    double sup = 0;
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        for (int k = 0; k < 16; ++k) {
          const TorusPoint x(Vec3(i, j, k) / 16.0);
          sup = std::max(sup, torus_distance(evaluate_h(c, x), TorusPoint(oracle::reference_shear(x.coords(), eps))));
        }
      }
    }
    o.require(sup < 1e-6, "sup |h - phi| " + fmt("%.1e", sup));
    const double spread = periodic_data_spread(f, 3).spread.maxCoeff();
    o.require(spread < 1e-9, "periodic spread " + fmt("%.1e", spread));
    const RigidityReport r = rigidity_report(f, RigidityConfig{});
    o.require(r.overall == Overall::rigid_evidence, std::string("overall ") + overall_name(r.overall));
    return o;
  });

  criterion(6, 120, [] {
    Outcome o;
    const TorusPoint x0(Vec3(0.31, 0.17, 0.62));
    const DAMap lin = DAMap::linear(a7());
    const DAMap post = family(ConstructionTag::post_composed, 0.05);
    const DAMap smooth = family(ConstructionTag::smooth_conjugate, 0.05);
    const double tol = 1e-8;
    o.require(delta_density_ratio(post, x0, x0, Bundle::wu, tol) == 1.0 &&
                  delta_density_ratio(lin, x0, x0, Bundle::wu, tol) == 1.0,
              "Delta(x,x) = 1");
    const LeafSegment ls = integrate_leaf(lin, x0, Bundle::wu, 0.25);
    double dmax = 0;
    for (std::size_t i = 0; i < ls.points.size(); i += 25) {
      dmax = std::max(dmax, std::abs(delta_density_ratio(lin, x0, ls.points[i], Bundle::wu, tol) - 1));
    }
    o.require(dmax < 1e-9, "linear |Delta - 1| " + fmt("%.1e", dmax));
    const UBDStatistic u = ubd_statistic(lin, Bundle::wu, {0.4, 0.2, 0.1}, 20, 3);
    o.require(std::abs(u.K_global - 1) < 1e-9, "linear K_global - 1 = " + fmt("%.1e", u.K_global - 1));
    const CocycleStatistic cs = cocycle_ratio_statistic(lin, Bundle::wu, 20, 200, 3);
    o.require(std::abs(cs.bound() - 1) < 1e-9, "linear cocycle bound - 1 = " + fmt("%.1e", cs.bound() - 1));

    const double rp = equivariance_check(post, integrate_leaf(post, x0, Bundle::wu, 0.1), tol);
    const double rs = equivariance_check(smooth, integrate_leaf(smooth, x0, Bundle::wu, 0.1), tol);
    o.require(rp < 1e-3 && rs < 1e-3, "equivariance post " + fmt("%.1e", rp) + ", smooth " + fmt("%.1e", rs));
    const double r1 = equivariance_check(smooth, integrate_leaf(smooth, x0, Bundle::wu, 0.1, 2e-3), 2 * tol);
    const double r2 = equivariance_check(smooth, integrate_leaf(smooth, x0, Bundle::wu, 0.1, 1e-3), tol);
    const double r3 = equivariance_check(smooth, integrate_leaf(smooth, x0, Bundle::wu, 0.1, 5e-4), tol / 2);
    o.require(r2 <= 0.5 * r1 && r3 <= 0.5 * r2,
              "smooth refinement " + fmt("%.1e", r1) + " -> " + fmt("%.1e", r2) + " -> " + fmt("%.1e", r3));
    return o;
  });

  criterion(7, 60, [] {
    Outcome o;
    const DAMap f = family(ConstructionTag::smooth_conjugate, 0.05);
    const TorusPoint starts[] = {TorusPoint(Vec3(0.31, 0.17, 0.62)), TorusPoint(Vec3(0.05, 0.5, 0.9)),
                                 TorusPoint(Vec3(0.7, 0.85, 0.2))};
    const ConjugacyApprox c = solve_conjugacy(f, 1e-12);
    double worst = 0;
    for (const auto& x : starts) {
      const LeafSegment s = integrate_leaf(f, x, Bundle::wu, 0.25);
      worst = std::max(worst, center_derivative_check(c, s, leaf_density_profile(f, s, 1e-8)).max_deviation);
    }
    o.require(worst < 1e-2, "max |h' - rho| over 3 segments of length 0.5: " + fmt("%.1e", worst));
    return o;
  });

  criterion(8, 30, [] {
    Outcome o;
    const double target = 1.6192;
    const double root = kLogs[1] + kLogs[2];
    const TorusPoint x(Vec3(0.3, 0.7, 0.11));
    const double pl = pesin_entropy(orbit_exponents(DAMap::linear(a7()), x, 100000));
    const DAMap smooth = family(ConstructionTag::smooth_conjugate, 0.05);
    const double ps = pesin_entropy(exponent_field(smooth, 8, 100000, 1).stats.mean);
    o.require(std::abs(pl - target) < 5e-3 && std::abs(pl - root) < 5e-3, "Pesin A7 " + fmt("%.5f", pl));
    o.require(std::abs(ps - target) < 5e-3 && std::abs(ps - root) < 5e-3, "Pesin smooth " + fmt("%.5f", ps));
    const EntropyBalance b = entropy_balance_check(periodic_data_spread(smooth, 3), a7(), 1e-6);
    o.require(b.residual < 1e-6 && b.state == VerdictState::pass, "balance residual " + fmt("%.1e", b.residual));
    return o;
  });

  criterion(9, 30, [] {
    Outcome o;
    const double threshold = 0.5 * kLogs[1];
    for (auto mode : {ConstructionTag::post_composed, ConstructionTag::smooth_conjugate}) {
      for (double eps : {0.02, 0.05}) {
        const DAMap f = family(mode, eps);
        if (!cone_certificate(f, 16, 0.5).verdict) continue;
        const CenterSection c = center_growth(f, 100, 200, 1);
        o.require(c.min_growth > threshold, std::string(mode == ConstructionTag::post_composed ? "post" : "smooth") +
                                                fmt(" eps %g", eps) + " min growth " + fmt("%.4f", c.min_growth) +
                                                fmt(" > %.4f", threshold));
      }
    }
    return o;
  });

  criterion(10, 600, [] {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "dalab_acceptance";
    fs::remove_all(root);
    const char* families[] = {"linear", "smooth_conjugate", "post_composed"};
    double slowest = 0;
    for (const char* name : families) {
      std::string first;
      for (int run = 0; run < 2; ++run) {
        ExperimentConfig cfg = load_config(fs::path(DALAB_CONFIG_DIR) / (std::string(name) + ".json"));
        cfg.output_dir = root / name / std::to_string(run);
        std::ostringstream log;
        const auto t0 = std::chrono::steady_clock::now();
        const int code = run_experiment(cfg, log);
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cfg.output_dir)) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::string all;
        for (const auto& f : files) all += f.filename().string() + "\n" + slurp(f);
        if (run == 0) {
          first = all;
          o.require(code == kExitOk, std::string(name) + " exit " + std::to_string(code));
        } else {
          o.require(all == first && !all.empty(), std::string(name) + " byte-identical");
        }
      }
    }
    o.require(slowest < 600, "slowest default report " + fmt("%.1f s", slowest));
    fs::remove_all(root);
    return o;
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
