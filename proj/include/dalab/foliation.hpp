#pragma once

#include <cstdint>
#include <vector>

#include "dalab/da_map.hpp"
#include "dalab/parallel.hpp"
#include "dalab/splitting.hpp"

namespace dalab {

inline constexpr double kDefaultLeafStep = 1e-3;
inline constexpr double kSeparationCutoff = 1e-6;
inline constexpr double kHolderSlack = 2.0;

/// Sampled arc of a one-dimensional invariant foliation, ordered along the leaf.
struct LeafSegment {
  Bundle bundle = Bundle::wu;
  std::vector<TorusPoint> points;
  std::vector<double> arclength;  // cumulative chord length, arclength[0] == 0
  std::size_t base_index = 0;     // the point the segment was grown from
  double step = 0;
  int depth = kDefaultFrameDepth;

  double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
};

/// Conditional density along a segment: rho > 0 with unit trapezoidal integral over arclength.
struct DensityProfile {
  LeafSegment segment;
  std::vector<double> rho;
  std::vector<double> log_ratio;  // log(rho(p) / rho(base))
  int iterations = 0;             // product length used
  double tail_bound = 0;
  bool converged = false;
};

double trapezoid(const std::vector<double>& s, const std::vector<double>& values);

/// Orientation-continuous RK4 integration of the unit bundle field in both
/// directions from x. Requires 0 < step <= halflength / 10.
LeafSegment integrate_leaf(const DAMap& f, const TorusPoint& x, Bundle b, double halflength,
                           double step = kDefaultLeafStep, int depth = kDefaultFrameDepth);

/// ||Df(x) e_b(x)||.
double leaf_jacobian(const DAMap& f, const TorusPoint& x, Bundle b, int depth = kDefaultFrameDepth);

struct DeltaOptions {
  int depth = kDefaultFrameDepth;
  int max_iterations = 400;
  /// When > 0, use exactly this many factors and ignore the stopping rule.
  int fixed_iterations = 0;
};

/// Delta(x, y) = rho(x) / rho(y) = lim prod_{i=1..n} J(f^-i y) / J(f^-i x) for an
/// expanding bundle (wu or su). The product is truncated once the backward images
/// are closer than 1e-6 along the leaf and the geometric tail majorant, inflated by
/// the Holder slack factor, is below `tolerance`. Throws NotOnLeaf or NonExpandingBundle.
double delta_density_ratio(const DAMap& f, const TorusPoint& x, const TorusPoint& y, Bundle b,
                           double tolerance, const DeltaOptions& opts = {});

/// rho(p) proportional to Delta(p, base). Stable leaves use the same construction
/// for f^-1, whose expanding direction is E^s.
DensityProfile leaf_density_profile(const DAMap& f, const LeafSegment& segment, double tolerance,
                                    const DeltaOptions& opts = {});

struct UBDOptions {
  int points_per_segment = 41;
  double tolerance = 1e-6;
  int depth = kDefaultFrameDepth;
};

struct UBDStatistic {
  Bundle bundle = Bundle::wu;
  std::vector<double> box_scales;
  std::vector<double> K_estimates;
  double K_global = 1.0;
  int samples_per_scale = 0;

  /// max / min of K_estimates across scales.
  double scale_spread() const;
};

/// For each scale, leaf segments of that arclength through points sampled on a
/// transversal disk of the same diameter; K is max(sup rho_hat, 1 / inf rho_hat)
/// where rho_hat is the density against normalized leaf length.
UBDStatistic ubd_statistic(const DAMap& f, Bundle b, const std::vector<double>& box_scales,
                           int samples_per_scale, std::uint64_t seed, const UBDOptions& opts = {},
                           Execution exec = Execution::parallel);

struct CocycleStatistic {
  Bundle bundle = Bundle::wu;
  int pairs = 0;
  int n_max = 0;
  double pair_separation = 0;
  double sup_ratio = 1.0;       // sup of prod J(f^j x) / J(f^j y)
  double sup_reciprocal = 1.0;  // sup of the reciprocal

  double bound() const { return sup_ratio > sup_reciprocal ? sup_ratio : sup_reciprocal; }
};

CocycleStatistic cocycle_ratio_statistic(const DAMap& f, Bundle b, int pairs, int n_max,
                                         std::uint64_t seed, double pair_separation = 0.1,
                                         int depth = kDefaultFrameDepth,
                                         Execution exec = Execution::parallel);

/// True when the cocycle statistic exceeds slack * K_global^4.
bool cocycle_violates_ubd(const CocycleStatistic& c, const UBDStatistic& u, double slack = 2.0);

/// Max over samples of |rho_hat(f x) J(x) |L_x| / |L_fx| - rho_hat(x)| / rho_hat(x)
/// where rho_hat is the density against normalized leaf length on the segment and
/// on its image.
double equivariance_check(const DAMap& f, const LeafSegment& segment, double tolerance,
                          const DeltaOptions& opts = {});

}  // namespace dalab
