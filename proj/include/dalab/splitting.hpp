#pragma once

#include <cstdint>

#include "dalab/da_map.hpp"
#include "dalab/parallel.hpp"

namespace dalab {

inline constexpr int kDefaultFrameDepth = 40;
inline constexpr double kDegenerateThreshold = 1e-10;

/// Finite-time estimate of E^s + E^wu + E^su at `base`.
struct Frame {
  TorusPoint base;
  Vec3 e_s = Vec3::UnitX();
  Vec3 e_wu = Vec3::UnitY();
  Vec3 e_su = Vec3::UnitZ();
  int depth = 0;
  Vec3 residuals = Vec3::Zero();  // invariance defect per bundle, radians

  const Vec3& vector(Bundle b) const {
    switch (b) {
      case Bundle::s: return e_s;
      case Bundle::wu: return e_wu;
      default: return e_su;
    }
  }
};

/// Unit vectors only (residuals left at zero). Each vector is oriented to have a
/// nonnegative component along the matching eigenvector of the linear part.
///
/// e_su comes from forward QR iteration of Df along the backward orbit ending at x,
/// e_s from the same iteration for f^-1 along the forward orbit, and e_wu from
/// the intersection of the two resulting planes (E^wu+E^su and E^s+E^wu).
/// Both iterations start from the eigenframe of the linear part.
Frame estimate_frame(const DAMap& f, const TorusPoint& x, int depth = kDefaultFrameDepth);

/// Single bundle vector; cheaper when only one direction is needed.
Vec3 bundle_vector(const DAMap& f, const TorusPoint& x, Bundle b, int depth = kDefaultFrameDepth);

/// estimate_frame plus residuals: angle between Df(x) e(x) and an independently
/// estimated e(f x).
Frame finite_time_frame(const DAMap& f, const TorusPoint& x, int depth = kDefaultFrameDepth);

/// Angle between two lines through the origin, in [0, pi/2].
double line_angle(const Vec3& a, const Vec3& b);

struct ConeMargins {
  double su_aperture = 0, su_expansion = 0;
  double s_aperture = 0, s_expansion = 0;
  double cu_aperture = 0, cs_aperture = 0;
  double min() const;
};

struct ConeCertificate {
  int grid_resolution = 0;
  double aperture = 0;
  ConeMargins margins;
  TorusPoint worst_point;  // grid point attaining the smallest margin
  bool verdict = false;
};

/// Grid heuristic: cones are taken in the eigenbasis of the linear part and
/// measured with the Euclidean norm of eigen-coordinates. At every grid point,
/// Df must map the su cone and the center-unstable cone strictly into themselves
/// and expand the su cone; Df^-1 must do the same for the s and center-stable
/// cones. Margins are worst-case slack over the grid.
ConeCertificate cone_certificate(const DAMap& f, int grid_resolution, double aperture = 0.5,
                                 Execution exec = Execution::parallel);

struct ResidualStats {
  Vec3 mean = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  int samples = 0;
  int depth = 0;
};

ResidualStats invariance_residual(const DAMap& f, int samples, int depth, std::uint64_t seed,
                                  Execution exec = Execution::parallel);

}  // namespace dalab
