#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dalab/da_map.hpp"
#include "dalab/parallel.hpp"

namespace dalab {

struct LeafSegment;
struct DensityProfile;

/// Truncated series for the conjugacy h = id + u solving h o f = A o h.
///
/// With delta = f~ - A and delta_sigma its component along eigen-direction sigma
/// (via left eigenvectors), the bounded solution is
///   u_s(x)     = -sum_{k>=1} mu_s^(k-1) delta_s(f^-k x)
///   u_sigma(x) =  sum_{k>=0} mu_sigma^-(k+1) delta_sigma(f^k x),  sigma in {wu, su}
/// and u = sum_sigma u_sigma r_sigma.
struct ConjugacyApprox {
  DAMap map;
  std::array<int, 3> truncation{0, 0, 0};  // (K_s, K_wu, K_su)
  Vec3 tails = Vec3::Zero();              // geometric majorant per component
  double tail_bound = 0;
  double tolerance = 0;
  Mat3 eigen_projection;                   // rows are left eigenvectors of A

  Vec3 displacement(const TorusPoint& x) const;  // u(x)
};

/// Throws NoSpectralGap when some |mu_sigma| is within 1e-6 of 1.
ConjugacyApprox solve_conjugacy(const DAMap& f, double tolerance);

/// Same as solve_conjugacy but with explicit truncation lengths (for refinement studies).
ConjugacyApprox conjugacy_with_truncation(const DAMap& f, std::array<int, 3> truncation);

struct InverseOptions {
  double tolerance = 1e-11;
  int max_iterations = 200;
  double damping = 1.0;
};

/// forward: x + u(x) mod Z^3. inverse: fixed-point iteration x <- x + damping (y - u(x) - x);
/// throws InversionDiverged if the observed contraction factor reaches 1.
TorusPoint evaluate_h(const ConjugacyApprox& conj, const TorusPoint& x,
                      Direction d = Direction::forward, const InverseOptions& opts = {});

/// Max over the grid (i/n, j/n, k/n) of dist(h(f x), A h(x)).
double conjugacy_residual(const ConjugacyApprox& conj, int grid_resolution,
                          Execution exec = Execution::parallel);

struct CenterDerivativeComparison {
  double max_deviation = 0;
  double mean_deviation = 0;
  std::vector<double> h_prime;  // normalized to unit integral over the segment
  int points = 0;
};

/// Arclength derivative of the E^wu_A-coordinate of h along a wu leaf, normalized
/// to unit integral, compared pointwise with the leaf density. Throws SegmentTooShort.
CenterDerivativeComparison center_derivative_check(const ConjugacyApprox& conj,
                                                   const LeafSegment& segment,
                                                   const DensityProfile& profile);

/// Log-log slope of max_x |u(x + delta v) - u(x)| against delta, per eigen-direction v
/// of A, ordered (s, wu, su). Reports 1 when u vanishes identically.
Vec3 holder_probe(const ConjugacyApprox& conj, const std::vector<double>& scales, int samples,
                  std::uint64_t seed, Execution exec = Execution::parallel);

}  // namespace dalab
