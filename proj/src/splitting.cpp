#include "dalab/splitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

namespace {

// Modified Gram-Schmidt on the columns, in place.
void orthonormalize(Mat3& q) {
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    q.col(j).normalize();
  }
}

Mat3 eigen_start(const ToralAutomorphism& a, Bundle first, Bundle second, Bundle third) {
  Mat3 q;
  q.col(0) = a.right(first);
  q.col(1) = a.right(second);
  q.col(2) = a.right(third);
  orthonormalize(q);
  return q;
}

void orient(Vec3& v, const Vec3& reference) {
  if (v.dot(reference) < 0) v = -v;
}

// Forward QR iteration of the cocycle along the orbit of x under `d`'s inverse,
// ending at x. Returns Q whose first column is the dominant direction at x.
Mat3 pulled_frame(const DAMap& f, const TorusPoint& x, int depth, Direction d, Mat3 q) {
  const Direction back = d == Direction::forward ? Direction::inverse : Direction::forward;
  std::vector<TorusPoint> orbit(static_cast<std::size_t>(depth) + 1);
  orbit[0] = x;
  for (int k = 1; k <= depth; ++k) orbit[k] = apply(f, orbit[k - 1], back);
  for (int k = depth; k >= 1; --k) {
    q = derivative(f, orbit[k], d) * q;
    orthonormalize(q);
  }
  return q;
}

Mat3 unstable_frame(const DAMap& f, const TorusPoint& x, int depth) {
  const auto& a = f.linear_part;
  return pulled_frame(f, x, depth, Direction::forward,
                      eigen_start(a, Bundle::su, Bundle::wu, Bundle::s));
}

Mat3 center_stable_frame(const DAMap& f, const TorusPoint& x, int depth) {
  const auto& a = f.linear_part;
  return pulled_frame(f, x, depth, Direction::inverse,
                      eigen_start(a, Bundle::s, Bundle::wu, Bundle::su));
}

Vec3 intersect_planes(const Vec3& normal_u, const Vec3& normal_cs) {
  Vec3 v = normal_u.cross(normal_cs);
  const double n = v.norm();
  if (!(n > kDegenerateThreshold)) {
    throw LabError(ErrorCode::DegenerateIntersection,
                   "E^u and E^cs estimates coincide (sin angle " + std::to_string(n) + ")");
  }
  return v / n;
}

}  // namespace

double line_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

Frame estimate_frame(const DAMap& f, const TorusPoint& x, int depth) {
  if (depth < 1) throw LabError(ErrorCode::InvalidArgument, "frame depth must be >= 1");
  const auto& a = f.linear_part;
  const Mat3 qu = unstable_frame(f, x, depth);
  const Mat3 qcs = center_stable_frame(f, x, depth);

  Frame fr;
  fr.base = x;
  fr.depth = depth;
  fr.e_su = qu.col(0);
  fr.e_s = qcs.col(0);
  fr.e_wu = intersect_planes(qu.col(2), qcs.col(2));
  orient(fr.e_s, a.right(Bundle::s));
  orient(fr.e_wu, a.right(Bundle::wu));
  orient(fr.e_su, a.right(Bundle::su));
  return fr;
}

Vec3 bundle_vector(const DAMap& f, const TorusPoint& x, Bundle b, int depth) {
  if (depth < 1) throw LabError(ErrorCode::InvalidArgument, "frame depth must be >= 1");
  const auto& a = f.linear_part;
  Vec3 v;
  switch (b) {
    case Bundle::su: v = unstable_frame(f, x, depth).col(0); break;
    case Bundle::s: v = center_stable_frame(f, x, depth).col(0); break;
    case Bundle::wu:
      v = intersect_planes(unstable_frame(f, x, depth).col(2),
                           center_stable_frame(f, x, depth).col(2));
      break;
  }
  orient(v, a.right(b));
  return v;
}

Frame finite_time_frame(const DAMap& f, const TorusPoint& x, int depth) {
  Frame fr = estimate_frame(f, x, depth);
  const auto [fx, df] = apply_with_derivative(f, x);
  const Frame next = estimate_frame(f, fx, depth);
  for (Bundle b : kAllBundles) {
    fr.residuals[static_cast<int>(b)] = line_angle(df * fr.vector(b), next.vector(b));
  }
  return fr;
}

double ConeMargins::min() const {
  return std::min({su_aperture, su_expansion, s_aperture, s_expansion, cu_aperture, cs_aperture});
}

namespace {

// Cone {(p, q) : |p| <= a |q|} where q spans the axes `core` and p the rest.
// Directions sampled on rings t*a, t in [0,1], and 24 angles.
struct ConeScan {
  double aperture_slack;
  double expansion;
};

constexpr int kAngles = 24;
constexpr int kRings = 5;

// One-dimensional core (su or s cone): v = core + t a (cos th, sin th) on the other two axes.
ConeScan scan_narrow_cone(const Mat3& m, int core, double a) {
  const int o1 = (core + 1) % 3, o2 = (core + 2) % 3;
  double worst_aperture = 0, min_expansion = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kRings; ++r) {
    const double t = a * r / (kRings - 1);
    for (int k = 0; k < (r == 0 ? 1 : kAngles); ++k) {
      const double th = 2 * std::numbers::pi * k / kAngles;
      Vec3 v = Vec3::Zero();
      v[core] = 1.0;
      v[o1] = t * std::cos(th);
      v[o2] = t * std::sin(th);
      const Vec3 w = m * v;
      const double ap = std::hypot(w[o1], w[o2]) / std::abs(w[core]);
      worst_aperture = std::max(worst_aperture, ap);
      min_expansion = std::min(min_expansion, w.norm() / v.norm());
    }
  }
  return {a - worst_aperture, min_expansion - 1.0};
}

// Two-dimensional core (center-unstable or center-stable cone): the excluded axis
// `outside` is bounded by a times the norm on the other two.
double scan_wide_cone(const Mat3& m, int outside, double a) {
  const int c1 = (outside + 1) % 3, c2 = (outside + 2) % 3;
  double worst = 0;
  for (int r = -(kRings - 1); r < kRings; ++r) {
    const double t = a * r / (kRings - 1);
    for (int k = 0; k < kAngles; ++k) {
      const double th = 2 * std::numbers::pi * k / kAngles;
      Vec3 v;
      v[c1] = std::cos(th);
      v[c2] = std::sin(th);
      v[outside] = t;
      const Vec3 w = m * v;
      worst = std::max(worst, std::abs(w[outside]) / std::hypot(w[c1], w[c2]));
    }
  }
  return a - worst;
}

}  // namespace

ConeCertificate cone_certificate(const DAMap& f, int grid_resolution, double aperture,
                                 Execution exec) {
  if (grid_resolution < 8) {
    throw LabError(ErrorCode::InvalidArgument, "cone grid resolution must be >= 8");
  }
  if (!(aperture > 0)) throw LabError(ErrorCode::InvalidArgument, "aperture must be positive");
  const auto& a = f.linear_part;
  const Mat3& right = a.right_eigenvectors;
  const Mat3& left = a.left_eigenvectors;
  const int n = grid_resolution;
  const std::size_t total = static_cast<std::size_t>(n) * n * n;

  auto margins = indexed_map<ConeMargins>(
      total,
      [&](std::size_t idx) {
        const int i = static_cast<int>(idx / (n * n)), j = static_cast<int>((idx / n) % n),
                  k = static_cast<int>(idx % n);
        const TorusPoint x(double(i) / n, double(j) / n, double(k) / n);
        const Mat3 fwd = left * derivative(f, x, Direction::forward) * right;
        // Df^-1 at f(x) is the inverse of Df(x); checking it here keeps the grid on one set of points.
        const Mat3 bwd = fwd.inverse();
        ConeMargins cm;
        const auto su = scan_narrow_cone(fwd, 2, aperture);
        const auto s = scan_narrow_cone(bwd, 0, aperture);
        cm.su_aperture = su.aperture_slack;
        cm.su_expansion = su.expansion;
        cm.s_aperture = s.aperture_slack;
        cm.s_expansion = s.expansion;
        cm.cu_aperture = scan_wide_cone(fwd, 0, aperture);
        cm.cs_aperture = scan_wide_cone(bwd, 2, aperture);
        return cm;
      },
      exec);

  ConeCertificate cert;
  cert.grid_resolution = n;
  cert.aperture = aperture;
  const double inf = std::numeric_limits<double>::infinity();
  cert.margins = {inf, inf, inf, inf, inf, inf};
  double worst = inf;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const auto& m = margins[idx];
    auto& c = cert.margins;
    c.su_aperture = std::min(c.su_aperture, m.su_aperture);
    c.su_expansion = std::min(c.su_expansion, m.su_expansion);
    c.s_aperture = std::min(c.s_aperture, m.s_aperture);
    c.s_expansion = std::min(c.s_expansion, m.s_expansion);
    c.cu_aperture = std::min(c.cu_aperture, m.cu_aperture);
    c.cs_aperture = std::min(c.cs_aperture, m.cs_aperture);
    if (m.min() < worst) {
      worst = m.min();
      const int i = static_cast<int>(idx / (n * n)), j = static_cast<int>((idx / n) % n),
                k = static_cast<int>(idx % n);
      cert.worst_point = TorusPoint(double(i) / n, double(j) / n, double(k) / n);
    }
  }
  cert.verdict = cert.margins.min() > 0;
  return cert;
}

ResidualStats invariance_residual(const DAMap& f, int samples, int depth, std::uint64_t seed,
                                  Execution exec) {
  if (samples < 1) throw LabError(ErrorCode::InvalidArgument, "samples must be >= 1");
  auto res = indexed_map<Vec3>(
      static_cast<std::size_t>(samples),
      [&](std::size_t i) {
        SplitMix64 rng(stream_seed(seed, i));
        return finite_time_frame(f, rng.point(), depth).residuals;
      },
      exec);
  ResidualStats st;
  st.samples = samples;
  st.depth = depth;
  for (const auto& r : res) {
    st.mean += r;
    st.max = st.max.cwiseMax(r);
  }
  st.mean /= samples;
  return st;
}

}  // namespace dalab
