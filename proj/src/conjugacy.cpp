#include "dalab/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dalab/errors.hpp"
#include "dalab/foliation.hpp"
#include "dalab/rng.hpp"

namespace dalab {

namespace {

constexpr int kMaxTruncation = 10000;

double expanding_tail(double bound, double mu, int k) {
  return bound * std::pow(mu, -k) / (mu - 1.0);
}

double contracting_tail(double bound, double mu, int k) {
  return bound * std::pow(mu, k) / (1.0 - mu);
}

}  // namespace

Vec3 ConjugacyApprox::displacement(const TorusPoint& x) const {
  const auto& a = map.linear_part;
  Vec3 comp = Vec3::Zero();

  const int forward = std::max(truncation[1], truncation[2]);
  if (forward > 0) {
    const double mu_wu = a.eigenvalue(Bundle::wu), mu_su = a.eigenvalue(Bundle::su);
    double w_wu = 1.0 / mu_wu, w_su = 1.0 / mu_su;
    TorusPoint y = x;
    for (int k = 0; k < forward; ++k) {
      const Vec3 d = eigen_projection * map.displacement(y.coords());
      if (k < truncation[1]) comp[1] += w_wu * d[1];
      if (k < truncation[2]) comp[2] += w_su * d[2];
      w_wu /= mu_wu;
      w_su /= mu_su;
      if (k + 1 < forward) y = apply(map, y);
    }
  }
  if (truncation[0] > 0) {
    const double mu_s = a.eigenvalue(Bundle::s);
    double w = 1.0;
    TorusPoint y = x;
    for (int k = 1; k <= truncation[0]; ++k) {
      y = apply(map, y, Direction::inverse);
      comp[0] -= w * eigen_projection.row(0).dot(map.displacement(y.coords()));
      w *= mu_s;
    }
  }
  return a.right_eigenvectors * comp;
}

ConjugacyApprox conjugacy_with_truncation(const DAMap& f, std::array<int, 3> truncation) {
  const auto& a = f.linear_part;
  for (Bundle b : kAllBundles) {
    if (std::abs(std::abs(a.eigenvalue(b)) - 1.0) < 1e-6) {
      throw LabError(ErrorCode::NoSpectralGap,
                     std::string("eigenvalue modulus near 1 in bundle ") + bundle_name(b));
    }
  }
  for (int k : truncation) {
    if (k < 0 || k > kMaxTruncation) throw LabError(ErrorCode::InvalidArgument, "bad truncation");
  }
  ConjugacyApprox c;
  c.map = f;
  c.truncation = truncation;
  c.eigen_projection = a.left_eigenvectors;
  for (Bundle b : kAllBundles) {
    const int i = static_cast<int>(b);
    const double bound = f.displacement_bound(a.left(b));
    const double mu = std::abs(a.eigenvalue(b));
    if (bound == 0.0) continue;
    c.tails[i] = b == Bundle::s ? contracting_tail(bound, mu, truncation[i])
                                : expanding_tail(bound, mu, truncation[i]);
  }
  c.tail_bound = c.tails.sum();
  return c;
}

ConjugacyApprox solve_conjugacy(const DAMap& f, double tolerance) {
  if (!(tolerance > 0)) throw LabError(ErrorCode::InvalidArgument, "tolerance must be positive");
  const auto& a = f.linear_part;
  for (Bundle b : kAllBundles) {
    if (std::abs(std::abs(a.eigenvalue(b)) - 1.0) < 1e-6) {
      throw LabError(ErrorCode::NoSpectralGap,
                     std::string("eigenvalue modulus near 1 in bundle ") + bundle_name(b));
    }
  }
  std::array<int, 3> trunc{0, 0, 0};
  for (Bundle b : kAllBundles) {
    const int i = static_cast<int>(b);
    const double bound = f.displacement_bound(a.left(b));
    if (bound == 0.0) continue;
    const double mu = std::abs(a.eigenvalue(b));
    int k = 0;
    while (k < kMaxTruncation) {
      const double tail =
          b == Bundle::s ? contracting_tail(bound, mu, k) : expanding_tail(bound, mu, k);
      if (tail < tolerance / 3.0) break;
      ++k;
    }
    trunc[i] = k;
  }
  ConjugacyApprox c = conjugacy_with_truncation(f, trunc);
  c.tolerance = tolerance;
  return c;
}

TorusPoint evaluate_h(const ConjugacyApprox& conj, const TorusPoint& x, Direction d,
                      const InverseOptions& opts) {
  if (d == Direction::forward) return TorusPoint(x.coords() + conj.displacement(x));

  const Vec3 y = x.coords();
  Vec3 cur = y;
  double prev_step = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vec3 target = y - conj.displacement(TorusPoint(cur));
    // Keep the iterate on the lift nearest to the current one.
    target -= (target - cur).array().round().matrix();
    const Vec3 step = opts.damping * (target - cur);
    cur += step;
    const double s = step.lpNorm<Eigen::Infinity>();
    if (s < opts.tolerance) return TorusPoint(cur);
    if (s >= prev_step) {
      if (++growth >= 3) {
        throw LabError(ErrorCode::InversionDiverged,
                       "contraction factor >= 1 (step " + std::to_string(s) + ")");
      }
    } else {
      growth = 0;
    }
    prev_step = s;
  }
  throw LabError(ErrorCode::InversionDiverged, "no convergence within iteration budget");
}

double conjugacy_residual(const ConjugacyApprox& conj, int grid_resolution, Execution exec) {
  if (grid_resolution < 1) throw LabError(ErrorCode::InvalidArgument, "grid resolution >= 1");
  const int n = grid_resolution;
  const Mat3 a = conj.map.linear_part.real_matrix();
  auto res = indexed_map<double>(
      static_cast<std::size_t>(n) * n * n,
      [&](std::size_t idx) {
        const int i = static_cast<int>(idx / (n * n)), j = static_cast<int>((idx / n) % n),
                  k = static_cast<int>(idx % n);
        const TorusPoint x(double(i) / n, double(j) / n, double(k) / n);
        const TorusPoint lhs = evaluate_h(conj, apply(conj.map, x));
        const TorusPoint rhs(a * (x.coords() + conj.displacement(x)));
        return torus_distance(lhs, rhs);
      },
      exec);
  return *std::max_element(res.begin(), res.end());
}

CenterDerivativeComparison center_derivative_check(const ConjugacyApprox& conj,
                                                   const LeafSegment& segment,
                                                   const DensityProfile& profile) {
  const std::size_t n = segment.points.size();
  if (n < 10) throw LabError(ErrorCode::SegmentTooShort, "need at least 10 sample points");
  if (profile.rho.size() != n) {
    throw LabError(ErrorCode::InvalidArgument, "profile does not match segment");
  }
  const Vec3 ell = conj.map.linear_part.left(Bundle::wu);

  // wu-coordinate of a continuous lift of h along the leaf.
  std::vector<double> coord(n);
  Vec3 prev_u = conj.displacement(segment.points[0]);
  coord[0] = ell.dot(segment.points[0].coords() + prev_u);
  for (std::size_t j = 1; j < n; ++j) {
    const Vec3 u = conj.displacement(segment.points[j]);
    const Vec3 dh = nearest_difference(segment.points[j - 1], segment.points[j]) + u - prev_u;
    coord[j] = coord[j - 1] + ell.dot(dh);
    prev_u = u;
  }

  const auto& s = segment.arclength;
  std::vector<double> deriv(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lo = j == 0 ? 0 : j - 1, hi = j + 1 == n ? n - 1 : j + 1;
    deriv[j] = std::abs((coord[hi] - coord[lo]) / (s[hi] - s[lo]));
  }
  const double total = trapezoid(s, deriv);

  CenterDerivativeComparison out;
  out.points = static_cast<int>(n);
  out.h_prime.resize(n);
  double sum = 0;
  for (std::size_t j = 0; j < n; ++j) {
    out.h_prime[j] = deriv[j] / total;
    const double dev = std::abs(out.h_prime[j] - profile.rho[j]);
    out.max_deviation = std::max(out.max_deviation, dev);
    sum += dev;
  }
  out.mean_deviation = sum / static_cast<double>(n);
  return out;
}

Vec3 holder_probe(const ConjugacyApprox& conj, const std::vector<double>& scales, int samples,
                  std::uint64_t seed, Execution exec) {
  if (scales.size() < 3) throw LabError(ErrorCode::InvalidArgument, "need >= 3 scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0) || (i > 0 && !(scales[i] < scales[i - 1]))) {
      throw LabError(ErrorCode::InvalidArgument, "scales must be positive and decreasing");
    }
  }
  if (samples < 1) throw LabError(ErrorCode::InvalidArgument, "samples must be >= 1");

  const auto& a = conj.map.linear_part;
  const std::size_t ns = scales.size();
  // Per sample: |u(x + delta v) - u(x)| for every (direction, scale).
  auto diffs = indexed_map<std::vector<double>>(
      static_cast<std::size_t>(samples),
      [&](std::size_t i) {
        SplitMix64 rng(stream_seed(seed, i));
        const TorusPoint x = rng.point();
        const Vec3 u0 = conj.displacement(x);
        std::vector<double> row(3 * ns);
        for (int b = 0; b < 3; ++b) {
          for (std::size_t k = 0; k < ns; ++k) {
            const TorusPoint y(x.coords() + scales[k] * a.right_eigenvectors.col(b));
            row[b * ns + k] = (conj.displacement(y) - u0).norm();
          }
        }
        return row;
      },
      exec);

  Vec3 out;
  for (int b = 0; b < 3; ++b) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < ns; ++k) {
      double m = 0;
      for (const auto& row : diffs) m = std::max(m, row[b * ns + k]);
      if (m > 0) {
        lx.push_back(std::log(scales[k]));
        ly.push_back(std::log(m));
      }
    }
    if (lx.size() < 2) {
      out[b] = 1.0;
      continue;
    }
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      mx += lx[k];
      my += ly[k];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    out[b] = sxy / sxx;
  }
  return out;
}

}  // namespace dalab
