#include "dalab/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

double trapezoid(const std::vector<double>& s, const std::vector<double>& values) {
  double total = 0;
  for (std::size_t j = 1; j < s.size(); ++j) total += 0.5 * (values[j] + values[j - 1]) * (s[j] - s[j - 1]);
  return total;
}

namespace {

Vec3 oriented_field(const DAMap& f, const Vec3& p, Bundle b, int depth, const Vec3& ref) {
  Vec3 v = bundle_vector(f, TorusPoint(p), b, depth);
  if (v.dot(ref) < 0) v = -v;
  return v;
}

struct RkStep {
  Vec3 next;
  Vec3 k1;  // field at the start point
};

RkStep rk4(const DAMap& f, const Vec3& p, Bundle b, int depth, double h, const Vec3& ref) {
  const Vec3 k1 = oriented_field(f, p, b, depth, ref);
  const Vec3 k2 = oriented_field(f, p + 0.5 * h * k1, b, depth, k1);
  const Vec3 k3 = oriented_field(f, p + 0.5 * h * k2, b, depth, k1);
  const Vec3 k4 = oriented_field(f, p + h * k3, b, depth, k1);
  return {p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), k1};
}

std::vector<double> chord_arclength(const std::vector<TorusPoint>& pts) {
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t j = 1; j < pts.size(); ++j) s[j] = s[j - 1] + torus_distance(pts[j - 1], pts[j]);
  return s;
}

// Direction used for pullbacks: the one along which bundle b contracts.
Direction pull_direction(Bundle b) { return b == Bundle::s ? Direction::forward : Direction::inverse; }

// Jacobian of the expanding map (f for wu/su, f^-1 for s) along v at p.
double expanding_jacobian(const DAMap& f, const TorusPoint& p, Bundle b, const Vec3& v) {
  const Direction d = b == Bundle::s ? Direction::inverse : Direction::forward;
  return (derivative(f, p, d) * v).norm();
}

double contraction_rate(const DAMap& f, Bundle b) {
  const double mu = std::abs(f.linear_part.eigenvalue(b));
  return b == Bundle::s ? mu : 1.0 / mu;
}

struct Transport {
  std::vector<double> log_ratio;
  int iterations = 0;
  double tail = 0;
  bool converged = false;
};

// Pulls the polyline back under the contracting dynamics, re-integrating it onto
// the leaf through the image of the base point after every step so that the
// samples stay on a common leaf. Accumulates log J(base_i) - log J(p_i).
Transport transport(const DAMap& f, std::vector<TorusPoint> cur, std::size_t base, Bundle b,
                    double tolerance, const DeltaOptions& opts) {
  const std::size_t n = cur.size();
  const Direction pull = pull_direction(b);
  const double r = contraction_rate(f, b);
  const int depth = opts.depth;

  Transport out;
  out.log_ratio.assign(n, 0.0);
  std::vector<TorusPoint> mapped(n);
  std::vector<Vec3> field(n);
  std::vector<double> logj(n);
  const int limit = opts.fixed_iterations > 0 ? opts.fixed_iterations : opts.max_iterations;
  double lip = 0, rate = r, prev_length = 0;

  for (int it = 1; it <= limit; ++it) {
    for (std::size_t j = 0; j < n; ++j) mapped[j] = apply(f, cur[j], pull);

    // Re-integrate from the image of the base point, matching chord positions.
    cur[base] = mapped[base];
    Vec3 lift = mapped[base].coords();
    Vec3 ref = n > 1 ? nearest_difference(mapped[base], mapped[std::min(base + 1, n - 1)])
                     : Vec3(bundle_vector(f, mapped[base], b, depth));
    if (base + 1 == n && n > 1) ref = -nearest_difference(mapped[base], mapped[base - 1]);
    field[base] = oriented_field(f, lift, b, depth, ref);
    double length = 0;
    for (std::size_t j = base + 1; j < n; ++j) {
      const Vec3 chord = nearest_difference(mapped[j - 1], mapped[j]);
      const double h = chord.norm();
      length += h;
      const RkStep st = rk4(f, lift, b, depth, h, chord);
      field[j - 1] = st.k1;
      lift = st.next;
      cur[j] = TorusPoint(lift);
    }
    if (base + 1 < n) field[n - 1] = oriented_field(f, lift, b, depth, field[n - 2]);
    lift = mapped[base].coords();
    for (std::size_t j = base; j-- > 0;) {
      const Vec3 chord = nearest_difference(mapped[j + 1], mapped[j]);
      const double h = chord.norm();
      length += h;
      const RkStep st = rk4(f, lift, b, depth, h, chord);
      if (j + 1 != base) field[j + 1] = st.k1;
      lift = st.next;
      cur[j] = TorusPoint(lift);
    }
    if (base > 0) field[0] = oriented_field(f, lift, b, depth, -field[1]);

    for (std::size_t j = 0; j < n; ++j) logj[j] = std::log(expanding_jacobian(f, cur[j], b, field[j]));
    double term_max = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double term = logj[base] - logj[j];
      out.log_ratio[j] += term;
      term_max = std::max(term_max, std::abs(term));
    }
    if (!std::isfinite(term_max)) {
      throw LabError(ErrorCode::NumericalBlowup, "non-finite leaf Jacobian");
    }
    out.iterations = it;
    // Majorant: later terms are at most lip * length * rate^k.
    if (length > 0) lip = std::max(lip, term_max / length);
    if (prev_length > 0) rate = std::max(rate, length / prev_length);
    prev_length = length;
    out.tail = rate < 1.0 ? kHolderSlack * lip * length * rate / (1.0 - rate)
                          : std::numeric_limits<double>::infinity();
    if (opts.fixed_iterations > 0) continue;
    if (length < kSeparationCutoff && out.tail < tolerance) {
      out.converged = true;
      break;
    }
  }
  if (opts.fixed_iterations > 0) out.converged = true;
  return out;
}

}  // namespace

LeafSegment integrate_leaf(const DAMap& f, const TorusPoint& x, Bundle b, double halflength,
                           double step, int depth) {
  if (!(step > 0) || !(halflength > 0) || step > halflength / 10.0 * (1 + 1e-12)) {
    throw LabError(ErrorCode::InvalidArgument, "need 0 < step <= halflength / 10");
  }
  const int steps = static_cast<int>(std::lround(halflength / step));
  Vec3 v0;
  try {
    v0 = bundle_vector(f, x, b, depth);
  } catch (const LabError& e) {
    throw LabError(ErrorCode::FrameFailure, e.what());
  }

  auto grow = [&](Vec3 dir) {
    std::vector<TorusPoint> pts;
    Vec3 p = x.coords();
    for (int k = 0; k < steps; ++k) {
      RkStep st;
      try {
        st = rk4(f, p, b, depth, step, dir);
      } catch (const LabError& e) {
        throw LabError(ErrorCode::FrameFailure, e.what());
      }
      dir = (st.next - p).normalized();
      p = st.next;
      pts.emplace_back(p);
    }
    return pts;
  };
  const auto fwd = grow(v0);
  const auto bwd = grow(-v0);

  LeafSegment seg;
  seg.bundle = b;
  seg.step = step;
  seg.depth = depth;
  seg.points.assign(bwd.rbegin(), bwd.rend());
  seg.base_index = seg.points.size();
  seg.points.push_back(x);
  seg.points.insert(seg.points.end(), fwd.begin(), fwd.end());
  seg.arclength = chord_arclength(seg.points);
  return seg;
}

double leaf_jacobian(const DAMap& f, const TorusPoint& x, Bundle b, int depth) {
  Vec3 v;
  try {
    v = bundle_vector(f, x, b, depth);
  } catch (const LabError& e) {
    throw LabError(ErrorCode::FrameFailure, e.what());
  }
  return (derivative(f, x) * v).norm();
}

double delta_density_ratio(const DAMap& f, const TorusPoint& x, const TorusPoint& y, Bundle b,
                           double tolerance, const DeltaOptions& opts) {
  if (b == Bundle::s) throw LabError(ErrorCode::NonExpandingBundle, "stable bundle contracts");
  if (!(tolerance > 0)) throw LabError(ErrorCode::InvalidArgument, "tolerance must be positive");
  const double d = torus_distance(x, y);
  if (d == 0.0) return 1.0;

  const double step = std::min(kDefaultLeafStep, d / 20.0);
  const LeafSegment seg = integrate_leaf(f, x, b, 1.5 * d + 10 * step, step, opts.depth);
  std::size_t k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < seg.points.size(); ++j) {
    const double dj = torus_distance(seg.points[j], y);
    if (dj < best) {
      best = dj;
      k = j;
    }
  }
  // Distance from y to the leaf: one RK4 step from the nearest vertex by the projected offset.
  const Vec3 offset = nearest_difference(seg.points[k], y);
  const Vec3 v = bundle_vector(f, seg.points[k], b, opts.depth);
  const double t = offset.dot(v);
  const RkStep st = rk4(f, seg.points[k].coords(), b, opts.depth, std::abs(t), t >= 0 ? v : Vec3(-v));
  const double off_leaf = torus_distance(TorusPoint(st.next), y);
  if (off_leaf > 1e-6) {
    throw LabError(ErrorCode::NotOnLeaf, "y is " + std::to_string(off_leaf) + " from the leaf of x");
  }

  std::vector<TorusPoint> pts;
  std::size_t base;
  if (k > seg.base_index) {
    pts.assign(seg.points.begin() + seg.base_index, seg.points.begin() + k);
    pts.push_back(y);
    base = 0;
  } else if (k < seg.base_index) {
    pts.push_back(y);
    pts.insert(pts.end(), seg.points.begin() + k + 1, seg.points.begin() + seg.base_index + 1);
    base = pts.size() - 1;
  } else {
    pts = {x, y};
    base = 0;
  }
  const Transport tr = transport(f, pts, base, b, tolerance, opts);
  const std::size_t iy = base == 0 ? pts.size() - 1 : 0;
  return std::exp(-tr.log_ratio[iy]);
}

DensityProfile leaf_density_profile(const DAMap& f, const LeafSegment& segment, double tolerance,
                                    const DeltaOptions& opts) {
  if (segment.points.size() < 2) throw LabError(ErrorCode::SegmentTooShort, "empty segment");
  if (!(tolerance > 0)) throw LabError(ErrorCode::InvalidArgument, "tolerance must be positive");
  const Transport tr = transport(f, segment.points, segment.base_index, segment.bundle, tolerance, opts);
  DensityProfile prof;
  prof.segment = segment;
  prof.log_ratio = tr.log_ratio;
  prof.iterations = tr.iterations;
  prof.tail_bound = tr.tail;
  prof.converged = tr.converged;
  prof.rho.resize(tr.log_ratio.size());
  for (std::size_t j = 0; j < prof.rho.size(); ++j) prof.rho[j] = std::exp(tr.log_ratio[j]);
  const double total = trapezoid(segment.arclength, prof.rho);
  for (auto& r : prof.rho) r /= total;
  return prof;
}

double UBDStatistic::scale_spread() const {
  if (K_estimates.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(K_estimates.begin(), K_estimates.end());
  return *hi / *lo;
}

UBDStatistic ubd_statistic(const DAMap& f, Bundle b, const std::vector<double>& box_scales,
                           int samples_per_scale, std::uint64_t seed, const UBDOptions& opts,
                           Execution exec) {
  if (box_scales.empty()) throw LabError(ErrorCode::InvalidArgument, "no box scales");
  for (double s : box_scales) {
    if (!(s > 0 && s <= 0.5)) throw LabError(ErrorCode::InvalidArgument, "box scales must lie in (0, 0.5]");
  }
  if (samples_per_scale < 1) throw LabError(ErrorCode::InvalidArgument, "samples_per_scale >= 1");
  if (opts.points_per_segment < 21) throw LabError(ErrorCode::InvalidArgument, "points_per_segment >= 21");

  const std::size_t per = static_cast<std::size_t>(samples_per_scale);
  auto ks = indexed_map<double>(
      box_scales.size() * per,
      [&](std::size_t idx) {
        const double scale = box_scales[idx / per];
        SplitMix64 rng(stream_seed(seed, idx));
        const TorusPoint center = rng.point();
        const Vec3 e = bundle_vector(f, center, b, opts.depth);
        const Vec3 helper = std::abs(e.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        const Vec3 t1 = e.cross(helper).normalized();
        const Vec3 t2 = e.cross(t1);
        const double radius = 0.5 * scale * std::sqrt(rng.uniform());
        const double angle = 2.0 * 3.14159265358979323846 * rng.uniform();
        const TorusPoint x(center.coords() + radius * (std::cos(angle) * t1 + std::sin(angle) * t2));

        const double half = 0.5 * scale;
        const double step = half / ((opts.points_per_segment - 1) / 2);
        const LeafSegment seg = integrate_leaf(f, x, b, half, step, opts.depth);
        DeltaOptions dopts;
        dopts.depth = opts.depth;
        const DensityProfile prof = leaf_density_profile(f, seg, opts.tolerance, dopts);
        const double len = seg.length();
        double k = 1.0;
        for (double r : prof.rho) k = std::max({k, r * len, 1.0 / (r * len)});
        return k;
      },
      exec);

  UBDStatistic out;
  out.bundle = b;
  out.box_scales = box_scales;
  out.samples_per_scale = samples_per_scale;
  for (std::size_t s = 0; s < box_scales.size(); ++s) {
    double k = 1.0;
    for (std::size_t i = 0; i < per; ++i) k = std::max(k, ks[s * per + i]);
    out.K_estimates.push_back(k);
  }
  out.K_global = *std::max_element(out.K_estimates.begin(), out.K_estimates.end());
  return out;
}

CocycleStatistic cocycle_ratio_statistic(const DAMap& f, Bundle b, int pairs, int n_max,
                                         std::uint64_t seed, double pair_separation, int depth,
                                         Execution exec) {
  if (pairs < 1 || n_max < 1) throw LabError(ErrorCode::InvalidArgument, "pairs and n_max must be >= 1");
  if (!(pair_separation > 0)) throw LabError(ErrorCode::InvalidArgument, "pair_separation must be > 0");
  struct Extremes {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
  };
  auto ext = indexed_map<Extremes>(
      static_cast<std::size_t>(pairs),
      [&](std::size_t i) {
        SplitMix64 rng(stream_seed(seed, i));
        TorusPoint x = rng.point();
        const LeafSegment seg = integrate_leaf(f, x, b, pair_separation, pair_separation / 20.0, depth);
        TorusPoint y = seg.points.back();
        Extremes e;
        double acc = 0;
        for (int n = 1; n <= n_max; ++n) {
          acc += std::log(leaf_jacobian(f, x, b, depth)) - std::log(leaf_jacobian(f, y, b, depth));
          e.hi = std::max(e.hi, acc);
          e.lo = std::min(e.lo, acc);
          x = apply(f, x);
          y = apply(f, y);
        }
        return e;
      },
      exec);
  CocycleStatistic c;
  c.bundle = b;
  c.pairs = pairs;
  c.n_max = n_max;
  c.pair_separation = pair_separation;
  double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
  for (const auto& e : ext) {
    hi = std::max(hi, e.hi);
    lo = std::min(lo, e.lo);
  }
  c.sup_ratio = std::exp(hi);
  c.sup_reciprocal = std::exp(-lo);
  return c;
}

bool cocycle_violates_ubd(const CocycleStatistic& c, const UBDStatistic& u, double slack) {
  return c.bound() > slack * std::pow(u.K_global, 4);
}

double equivariance_check(const DAMap& f, const LeafSegment& segment, double tolerance,
                          const DeltaOptions& opts) {
  const DensityProfile here = leaf_density_profile(f, segment, tolerance, opts);

  LeafSegment image = segment;
  for (auto& p : image.points) p = apply(f, p);
  image.arclength = chord_arclength(image.points);
  const DensityProfile there = leaf_density_profile(f, image, tolerance, opts);

  const double len_x = segment.length(), len_fx = image.length();
  double worst = 0;
  for (std::size_t j = 0; j < segment.points.size(); ++j) {
    const double rho_x = here.rho[j] * len_x;
    const double rho_fx = there.rho[j] * len_fx;
    const Vec3 v = bundle_vector(f, segment.points[j], segment.bundle, opts.depth);
    const double jac = (derivative(f, segment.points[j]) * v).norm();
    worst = std::max(worst, std::abs(rho_fx * jac * len_x / len_fx - rho_x) / rho_x);
  }
  return worst;
}

}  // namespace dalab
