#include "dalab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"

namespace dalab {

namespace {

std::uint64_t hash_point(const TorusPoint& x) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (int i = 0; i < 3; ++i) {
    std::uint64_t bits;
    const double c = x[i];
    std::memcpy(&bits, &c, sizeof bits);
    h = SplitMix64(h ^ bits).next();
  }
  return h;
}

Mat3 random_orthonormal(SplitMix64& rng) {
  Mat3 q;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) q(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::HouseholderQR<Mat3> qr(q);
  return qr.householderQ();
}

// Q <- orth(M Q); accumulates log |R_jj|.
void qr_step(const Mat3& m, Mat3& q, Vec3& log_sums) {
  Mat3 w = m * q;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < j; ++i) w.col(j) -= w.col(i).dot(w.col(j)) * w.col(i);
    const double r = w.col(j).norm();
    log_sums[j] += std::log(r);
    w.col(j) /= r;
  }
  q = w;
}

Vec3 ascending(Vec3 v) {
  std::sort(v.data(), v.data() + 3);
  return v;
}

}  // namespace

ExponentEstimate orbit_exponents(const DAMap& f, const TorusPoint& x0, long long steps,
                                 int burn_in, std::uint64_t qr_seed) {
  if (steps < 1) throw LabError(ErrorCode::InvalidArgument, "steps must be >= 1");
  if (burn_in < 0) throw LabError(ErrorCode::InvalidArgument, "burn_in must be >= 0");
  SplitMix64 rng(qr_seed == 0 ? hash_point(x0) : qr_seed);
  Mat3 q = random_orthonormal(rng);
  TorusPoint x = x0;
  Vec3 discard = Vec3::Zero();
  for (int k = 0; k < burn_in; ++k) {
    auto [next, df] = apply_with_derivative(f, x);
    qr_step(df, q, discard);
    x = next;
  }

  ExponentEstimate est;
  est.steps = steps;
  est.history.reserve(static_cast<std::size_t>(steps / kHistoryStride));
  Vec3 sums = Vec3::Zero();
  for (long long k = 1; k <= steps; ++k) {
    auto [next, df] = apply_with_derivative(f, x);
    qr_step(df, q, sums);
    x = next;
    if (k % kHistoryStride == 0) {
      if (!sums.allFinite()) {
        throw LabError(ErrorCode::NumericalBlowup, "non-finite exponent sums at step " +
                                                       std::to_string(k));
      }
      est.history.push_back(ascending(sums / static_cast<double>(k)));
    }
  }
  if (!sums.allFinite() || !q.allFinite()) {
    throw LabError(ErrorCode::NumericalBlowup, "non-finite exponent sums");
  }
  est.values = ascending(sums / static_cast<double>(steps));
  return est;
}

BundleStats summarize(const std::vector<Vec3>& values) {
  BundleStats st;
  st.samples = static_cast<int>(values.size());
  if (values.empty()) return st;
  st.min = values.front();
  st.max = values.front();
  for (const auto& v : values) {
    st.mean += v;
    st.min = st.min.cwiseMin(v);
    st.max = st.max.cwiseMax(v);
  }
  st.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    for (const auto& v : values) st.sd += (v - st.mean).cwiseAbs2();
    st.sd = (st.sd / static_cast<double>(values.size() - 1)).cwiseSqrt();
  }
  return st;
}

ExponentField exponent_field(const DAMap& f, int samples, long long steps, std::uint64_t seed,
                             int burn_in, Execution exec) {
  if (samples < 2) throw LabError(ErrorCode::InvalidArgument, "exponent field needs >= 2 samples");
  ExponentField out;
  out.starts.resize(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    SplitMix64 rng(stream_seed(seed, static_cast<std::uint64_t>(i)));
    out.starts[static_cast<std::size_t>(i)] = rng.point();
  }
  out.estimates = indexed_map<ExponentEstimate>(
      out.starts.size(),
      [&](std::size_t i) {
        const std::uint64_t qr_seed = stream_seed(seed ^ 0x5851F42D4C957F2DULL, i) | 1ULL;
        return orbit_exponents(f, out.starts[i], steps, burn_in, qr_seed);
      },
      exec);
  std::vector<Vec3> values;
  values.reserve(out.estimates.size());
  for (const auto& e : out.estimates) values.push_back(e.values);
  out.stats = summarize(values);
  return out;
}

namespace {

IMat3 adjugate3(const IMat3& m) {
  IMat3 adj;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    }
  }
  return adj;
}

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

long long positive_mod(long long a, long long m) {
  long long r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

std::vector<LinearPeriodicPoint> periodic_seeds_linear(const ToralAutomorphism& a, int period,
                                                       long long cap) {
  if (period < 1) throw LabError(ErrorCode::InvalidArgument, "period must be >= 1");
  if (period > 20) throw LabError(ErrorCode::PeriodTooLarge, "period beyond integer range");
  const IMat3 ap = integer_power(a.matrix, period);
  const IMat3 m = ap - IMat3::Identity();
  long long det = integer_determinant(m);
  if (det == 0) throw LabError(ErrorCode::InvalidArgument, "A^p - I is singular");
  if (std::llabs(det) > cap) {
    throw LabError(ErrorCode::PeriodTooLarge,
                   "|det(A^p - I)| = " + std::to_string(std::llabs(det)) + " exceeds cap");
  }
  IMat3 adj = adjugate3(m);
  if (det < 0) {
    adj = -adj;
    det = -det;
  }
  // x = adj m / det; enumerate (m0, m1) over the bounding box of M [0,1)^3 and solve
  // for the admissible range of m2 exactly.
  std::array<long long, 3> lo{}, hi{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      lo[i] += std::min(0LL, m(i, j));
      hi[i] += std::max(0LL, m(i, j));
    }
  }
  const double work = double(hi[0] - lo[0] + 1) * double(hi[1] - lo[1] + 1);
  if (work > 2e8) throw LabError(ErrorCode::PeriodTooLarge, "enumeration box too large");

  std::vector<LinearPeriodicPoint> out;
  for (long long m0 = lo[0]; m0 <= hi[0]; ++m0) {
    for (long long m1 = lo[1]; m1 <= hi[1]; ++m1) {
      long long lo2 = lo[2], hi2 = hi[2];
      bool empty = false;
      for (int i = 0; i < 3 && !empty; ++i) {
        // 0 <= base + c*m2 <= det - 1
        const long long base = adj(i, 0) * m0 + adj(i, 1) * m1;
        const long long c = adj(i, 2);
        if (c == 0) {
          if (base < 0 || base >= det) empty = true;
        } else if (c > 0) {
          lo2 = std::max(lo2, ceil_div(-base, c));
          hi2 = std::min(hi2, floor_div(det - 1 - base, c));
        } else {
          lo2 = std::max(lo2, ceil_div(det - 1 - base, c));
          hi2 = std::min(hi2, floor_div(-base, c));
        }
      }
      if (empty) continue;
      for (long long m2 = lo2; m2 <= hi2; ++m2) {
        const IVec3 mv(m0, m1, m2);
        const IVec3 num = adj * mv;
        LinearPeriodicPoint p;
        p.numerators = num;
        p.denominator = det;
        p.point = TorusPoint(num.cast<double>() / static_cast<double>(det));
        p.translation = mv;
        out.push_back(p);
      }
    }
  }
  if (static_cast<long long>(out.size()) != det) {
    throw LabError(ErrorCode::InvalidArgument, "periodic enumeration count mismatch");
  }
  return out;
}

std::vector<TorusPoint> periodic_points_linear(const ToralAutomorphism& a, int period,
                                               long long cap) {
  std::vector<TorusPoint> pts;
  for (const auto& p : periodic_seeds_linear(a, period, cap)) pts.push_back(p.point);
  return pts;
}

namespace {

// Lift of f^p with its Jacobian.
std::pair<Vec3, Mat3> lift_power(const DAMap& f, const Vec3& x, int period) {
  Vec3 y = x;
  Mat3 j = Mat3::Identity();
  for (int k = 0; k < period; ++k) {
    j = derivative(f, TorusPoint(y)) * j;
    y = f.lift_forward(y);
  }
  return {y, j};
}

Vec3 exponents_of(const Mat3& jac, int period) {
  Eigen::EigenSolver<Mat3> es(jac, false);
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = std::log(std::abs(es.eigenvalues()[i])) / period;
  return ascending(v);
}

}  // namespace

Vec3 periodic_exponents(const DAMap& f, const TorusPoint& x, int period) {
  return exponents_of(lift_power(f, x.coords(), period).second, period);
}

PeriodicOrbit continue_periodic(const DAMap& f, const TorusPoint& seed_point, int period,
                                const NewtonOptions& opts) {
  if (period < 1) throw LabError(ErrorCode::InvalidArgument, "period must be >= 1");
  const Mat3 ap = integer_power(f.linear_part.matrix, period).cast<double>();
  Vec3 x = seed_point.coords();
  const Vec3 shift = (ap * x - x).array().round();

  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (;; ++it) {
    const auto [y, jac] = lift_power(f, x, period);
    const Vec3 fval = y - x - shift;
    residual = fval.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(residual)) break;
    if (residual < opts.tolerance || it >= opts.max_iterations) break;
    const Mat3 newton = jac - Mat3::Identity();
    x -= newton.partialPivLu().solve(fval);
  }
  if (!(residual < opts.tolerance)) {
    std::ostringstream os;
    os << "residual " << residual << " after " << it << " iterations";
    throw LabError(ErrorCode::NewtonDiverged, os.str());
  }

  PeriodicOrbit orbit;
  orbit.period = period;
  orbit.newton_residual = residual;
  orbit.newton_iterations = it;
  const TorusPoint start(x);
  const auto [y, jac] = lift_power(f, start.coords(), period);
  orbit.translation = (y - start.coords()).array().round().cast<long long>();
  orbit.points.push_back(start);
  for (int k = 1; k < period; ++k) orbit.points.push_back(apply(f, orbit.points.back()));

  Eigen::EigenSolver<Mat3> es(jac, false);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(std::log(std::abs(es.eigenvalues()[i]))) < opts.hyperbolicity_gap) {
      throw LabError(ErrorCode::NonHyperbolicOrbit, "eigenvalue of D(f^p) on the unit circle");
    }
  }
  orbit.exponents = exponents_of(jac, period);
  return orbit;
}

namespace {

struct Seed {
  LinearPeriodicPoint point;
  int period;
};

// Exact test A^d x == x mod Z^3 on numerators modulo the denominator.
bool fixed_by_power(const IMat3& ad, const IVec3& num, long long den) {
  const IVec3 diff = ad * num - num;
  for (int i = 0; i < 3; ++i)
    if (positive_mod(diff[i], den) != 0) return false;
  return true;
}

}  // namespace

PeriodicDataSummary periodic_data_spread(const DAMap& f, int max_period, Execution exec,
                                         long long cap) {
  if (max_period < 1) throw LabError(ErrorCode::InvalidArgument, "max_period must be >= 1");
  const IMat3& a = f.linear_part.matrix;

  std::vector<Seed> seeds;
  for (int p = 1; p <= max_period; ++p) {
    const auto pts = periodic_seeds_linear(f.linear_part, p, cap);
    std::set<std::array<long long, 3>> visited;
    for (const auto& pt : pts) {
      const long long den = pt.denominator;
      bool lower = false;
      for (int d = 1; d < p && !lower; ++d)
        if (p % d == 0 && fixed_by_power(integer_power(a, d), pt.numerators, den)) lower = true;
      if (lower) continue;
      std::array<long long, 3> key{positive_mod(pt.numerators[0], den),
                                   positive_mod(pt.numerators[1], den),
                                   positive_mod(pt.numerators[2], den)};
      if (visited.count(key)) continue;
      seeds.push_back({pt, p});
      IVec3 cur(key[0], key[1], key[2]);
      for (int k = 0; k < p; ++k) {
        visited.insert({positive_mod(cur[0], den), positive_mod(cur[1], den),
                        positive_mod(cur[2], den)});
        cur = a * cur;
      }
    }
  }

  struct Outcome {
    std::optional<PeriodicOrbit> orbit;
    std::string error;
  };
  auto outcomes = indexed_map<Outcome>(
      seeds.size(),
      [&](std::size_t i) {
        Outcome o;
        try {
          o.orbit = continue_periodic(f, seeds[i].point.point, seeds[i].period);
        } catch (const LabError& e) {
          o.error = e.what();
        }
        return o;
      },
      exec);

  PeriodicDataSummary out;
  out.max_period = max_period;
  const Vec3 linear = f.linear_part.log_moduli;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (outcomes[i].orbit) {
      out.orbits.push_back(*outcomes[i].orbit);
      const bool origin = seeds[i].period == 1 && seeds[i].point.numerators.isZero();
      if (origin) out.fixed_point_exponents = outcomes[i].orbit->exponents;
    } else {
      out.failures.push_back({seeds[i].point.point, seeds[i].period, outcomes[i].error});
    }
  }
  if (!out.orbits.empty()) {
    out.min = out.max = out.orbits.front().exponents;
    for (const auto& o : out.orbits) {
      out.min = out.min.cwiseMin(o.exponents);
      out.max = out.max.cwiseMax(o.exponents);
      out.mean += o.exponents;
      out.max_deviation_from_linear =
          out.max_deviation_from_linear.cwiseMax((o.exponents - linear).cwiseAbs());
    }
    out.mean /= static_cast<double>(out.orbits.size());
    out.spread = out.max - out.min;
  }
  return out;
}

}  // namespace dalab
