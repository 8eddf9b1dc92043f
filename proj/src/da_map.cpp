#include "dalab/da_map.hpp"

#include <cmath>
#include <numbers>

#include "dalab/errors.hpp"

namespace dalab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void ShearSpec::validate() const {
  if (axis < 1 || axis > 3) {
    throw LabError(ErrorCode::InvalidShear, "axis must be 1, 2 or 3");
  }
  if (wave_vector[axis - 1] != 0) {
    throw LabError(ErrorCode::InvalidShear, "wave vector has a nonzero component on its own axis");
  }
  if (!std::isfinite(amplitude) || !std::isfinite(phase)) {
    throw LabError(ErrorCode::InvalidShear, "non-finite amplitude or phase");
  }
}

Vec3 ShearSpec::forward(const Vec3& y) const {
  Vec3 out = y;
  out[axis - 1] += amplitude * std::sin(kTwoPi * wave_vector.cast<double>().dot(y) + phase);
  return out;
}

Vec3 ShearSpec::inverse(const Vec3& y) const {
  Vec3 out = y;
  out[axis - 1] -= amplitude * std::sin(kTwoPi * wave_vector.cast<double>().dot(y) + phase);
  return out;
}

void ShearSpec::push_jacobian(const Vec3& y, Mat3& m, bool inverse_shear) const {
  const Vec3 k = wave_vector.cast<double>();
  double c = amplitude * kTwoPi * std::cos(kTwoPi * k.dot(y) + phase);
  if (inverse_shear) c = -c;
  // (I + c e_a k^T) m only changes row a.
  const Eigen::RowVector3d kt_m = k.transpose() * m;
  m.row(axis - 1) += c * kt_m;
}

const char* tag_name(ConstructionTag t) {
  switch (t) {
    case ConstructionTag::linear: return "linear";
    case ConstructionTag::post_composed: return "post_composed";
    case ConstructionTag::smooth_conjugate: return "smooth_conjugate";
  }
  return "?";
}

ConstructionTag parse_tag(const std::string& name) {
  if (name == "linear") return ConstructionTag::linear;
  if (name == "post_composed") return ConstructionTag::post_composed;
  if (name == "smooth_conjugate") return ConstructionTag::smooth_conjugate;
  throw LabError(ErrorCode::InvalidArgument, "unknown construction mode '" + name + "'");
}

DAMap DAMap::linear(const ToralAutomorphism& a) {
  DAMap f;
  f.linear_part = a;
  f.construction_tag = ConstructionTag::linear;
  return f;
}

Vec3 DAMap::lift_forward(const Vec3& x) const {
  Vec3 y = x;
  for (const auto& g : pre_shears) y = g.forward(y);
  y = linear_part.real_matrix() * y;
  for (const auto& g : post_shears) y = g.forward(y);
  return y;
}

Vec3 DAMap::lift_inverse(const Vec3& y) const {
  Vec3 x = y;
  for (auto it = post_shears.rbegin(); it != post_shears.rend(); ++it) x = it->inverse(x);
  x = linear_part.real_inverse() * x;
  for (auto it = pre_shears.rbegin(); it != pre_shears.rend(); ++it) x = it->inverse(x);
  return x;
}

double DAMap::displacement_bound(const Vec3& covector) const {
  // f~(x) - Ax = A d_pre(x) + d_post(Ax + A d_pre(x)); each shear moves one coordinate
  // by at most |amplitude|.
  const Vec3 pulled = linear_part.real_matrix().transpose() * covector;
  double bound = 0.0;
  for (const auto& g : pre_shears) bound += std::abs(g.amplitude) * std::abs(pulled[g.axis - 1]);
  for (const auto& g : post_shears) bound += std::abs(g.amplitude) * std::abs(covector[g.axis - 1]);
  return bound;
}

DAMap make_da_map(const ToralAutomorphism& a, const std::vector<ShearSpec>& shears,
                  double epsilon_scale, ConstructionTag mode) {
  if (!(epsilon_scale >= 0.0) || !std::isfinite(epsilon_scale)) {
    throw LabError(ErrorCode::InvalidArgument, "epsilon scale must be finite and >= 0");
  }
  DAMap f;
  f.linear_part = a;
  f.construction_tag = mode;
  f.source_shears = shears;
  f.epsilon_scale = epsilon_scale;
  for (const auto& g : shears) g.validate();
  if (mode == ConstructionTag::linear) {
    if (!shears.empty() && epsilon_scale != 0.0) {
      throw LabError(ErrorCode::InvalidArgument, "linear mode takes no perturbation");
    }
    return f;
  }

  std::vector<ShearSpec> scaled = shears;
  for (auto& g : scaled) g.amplitude *= epsilon_scale;
  if (mode == ConstructionTag::post_composed) {
    f.post_shears = scaled;
  } else {
    f.pre_shears = scaled;
    for (auto it = scaled.rbegin(); it != scaled.rend(); ++it) {
      ShearSpec inv = *it;
      inv.amplitude = -inv.amplitude;
      f.post_shears.push_back(inv);
    }
  }
  return f;
}

TorusPoint apply(const DAMap& f, const TorusPoint& x, Direction d) {
  return TorusPoint(f.lift(x.coords(), d));
}

std::pair<TorusPoint, Mat3> apply_with_derivative(const DAMap& f, const TorusPoint& x, Direction d) {
  Mat3 m = Mat3::Identity();
  Vec3 y = x.coords();
  if (d == Direction::forward) {
    for (const auto& g : f.pre_shears) {
      g.push_jacobian(y, m, false);
      y = g.forward(y);
    }
    y = f.linear_part.real_matrix() * y;
    m = f.linear_part.real_matrix() * m;
    for (const auto& g : f.post_shears) {
      g.push_jacobian(y, m, false);
      y = g.forward(y);
    }
  } else {
    for (auto it = f.post_shears.rbegin(); it != f.post_shears.rend(); ++it) {
      it->push_jacobian(y, m, true);
      y = it->inverse(y);
    }
    y = f.linear_part.real_inverse() * y;
    m = f.linear_part.real_inverse() * m;
    for (auto it = f.pre_shears.rbegin(); it != f.pre_shears.rend(); ++it) {
      it->push_jacobian(y, m, true);
      y = it->inverse(y);
    }
  }
  return {TorusPoint(y), m};
}

Mat3 derivative(const DAMap& f, const TorusPoint& x, Direction d) {
  return apply_with_derivative(f, x, d).second;
}

Vec3 conjugator_lift(const DAMap& f, const Vec3& x) {
  Vec3 y = x;
  for (const auto& g : f.pre_shears) y = g.forward(y);
  return y;
}

Mat3 conjugator_derivative(const DAMap& f, const Vec3& x) {
  Mat3 m = Mat3::Identity();
  Vec3 y = x;
  for (const auto& g : f.pre_shears) {
    g.push_jacobian(y, m, false);
    y = g.forward(y);
  }
  return m;
}

std::vector<ShearSpec> reference_shears() {
  ShearSpec g;
  g.axis = 1;
  g.wave_vector = IVec3(0, 1, 0);
  g.amplitude = 1.0;
  g.phase = 0.0;
  return {g};
}

DAMap build_map(const MapSpec& spec) {
  return make_da_map(make_linear_map(spec.matrix), spec.shears, spec.epsilon_scale, spec.mode);
}

MapSpec describe(const DAMap& f) {
  return {f.linear_part.matrix, f.source_shears, f.epsilon_scale, f.construction_tag};
}

}  // namespace dalab
