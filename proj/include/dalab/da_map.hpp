#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dalab/automorphism.hpp"

namespace dalab {

/// Coordinate shear y -> y + amplitude * sin(2 pi <wave_vector, y> + phase) * e_axis.
///
/// `axis` is 1-based (1, 2 or 3) and wave_vector[axis] must be zero, which makes
/// the shear exactly invertible with unit Jacobian determinant.
struct ShearSpec {
  int axis = 1;
  IVec3 wave_vector = IVec3::Zero();
  double amplitude = 0.0;
  double phase = 0.0;

  void validate() const;  // throws InvalidShear
  Vec3 forward(const Vec3& y) const;
  Vec3 inverse(const Vec3& y) const;
  /// Left-multiplies `m` by the Jacobian of the shear (or its inverse) at y.
  void push_jacobian(const Vec3& y, Mat3& m, bool inverse_shear) const;
};

enum class ConstructionTag { linear, post_composed, smooth_conjugate };
enum class Direction { forward, inverse };

const char* tag_name(ConstructionTag t);
ConstructionTag parse_tag(const std::string& name);

/// f = (post shears in order) o A o (pre shears in order), volume preserving by construction.
///
/// Amplitudes stored in pre/post shears already include the epsilon scale. The
/// unscaled list and the scale are kept so the map can be serialized back.
struct DAMap {
  ToralAutomorphism linear_part;
  std::vector<ShearSpec> pre_shears;
  std::vector<ShearSpec> post_shears;
  ConstructionTag construction_tag = ConstructionTag::linear;
  std::vector<ShearSpec> source_shears;
  double epsilon_scale = 0.0;

  static DAMap linear(const ToralAutomorphism& a);

  /// Lift evaluation without reduction mod Z^3.
  Vec3 lift_forward(const Vec3& x) const;
  Vec3 lift_inverse(const Vec3& y) const;
  Vec3 lift(const Vec3& x, Direction d) const {
    return d == Direction::forward ? lift_forward(x) : lift_inverse(x);
  }

  /// Z^3-periodic displacement f~(x) - A x.
  Vec3 displacement(const Vec3& x) const { return lift_forward(x) - linear_part.real_matrix() * x; }

  /// Sup bound of |<l, displacement>| for a covector l, exact for shear families.
  double displacement_bound(const Vec3& covector) const;

  bool is_linear() const { return pre_shears.empty() && post_shears.empty(); }
};

/// Builds post_composed (f = g_k o ... o g_1 o A) or smooth_conjugate
/// (f = phi^-1 o A o phi with phi = g_k o ... o g_1) families.
DAMap make_da_map(const ToralAutomorphism& a, const std::vector<ShearSpec>& shears,
                  double epsilon_scale, ConstructionTag mode);

TorusPoint apply(const DAMap& f, const TorusPoint& x, Direction d = Direction::forward);

/// Exact Jacobian of f (or f^-1) at x.
Mat3 derivative(const DAMap& f, const TorusPoint& x, Direction d = Direction::forward);

/// Image point and Jacobian in one pass.
std::pair<TorusPoint, Mat3> apply_with_derivative(const DAMap& f, const TorusPoint& x,
                                                  Direction d = Direction::forward);

/// The conjugating diffeomorphism phi of a smooth_conjugate map, as a lift.
Vec3 conjugator_lift(const DAMap& f, const Vec3& x);
Mat3 conjugator_derivative(const DAMap& f, const Vec3& x);

/// Declarative description of a map, as read from configs and written to reports.
struct MapSpec {
  IMat3 matrix = IMat3::Identity();
  std::vector<ShearSpec> shears;
  double epsilon_scale = 0.0;
  ConstructionTag mode = ConstructionTag::post_composed;
};

DAMap build_map(const MapSpec& spec);
MapSpec describe(const DAMap& f);

/// Reference perturbation: one shear along x1 driven by x2.
std::vector<ShearSpec> reference_shears();

}  // namespace dalab
