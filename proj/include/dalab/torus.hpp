#pragma once

#include <Eigen/Dense>

namespace dalab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using IMat3 = Eigen::Matrix<long long, 3, 3>;
using IVec3 = Eigen::Matrix<long long, 3, 1>;

/// A point of T^3 stored as its canonical representative in [0,1)^3.
class TorusPoint {
 public:
  TorusPoint() : coords_(Vec3::Zero()) {}
  explicit TorusPoint(const Vec3& lift) : coords_(wrap(lift)) {}
  TorusPoint(double x, double y, double z) : TorusPoint(Vec3(x, y, z)) {}

  const Vec3& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

  /// Reduces each coordinate to [0,1). Values that round up to 1 are mapped to 0.
  static Vec3 wrap(const Vec3& lift);

 private:
  Vec3 coords_;
};

/// Shortest lift of y - x, each component in [-1/2, 1/2].
Vec3 nearest_difference(const TorusPoint& x, const TorusPoint& y);

/// Euclidean distance between nearest lifts; at most sqrt(3)/2.
double torus_distance(const TorusPoint& x, const TorusPoint& y);

}  // namespace dalab
