#pragma once

#include <array>

#include "dalab/torus.hpp"

namespace dalab {

/// Index of an invariant bundle. Ordering matches ascending exponent.
enum class Bundle { s = 0, wu = 1, su = 2 };

inline constexpr std::array<Bundle, 3> kAllBundles{Bundle::s, Bundle::wu, Bundle::su};

const char* bundle_name(Bundle b);
Bundle parse_bundle(const std::string& name);

/// Integer unimodular matrix together with its real spectral data.
///
/// Eigen-quantities are indexed by Bundle: column/row 0 is the stable
/// direction, 1 the weak unstable, 2 the strong unstable.
struct ToralAutomorphism {
  IMat3 matrix;
  IMat3 inverse;             // integer inverse, exact since |det| = 1
  Vec3 eigenvalues;          // signed, ordered by modulus ascending
  Mat3 right_eigenvectors;   // unit columns, first nonzero component positive
  Mat3 left_eigenvectors;    // rows; left * right == identity
  Vec3 log_moduli;           // (lambda_s, lambda_wu, lambda_su)

  Mat3 real_matrix() const { return matrix.cast<double>(); }
  Mat3 real_inverse() const { return inverse.cast<double>(); }
  Vec3 right(Bundle b) const { return right_eigenvectors.col(static_cast<int>(b)); }
  Vec3 left(Bundle b) const { return left_eigenvectors.row(static_cast<int>(b)).transpose(); }
  double eigenvalue(Bundle b) const { return eigenvalues[static_cast<int>(b)]; }
  double log_modulus(Bundle b) const { return log_moduli[static_cast<int>(b)]; }
};

/// Validates the matrix and computes its splitting E^s + E^wu + E^su.
/// Throws NotUnimodular or NotPartiallyHyperbolic.
ToralAutomorphism make_linear_map(const IMat3& matrix);

long long integer_determinant(const IMat3& m);
IMat3 integer_power(const IMat3& m, int p);

/// The reference automorphism [[1,-1,0],[-1,2,-1],[0,-1,2]], char. poly x^3 - 5x^2 + 6x - 1.
IMat3 reference_matrix();

}  // namespace dalab
