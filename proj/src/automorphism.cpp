#include "dalab/automorphism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "dalab/errors.hpp"

namespace dalab {

const char* bundle_name(Bundle b) {
  switch (b) {
    case Bundle::s: return "s";
    case Bundle::wu: return "wu";
    case Bundle::su: return "su";
  }
  return "?";
}

Bundle parse_bundle(const std::string& name) {
  if (name == "s") return Bundle::s;
  if (name == "wu") return Bundle::wu;
  if (name == "su") return Bundle::su;
  throw LabError(ErrorCode::InvalidArgument, "unknown bundle '" + name + "'");
}

long long integer_determinant(const IMat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

IMat3 integer_power(const IMat3& m, int p) {
  IMat3 out = IMat3::Identity();
  for (int i = 0; i < p; ++i) out = out * m;
  return out;
}

IMat3 reference_matrix() {
  IMat3 a;
  a << 1, -1, 0, -1, 2, -1, 0, -1, 2;
  return a;
}

namespace {

IMat3 adjugate(const IMat3& m) {
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

void fix_sign(Eigen::Ref<Vec3> v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace

ToralAutomorphism make_linear_map(const IMat3& matrix) {
  const long long det = integer_determinant(matrix);
  if (det != 1 && det != -1) {
    throw LabError(ErrorCode::NotUnimodular, "determinant is " + std::to_string(det));
  }

  ToralAutomorphism a;
  a.matrix = matrix;
  a.inverse = adjugate(matrix) * det;  // det^-1 == det for det = +-1

  Eigen::EigenSolver<Mat3> solver(matrix.cast<double>());
  if (solver.info() != Eigen::Success) {
    throw LabError(ErrorCode::NotPartiallyHyperbolic, "eigen decomposition failed");
  }
  const auto values = solver.eigenvalues();
  const auto vectors = solver.eigenvectors();

  std::array<int, 3> order{0, 1, 2};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(values[i].imag()) > 1e-10 * (1.0 + std::abs(values[i]))) {
      throw LabError(ErrorCode::NotPartiallyHyperbolic, "complex eigenvalue");
    }
  }
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return std::abs(values[i].real()) < std::abs(values[j].real());
  });

  for (int k = 0; k < 3; ++k) {
    const double lam = values[order[k]].real();
    if (std::abs(std::log(std::abs(lam))) < 1e-9) {
      throw LabError(ErrorCode::NotPartiallyHyperbolic, "eigenvalue of unit modulus");
    }
    a.eigenvalues[k] = lam;
    a.log_moduli[k] = std::log(std::abs(lam));
    Vec3 v = vectors.col(order[k]).real();
    v.normalize();
    fix_sign(v);
    a.right_eigenvectors.col(k) = v;
  }
  for (int k = 0; k < 2; ++k) {
    if (a.log_moduli[k + 1] - a.log_moduli[k] < 1e-9) {
      throw LabError(ErrorCode::NotPartiallyHyperbolic, "repeated eigenvalue modulus");
    }
  }
  if (!(a.log_moduli[0] < 0 && a.log_moduli[1] > 0)) {
    throw LabError(ErrorCode::NotPartiallyHyperbolic,
                   "need exactly one contracting and two expanding directions");
  }
  a.left_eigenvectors = a.right_eigenvectors.inverse();
  return a;
}

}  // namespace dalab
