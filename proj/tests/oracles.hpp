#pragma once

// Reference computations that do not go through the library code paths under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "dalab/da_map.hpp"
#include "dalab/torus.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

using M3 = std::array<std::array<long long, 3>, 3>;

inline const M3 kA7{{{1, -1, 0}, {-1, 2, -1}, {0, -1, 2}}};

inline dalab::IMat3 to_imat(const M3& m) {
  dalab::IMat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j];
  }
  return out;
}

// Cofactor expansion along the first row.
inline long long det3(const M3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

inline M3 power_minus_identity(const M3& a, int p) {
  M3 r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int i = 0; i < p; ++i) r = mul(r, a);
  for (int i = 0; i < 3; ++i) r[i][i] -= 1;
  return r;
}

// Roots of t^3 - 5t^2 + 6t - 1 by bisection on sign-change brackets.
inline std::array<double, 3> a7_roots() {
  auto p = [](double t) { return ((t - 5) * t + 6) * t - 1; };
  auto bisect = [&](double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((p(lo) < 0) == (p(mid) < 0)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  return {bisect(0.0, 0.5), bisect(1.0, 2.0), bisect(3.0, 4.0)};
}

// Closed form 4 cos^2(k pi / 7), k = 3, 2, 1 ascending.
inline std::array<double, 3> a7_trig_roots() {
  return {4 * std::pow(std::cos(3 * kPi / 7), 2), 4 * std::pow(std::cos(2 * kPi / 7), 2),
          4 * std::pow(std::cos(kPi / 7), 2)};
}

inline std::array<double, 3> a7_log_moduli() {
  auto r = a7_roots();
  return {std::log(r[0]), std::log(r[1]), std::log(r[2])};
}

// Central-difference Jacobian of a lift.
inline dalab::Mat3 fd_jacobian(const std::function<dalab::Vec3(const dalab::Vec3&)>& lift, const dalab::Vec3& x,
                               double h = 1e-6) {
  dalab::Mat3 j;
  for (int c = 0; c < 3; ++c) {
    dalab::Vec3 e = dalab::Vec3::Zero();
    e[c] = h;
    j.col(c) = (lift(x + e) - lift(x - e)) / (2 * h);
  }
  return j;
}

// The reference shear g(y) = y + a sin(2 pi y2) e1 written out by hand.
inline dalab::Vec3 reference_shear(const dalab::Vec3& y, double a) {
  return {y[0] + a * std::sin(2 * kPi * y[1]), y[1], y[2]};
}

inline dalab::Vec3 reference_shear_inverse(const dalab::Vec3& y, double a) {
  return {y[0] - a * std::sin(2 * kPi * y[1]), y[1], y[2]};
}

inline dalab::Mat3 reference_shear_jacobian(const dalab::Vec3& y, double a) {
  dalab::Mat3 j = dalab::Mat3::Identity();
  j(0, 1) = 2 * kPi * a * std::cos(2 * kPi * y[1]);
  return j;
}

inline dalab::Mat3 a7_real() {
  dalab::Mat3 m;
  m << 1, -1, 0, -1, 2, -1, 0, -1, 2;
  return m;
}

// Unit eigenvector of the symmetric matrix A7 for eigenvalue mu, by inverse iteration.
inline dalab::Vec3 a7_eigenvector(double mu) {
  const dalab::Mat3 shifted = a7_real() - (mu + 1e-9) * dalab::Mat3::Identity();
  dalab::Vec3 v(1.0, 0.3, 0.7);
  for (int i = 0; i < 8; ++i) v = shifted.fullPivLu().solve(v).normalized();
  return v;
}

// Smallest reduced angle between two lines.
inline double line_angle(const dalab::Vec3& a, const dalab::Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

// Closed-form wu density of phi^-1 A phi at x, up to a constant: the arclength
// distortion of phi along the leaf, |D phi(x) t| with t the unit leaf tangent,
// which equals 1 / |D phi(x)^-1 e_wu| for the leaf of A through phi(x).
inline double smooth_density(double a, const dalab::Vec3& x, const dalab::Vec3& e_wu) {
  const dalab::Mat3 dphi = reference_shear_jacobian(x, a);
  return 1.0 / (dphi.inverse() * e_wu).norm();
}

inline double trapezoid(const std::vector<double>& s, const std::vector<double>& v) {
  double t = 0;
  for (std::size_t i = 1; i < s.size(); ++i) t += 0.5 * (v[i] + v[i - 1]) * (s[i] - s[i - 1]);
  return t;
}

}  // namespace oracle
