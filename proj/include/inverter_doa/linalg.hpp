#pragma once

// Small fixed-size vector/matrix helpers for the planar analysis.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

namespace idoa {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <std::size_t N>
using Vec = std::array<double, N>;

/// Angle pair (delta1, delta2) in radians.
using State2 = Vec<2>;
/// (delta1, z1, delta2, z2): angles plus PLL integral states.
using State4 = Vec<4>;

template <std::size_t N>
constexpr Vec<N> operator+(const Vec<N>& a, const Vec<N>& b) {
  Vec<N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t N>
constexpr Vec<N> operator-(const Vec<N>& a, const Vec<N>& b) {
  Vec<N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t N>
constexpr Vec<N> operator*(double s, const Vec<N>& a) {
  Vec<N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
  return r;
}

template <std::size_t N>
double norm2(const Vec<N>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

template <std::size_t N>
double norm_inf(const Vec<N>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double distance(const State2& a, const State2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

inline double dot(const State2& a, const State2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a + std::numbers::pi, kTwoPi);
  if (r < 0) r += kTwoPi;
  return r - std::numbers::pi;
}

/// Row-major 2x2 matrix.
struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  [[nodiscard]] double trace() const { return a11 + a22; }
  [[nodiscard]] double det() const { return a11 * a22 - a12 * a21; }
  [[nodiscard]] Mat2 transpose() const { return {a11, a21, a12, a22}; }
  [[nodiscard]] State2 operator*(const State2& v) const { return {a11 * v[0] + a12 * v[1], a21 * v[0] + a22 * v[1]}; }
  [[nodiscard]] Mat2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }
};

inline Mat2 operator*(double s, const Mat2& m) { return {s * m.a11, s * m.a12, s * m.a21, s * m.a22}; }

/// Solves m * x = b by Cramer's rule; caller guarantees det != 0.
inline State2 solve(const Mat2& m, const State2& b) {
  const double d = m.det();
  return {(b[0] * m.a22 - m.a12 * b[1]) / d, (m.a11 * b[1] - m.a21 * b[0]) / d};
}

struct Eigen2 {
  std::array<std::complex<double>, 2> values;
  /// Unit eigenvectors (real part for complex pairs, which are not used downstream).
  std::array<State2, 2> vectors;
};

/// Closed-form eigen-decomposition, eigenvalues sorted by ascending real part.
Eigen2 eigen(const Mat2& m);

}  // namespace idoa
