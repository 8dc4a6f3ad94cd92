#include "inverter_doa/linalg.hpp"

#include <algorithm>

namespace idoa {

namespace {

State2 unit(const State2& v) {
  const double n = std::hypot(v[0], v[1]);
  return {v[0] / n, v[1] / n};
}

// Null vector of (m - lambda I) for a real eigenvalue.
State2 eigenvector(const Mat2& m, double lambda, int fallback_axis) {
  const State2 r1{m.a12, lambda - m.a11};
  const State2 r2{lambda - m.a22, m.a21};
  const double n1 = std::hypot(r1[0], r1[1]);
  const double n2 = std::hypot(r2[0], r2[1]);
  const double scale = std::max({std::abs(m.a11), std::abs(m.a12), std::abs(m.a21), std::abs(m.a22), 1e-300});
  if (std::max(n1, n2) <= 1e-14 * scale) return fallback_axis == 0 ? State2{1.0, 0.0} : State2{0.0, 1.0};
  return unit(n1 >= n2 ? r1 : r2);
}

}  // namespace

Eigen2 eigen(const Mat2& m) {
  const double half_tr = 0.5 * m.trace();
  const double disc = half_tr * half_tr - m.det();
  Eigen2 e;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Avoid cancellation for the smaller-magnitude root.
    const double big = half_tr >= 0.0 ? half_tr + s : half_tr - s;
    const double small = big != 0.0 ? m.det() / big : 0.0;
    double l1 = std::min(big, small);
    double l2 = std::max(big, small);
    e.values = {std::complex<double>(l1, 0.0), std::complex<double>(l2, 0.0)};
    e.vectors[0] = eigenvector(m, l1, 0);
    e.vectors[1] = eigenvector(m, l2, 1);
    if (l1 == l2 || std::abs(e.vectors[0][0] * e.vectors[1][1] - e.vectors[0][1] * e.vectors[1][0]) < 1e-14) {
      // Repeated eigenvalue: pick an orthogonal complement for the second slot.
      e.vectors[1] = {-e.vectors[0][1], e.vectors[0][0]};
    }
    return e;
  }
  const double im = std::sqrt(-disc);
  e.values = {std::complex<double>(half_tr, -im), std::complex<double>(half_tr, im)};
  // Real part of the complex eigenvector (a12, lambda - a11).
  const State2 re_part{m.a12, half_tr - m.a11};
  const double n = std::hypot(re_part[0], re_part[1]);
  e.vectors[0] = n > 0.0 ? unit(re_part) : State2{1.0, 0.0};
  e.vectors[1] = {-e.vectors[0][1], e.vectors[0][0]};
  return e;
}

}  // namespace idoa
