#include <doctest.h>

#include "inverter_doa/linalg.hpp"

using namespace idoa;

namespace {

void check_pair(const Mat2& m, const Eigen2& e, int i) {
  const double l = e.values[i].real();
  const auto v = e.vectors[i];
  const auto mv = m * v;
  CHECK(mv[0] == doctest::Approx(l * v[0]).epsilon(1e-12));
  CHECK(mv[1] == doctest::Approx(l * v[1]).epsilon(1e-12));
  CHECK(std::hypot(v[0], v[1]) == doctest::Approx(1.0));
}

}  // namespace

TEST_CASE("eigen: real distinct eigenvalues sorted ascending") {
  const Mat2 m{-2.0, 1.0, 1.0, -2.0};
  const auto e = eigen(m);
  CHECK(e.values[0].real() == doctest::Approx(-3.0));
  CHECK(e.values[1].real() == doctest::Approx(-1.0));
  check_pair(m, e, 0);
  check_pair(m, e, 1);
}

TEST_CASE("eigen: saddle") {
  const Mat2 m{0.3, 4.0, 2.0, -1.7};
  const auto e = eigen(m);
  CHECK(e.values[0].real() < 0.0);
  CHECK(e.values[1].real() > 0.0);
  CHECK(e.values[0].real() + e.values[1].real() == doctest::Approx(m.trace()));
  CHECK(e.values[0].real() * e.values[1].real() == doctest::Approx(m.det()));
  check_pair(m, e, 0);
  check_pair(m, e, 1);
}

TEST_CASE("eigen: diagonal and complex") {
  const auto d = eigen(Mat2{5.0, 0.0, 0.0, -1.0});
  CHECK(d.values[0].real() == doctest::Approx(-1.0));
  CHECK(std::abs(d.vectors[0][1]) == doctest::Approx(1.0));
  CHECK(std::abs(d.vectors[1][0]) == doctest::Approx(1.0));

  const auto c = eigen(Mat2{-1.0, -2.0, 2.0, -1.0});
  CHECK(c.values[0].real() == doctest::Approx(-1.0));
  CHECK(std::abs(c.values[0].imag()) == doctest::Approx(2.0));
}

TEST_CASE("wrap_angle and solve") {
  CHECK(wrap_angle(3.0 * std::numbers::pi) == doctest::Approx(-std::numbers::pi));
  CHECK(wrap_angle(-0.5) == doctest::Approx(-0.5));
  CHECK(wrap_angle(kTwoPi + 0.25) == doctest::Approx(0.25));
  const Mat2 m{2.0, 1.0, 1.0, 3.0};
  const auto x = solve(m, {3.0, 5.0});
  CHECK(x[0] == doctest::Approx(0.8));
  CHECK(x[1] == doctest::Approx(1.4));
}
