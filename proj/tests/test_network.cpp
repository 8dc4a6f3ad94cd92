#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "inverter_doa/error.hpp"
#include "inverter_doa/network.hpp"

using namespace idoa;

TEST_CASE("derive_impedances examples") {
  const auto d = derive_impedances({0.2, 0.2, 0.35, 1.0});
  CHECK(d.x_d12 == doctest::Approx(0.5142857).epsilon(1e-7));
  CHECK(d.x_1sum == doctest::Approx(0.55));
  CHECK(d.x_2sum == doctest::Approx(0.55));

  const auto u = derive_impedances({1.0, 1.0, 1.0, 1.0});
  CHECK(u.x_d12 == doctest::Approx(3.0));
  CHECK(u.x_dg1 == doctest::Approx(3.0));
  CHECK(u.x_dg2 == doctest::Approx(3.0));
  CHECK(u.x_1sum == doctest::Approx(2.0));
  CHECK(u.x_1p2g == doctest::Approx(1.5));
  CHECK(u.x_2p1g == doctest::Approx(1.5));

  CHECK(derive_impedances({0.5, 0.1, 0.3, 1.0}).x_1p2g == doctest::Approx(0.575));
}

TEST_CASE("derive_impedances rejects non-positive reactance") {
  CHECK_THROWS_AS(derive_impedances({0.0, 0.1, 0.3, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(derive_impedances({0.1, 0.1, -0.3, 1.0}), InvalidArgument);
}

TEST_CASE("impedance identity on random reactances") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int i = 0; i < 200; ++i) {
    const NetworkParams n{u(rng), u(rng), u(rng), 1.0};
    const auto d = derive_impedances(n);
    const double ref = n.x1 * n.x2 + n.x1 * n.xg + n.x2 * n.xg;
    CHECK(std::abs(d.x_d12 * n.xg - ref) <= 1e-12 * ref);
    CHECK(std::abs(d.x_dg1 * n.x2 - ref) <= 1e-12 * ref);
    CHECK(std::abs(d.x_dg2 * n.x1 - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("to_generalized: two GFL with Table A1 values") {
  const auto c = to_generalized(fixtures::two_gfl(0.35));
  CHECK(c.k1 == doctest::Approx(62.83).epsilon(1e-4));
  CHECK(c.k2 == doctest::Approx(62.83).epsilon(1e-4));
  CHECK(c.b1 == doctest::Approx(1.0));
  CHECK(c.b2 == doctest::Approx(1.0));
  CHECK(c.c1 == doctest::Approx(0.44));
  CHECK(c.d1 == doctest::Approx(0.14));
  CHECK(c.c2 == doctest::Approx(0.22));
  CHECK(c.d2 == doctest::Approx(0.28));
  CHECK(c.a1 == 0.0);
  CHECK(c.a2 == 0.0);
}

TEST_CASE("to_generalized: symmetric GFM pair") {
  const auto c = to_generalized(fixtures::gfm_pair_unit());
  CHECK(c.a1 == doctest::Approx(1.0 / 3.0));
  CHECK(c.a2 == doctest::Approx(1.0 / 3.0));
  CHECK(c.b1 == doctest::Approx(1.0 / 3.0));
  CHECK(c.b2 == doctest::Approx(1.0 / 3.0));
  CHECK(c.c1 == 0.0);
  CHECK(c.d1 == 0.0);
  CHECK(c.d2 == 0.0);
}

TEST_CASE("to_generalized: GSP without droop equals GFL") {
  const NetworkParams net{0.5, 0.15, 0.3, 1.0};
  const auto gfl = InverterConfig::gfl(15.7, 1.0);
  const auto a = to_generalized({gfl, InverterConfig::gsp(20.0, 0.6, 0.0), net});
  const auto b = to_generalized({gfl, InverterConfig::gfl(20.0, 0.6), net});
  CHECK(a.a1 == b.a1);
  CHECK(a.b1 == b.b1);
  CHECK(a.c1 == b.c1);
  CHECK(a.d1 == b.d1);
  CHECK(a.a2 == b.a2);
  CHECK(a.c2 == b.c2);
  CHECK(a.d2 == b.d2);
}

TEST_CASE("to_generalized: GFL next to a GFM uses the partner-source row") {
  const NetworkParams net{0.5, 0.1, 0.3, 1.0};
  const auto c = to_generalized({InverterConfig::gfl(10.0, 1.0), InverterConfig::gfm(8.0, 0.6, 1.0), net});
  // GFL slot: a = xg V2 / X2sum, b = x2 ug / X2sum, c = X_{1+2//g} I1d
  CHECK(c.a1 == doctest::Approx(0.3 / 0.4));
  CHECK(c.b1 == doctest::Approx(0.1 / 0.4));
  CHECK(c.c1 == doctest::Approx(0.575));
  CHECK(c.d1 == 0.0);
  // GFM slot: b = ug V / X2sum, d = xg I1d V / X2sum
  CHECK(c.a2 == 0.0);
  CHECK(c.b2 == doctest::Approx(1.0 / 0.4));
  CHECK(c.c2 == doctest::Approx(0.6));
  CHECK(c.d2 == doctest::Approx(0.3 / 0.4));
}

TEST_CASE("GSP-GSP is rejected") {
  const TwoInverterSystem s{InverterConfig::gsp(10, 0.5, 1.0), InverterConfig::gsp(10, 0.5, 1.0), {0.2, 0.2, 0.3, 1.0}};
  CHECK_THROWS_AS(to_generalized(s), UnsupportedCombination);
}

TEST_CASE("inverter invariants") {
  CHECK_THROWS_AS(InverterConfig::gfm(10.0, 0.5, 0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(InverterConfig::gsp(10.0, 0.5, -1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(InverterConfig::gsp(10.0, 0.5, 1.0, 0.0).validate(), InvalidArgument);
  CHECK_NOTHROW(InverterConfig::gsp(10.0, 0.5, 0.0).validate());
  CHECK(inverter_kind_from_string("GSP") == InverterKind::GSP);
  CHECK_THROWS_AS(inverter_kind_from_string("SG"), InvalidArgument);
}

TEST_CASE("apply_fault: voltage sag") {
  const auto sys = fixtures::two_gfl(0.35);
  FaultSpec spec;
  spec.kind = VoltageSag{0.1};
  const auto f = apply_fault(sys, spec);
  CHECK(f.fault_on.network.ug == doctest::Approx(0.1));
  CHECK(f.fault_on.network.xg == sys.network.xg);
  CHECK(f.fault_on.network.x1 == sys.network.x1);
  CHECK(f.post_fault.network.ug == sys.network.ug);
  CHECK(f.post_fault.network.xg == sys.network.xg);

  spec.kind = VoltageSag{1.5};
  CHECK_THROWS_AS(apply_fault(sys, spec), InvalidArgument);
}

TEST_CASE("apply_fault: open fault branch restores parallel circuits") {
  const auto sys = fixtures::two_gfl(0.35);
  FaultSpec spec;
  spec.kind = LineFault{0.0, 1e9};
  const auto f = apply_fault(sys, spec);
  CHECK(f.fault_on.network.ug == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.fault_on.network.xg == doctest::Approx(0.35).epsilon(1e-6));
}

namespace {

// Nodal analysis of {grid G, bus C, fault point F}: unknown voltages at C and F.
TheveninEquivalent nodal_oracle(double ug, double xg, double pos, double rf, double factor) {
  using C = std::complex<double>;
  const C za{0.0, factor * xg};
  const C z_gf{0.0, factor * xg * pos};
  const C z_fc{0.0, factor * xg * (1.0 - pos)};
  const C y11 = 1.0 / za + 1.0 / z_fc;
  const C y12 = -1.0 / z_fc;
  const C y22 = 1.0 / z_fc + 1.0 / z_gf + 1.0 / C{rf, 0.0};
  const C i1 = ug / za;
  const C i2 = ug / z_gf;
  const C det = y11 * y22 - y12 * y12;
  return {(i1 * y22 - y12 * i2) / det, y22 / det};
}

}  // namespace

TEST_CASE("line_fault_thevenin matches a nodal solution") {
  for (double pos : {0.1, 0.5, 0.8}) {
    for (double rf : {0.001, 0.02, 0.5}) {
      for (double xg : {0.3, 0.35, 0.4}) {
        const auto th = line_fault_thevenin({0.2, 0.2, xg, 1.0}, {pos, rf}, 2.0);
        const auto ref = nodal_oracle(1.0, xg, pos, rf, 2.0);
        CHECK(std::abs(th.voltage - ref.voltage) < 1e-12);
        CHECK(std::abs(th.impedance - ref.impedance) < 1e-12);
      }
    }
  }
}

TEST_CASE("apply_fault: Table A1 mid-line fault") {
  const auto sys = fixtures::two_gfl(0.35);
  FaultSpec spec;
  spec.kind = LineFault{0.5, 0.02};
  const auto f = apply_fault(sys, spec);
  const auto ref = nodal_oracle(1.0, 0.35, 0.5, 0.02, 2.0);
  CHECK(f.fault_on.network.ug == doctest::Approx(std::abs(ref.voltage)).epsilon(1e-12));
  CHECK(f.fault_on.network.xg == doctest::Approx(ref.impedance.imag()).epsilon(1e-12));
  CHECK(f.fault_on.network.ug < 0.5);
  CHECK(f.fault_on.network.xg < 0.35);
  CHECK(f.post_fault.network.xg == doctest::Approx(0.7));
}

TEST_CASE("post-fault network ignores fault location and resistance") {
  const auto sys = fixtures::two_gfl(0.4);
  FaultSpec a;
  a.kind = LineFault{0.2, 0.01};
  FaultSpec b;
  b.kind = LineFault{0.9, 0.3};
  CHECK(apply_fault(sys, a).post_fault.network.xg == apply_fault(sys, b).post_fault.network.xg);
  a.post_fault_xg_factor = 3.0;
  CHECK(apply_fault(sys, a).post_fault.network.xg == doctest::Approx(1.2));
}

TEST_CASE("fault spec validation") {
  const auto sys = fixtures::two_gfl(0.35);
  FaultSpec spec;
  spec.kind = LineFault{1.2, 0.02};
  CHECK_THROWS_AS(apply_fault(sys, spec), InvalidArgument);
  spec.kind = LineFault{0.5, 0.0};
  CHECK_THROWS_AS(apply_fault(sys, spec), InvalidArgument);
}

TEST_CASE("bolted fault next to the common bus is degenerate") {
  const auto sys = fixtures::two_gfl(0.35);
  FaultSpec spec;
  spec.kind = LineFault{1.0, 1e-12};
  CHECK_THROWS_AS(apply_fault(sys, spec), DegenerateFault);
}
