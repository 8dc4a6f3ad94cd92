#pragma once

#include <random>
#include <vector>

#include "inverter_doa/linalg.hpp"
#include "inverter_doa/network.hpp"

namespace fixtures {

using namespace idoa;

inline TwoInverterSystem two_gfl(double xg) {
  const double k = 10.0 * kTwoPi;
  return {InverterConfig::gfl(k, 0.8), InverterConfig::gfl(k, 0.4), {0.2, 0.2, xg, 1.0}};
}

// Mid-line fault through 0.02 p.u. on one of two parallel circuits; the faulted circuit is then opened.
inline FaultedSystems two_gfl_line_fault(double xg) {
  FaultSpec spec;
  spec.kind = LineFault{0.5, 0.02};
  spec.post_fault_xg_factor = 2.0;
  return apply_fault(two_gfl(xg), spec);
}

inline TwoInverterSystem gfm_pair_unit(double k = 1.0) {
  return {InverterConfig::gfm(k, 0.0, 1.0), InverterConfig::gfm(k, 0.0, 1.0), {1.0, 1.0, 1.0, 1.0}};
}

// One system per supported pairing, with non-trivial parameters.
inline std::vector<TwoInverterSystem> all_pairings() {
  const NetworkParams net{0.3, 0.2, 0.4, 1.0};
  const auto gfm = InverterConfig::gfm(15.0, 0.5, 1.05);
  const auto gfm_b = InverterConfig::gfm(12.0, 0.3, 0.98);
  const auto gfl = InverterConfig::gfl(40.0, 0.7);
  const auto gfl_b = InverterConfig::gfl(30.0, 0.4);
  const auto gsp = InverterConfig::gsp(35.0, 0.3, 2.0, 1.0);
  return {
      {gfm, gfm_b, net}, {gfm, gfl, net}, {gfl, gfm, net}, {gfm, gsp, net},
      {gsp, gfm, net},   {gfl, gfl_b, net}, {gfl, gsp, net}, {gsp, gfl, net},
  };
}

inline std::vector<State2> random_states(std::size_t n, unsigned seed, double half_width = 3.5) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-half_width, half_width);
  std::vector<State2> out(n);
  for (auto& s : out) s = {u(rng), u(rng)};
  return out;
}

}  // namespace fixtures
