#pragma once

// Right-hand sides of the two-inverter system and trajectory helpers.
//
// Exact mode solves the lossless phasor network for the given angles: GFM
// slots are voltage sources behind their line reactance, GFL/GSP slots are
// current sources, and a GSP's q-axis current follows the algebraic voltage
// droop. Generalized mode evaluates the sinusoidal coefficient form.
// FullOrder adds the PLL integral states.

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inverter_doa/integrator.hpp"
#include "inverter_doa/linalg.hpp"
#include "inverter_doa/network.hpp"

namespace idoa {

enum class RhsMode { Exact, Generalized, FullOrder };

std::string to_string(RhsMode mode);
RhsMode rhs_mode_from_string(const std::string& s);

struct ExactOptions {
  /// Treat a voltage-supporting GSP as an ideal V_ref source towards its partner
  /// (droop error -> 0, own q-axis voltage -> 0 in the partner's view).
  bool ideal_voltage_support = false;
};

/// Per-slot synchronizing signal: V_q for PLL slots, P_ref - P for GFM slots.
std::array<double, 2> sync_signals(const TwoInverterSystem& sys, const State2& x, const ExactOptions& opt = {});

/// Reactive (q-axis) current of each slot for the given angles (zero except for GSP with m_q > 0).
std::array<double, 2> q_currents(const TwoInverterSystem& sys, const State2& x);

State2 rhs_exact(const TwoInverterSystem& sys, const State2& x, const ExactOptions& opt = {});
State2 rhs_generalized(const GeneralizedCoefficients& c, const State2& x);
/// PI-PLL model: delta' = k_pll V_q + k_i z, z' = V_q. GFM slots carry z' = 0.
State4 rhs_full(const TwoInverterSystem& sys, const State4& x);

/// Analytic Jacobians. The exact one is obtained by forward-mode differentiation
/// of the phasor solution.
Mat2 jacobian_exact(const TwoInverterSystem& sys, const State2& x, const ExactOptions& opt = {});
Mat2 jacobian_generalized(const GeneralizedCoefficients& c, const State2& x);

/// Planar vector field bound to a system and a 2-D mode.
class PlanarField {
 public:
  PlanarField(TwoInverterSystem sys, RhsMode mode, ExactOptions opt = {});
  /// Generalized-mode field on raw coefficients (no physical system behind it).
  explicit PlanarField(const GeneralizedCoefficients& coeffs);

  State2 operator()(const State2& x) const;
  [[nodiscard]] Mat2 jacobian(const State2& x) const;
  [[nodiscard]] RhsMode mode() const { return mode_; }
  [[nodiscard]] const TwoInverterSystem& system() const { return sys_; }
  [[nodiscard]] const GeneralizedCoefficients& coefficients() const { return coeffs_; }
  [[nodiscard]] double max_gain() const;

 private:
  TwoInverterSystem sys_;
  RhsMode mode_;
  ExactOptions opt_;
  GeneralizedCoefficients coeffs_;
};

/// Lifts a planar state to the full-order state with zero integrator states.
State4 lift(const State2& x);
State2 project(const State4& x);

Trajectory<2> integrate_system(const TwoInverterSystem& sys, RhsMode mode, const State2& x0,
                               const IntegratorSettings& settings, Direction direction = Direction::Forward,
                               const std::vector<Event<2>>& events = {});

struct FullOrderComparison {
  double max_deviation = 0.0;  // rad, max over both angles and all compared times
  State2 reduced_final{};
  State4 full_final{};
};

/// Integrates the reduced (Exact) and full-order models from matched initial
/// conditions with k_i = k_i_ratio * k_pll on every PLL slot.
FullOrderComparison reduced_vs_full_check(const TwoInverterSystem& sys, const State2& x0, double k_i_ratio,
                                          double horizon, const IntegratorSettings& settings);

/// Same comparison over a fault sequence: fault-on for `t_fault`, then post-fault until `horizon`.
FullOrderComparison reduced_vs_full_check(const TwoInverterSystem& fault_on, const TwoInverterSystem& post_fault,
                                          const State2& x0, double k_i_ratio, double t_fault, double horizon,
                                          const IntegratorSettings& settings);

/// CSV export: header `t,delta1,delta2`, 12 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory<2>& traj);
/// CSV export: header `t,delta1,delta2,z1,z2`.
void write_trajectory_csv(std::ostream& os, const Trajectory<4>& traj);

}  // namespace idoa
