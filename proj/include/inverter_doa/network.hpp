#pragma once

// Inverter and network parameter types for the two-inverter / infinite-bus
// system, derived impedances, the generalized sinusoidal coefficient form
// and fault-network reduction.

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace idoa {

enum class InverterKind { GFM, GFL, GSP };

std::string to_string(InverterKind kind);
InverterKind inverter_kind_from_string(const std::string& s);

/// Control parameters of one inverter. Only the fields relevant to `kind` are read:
/// GFM uses k_gfm/p_ref/v_mag; GFL uses k_pll/k_i/i_d; GSP additionally m_q/v_ref.
struct InverterConfig {
  InverterKind kind = InverterKind::GFL;
  double k_gfm = 0.0;  // rad/s per p.u. power
  double p_ref = 0.0;  // p.u.
  double v_mag = 1.0;  // p.u.
  double k_pll = 0.0;  // rad/s per p.u. voltage
  double k_i = 0.0;    // rad/s^2 per p.u. voltage, full-order model only
  double i_d = 0.0;    // p.u.
  double m_q = 0.0;    // p.u. current per p.u. voltage
  double v_ref = 1.0;  // p.u.
  /// Optional symmetric clamp on the PLL frequency deviation (rad/s), full-order model only.
  std::optional<double> omega_limit;

  static InverterConfig gfm(double k_gfm, double p_ref, double v_mag);
  static InverterConfig gfl(double k_pll, double i_d, double k_i = 0.0);
  static InverterConfig gsp(double k_pll, double i_d, double m_q, double v_ref = 1.0, double k_i = 0.0);

  [[nodiscard]] bool has_pll() const { return kind != InverterKind::GFM; }
  /// Synchronization gain: k_gfm for GFM, k_pll otherwise.
  [[nodiscard]] double gain() const { return kind == InverterKind::GFM ? k_gfm : k_pll; }
  /// GSP with active voltage droop. A GSP with m_q == 0 is a plain GFL.
  [[nodiscard]] bool has_voltage_support() const { return kind == InverterKind::GSP && m_q > 0.0; }

  void validate() const;
};

struct NetworkParams {
  double x1 = 0.0;  // IBR1 line reactance, p.u.
  double x2 = 0.0;  // IBR2 line reactance, p.u.
  double xg = 0.0;  // grid line reactance (effective), p.u.
  double ug = 1.0;  // infinite-bus voltage, p.u.

  void validate() const;
};

struct DerivedImpedances {
  double x_d12 = 0.0;  // (x1 x2 + x1 xg + x2 xg) / xg
  double x_dg1 = 0.0;  // (...) / x2
  double x_dg2 = 0.0;  // (...) / x1
  double x_1sum = 0.0;
  double x_2sum = 0.0;
  double x_1p2g = 0.0;  // x1 + (xg || x2)
  double x_2p1g = 0.0;  // x2 + (xg || x1)
};

DerivedImpedances derive_impedances(const NetworkParams& net);

struct TwoInverterSystem {
  InverterConfig ibr1;
  InverterConfig ibr2;
  NetworkParams network;

  [[nodiscard]] const InverterConfig& slot(int i) const { return i == 0 ? ibr1 : ibr2; }
  [[nodiscard]] double line(int i) const { return i == 0 ? network.x1 : network.x2; }

  /// Checks every field invariant and rejects the GSP-GSP pairing.
  void validate() const;
};

/// Coefficients of
///   d1' = k1 [c1 - a1 sin(d1-d2) - b1 sin d1 + d1c cos(d1-d2)]
///   d2' = k2 [c2 - a2 sin(d2-d1) - b2 sin d2 + d2c cos(d1-d2)]
/// where d1c/d2c are the members `d1`/`d2` below.
struct GeneralizedCoefficients {
  double k1 = 0, a1 = 0, b1 = 0, c1 = 0, d1 = 0;
  double k2 = 0, a2 = 0, b2 = 0, c2 = 0, d2 = 0;
};

/// Maps a system onto the generalized form. GSP slots with m_q > 0 use the
/// ideal-voltage-support limit (the GSP behaves as a V_ref source towards its partner).
GeneralizedCoefficients to_generalized(const TwoInverterSystem& sys);

struct LineFault {
  double position_frac = 0.5;  // along the faulted circuit, measured from the infinite bus
  double r_fault = 0.0;        // p.u.
};

struct VoltageSag {
  double ug_during = 0.1;  // p.u.
};

struct FaultSpec {
  std::variant<LineFault, VoltageSag> kind = LineFault{};
  double t_start = 0.0;               // s, only used for timeline exports
  double post_fault_xg_factor = 2.0;  // LineFault only

  void validate(const NetworkParams& pre_fault) const;
};

struct FaultedSystems {
  TwoInverterSystem fault_on;
  TwoInverterSystem post_fault;
};

/// Thevenin equivalent seen from the common bus.
struct TheveninEquivalent {
  std::complex<double> voltage;
  std::complex<double> impedance;
};

/// Reduces {infinite bus, healthy circuit, faulted circuit with shunt fault} to a
/// Thevenin source at the common bus. Each circuit has reactance factor * xg.
TheveninEquivalent line_fault_thevenin(const NetworkParams& net, const LineFault& fault, double factor);

/// Builds the fault-on and post-fault systems. The pre-fault system is `sys` itself.
FaultedSystems apply_fault(const TwoInverterSystem& sys, const FaultSpec& spec);

}  // namespace idoa
