#include "inverter_doa/network.hpp"

#include <cmath>
#include <sstream>

#include "inverter_doa/error.hpp"

namespace idoa {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

struct SlotCoefficients {
  double k, a, b, c, d;
};

// Generalized coefficients of slot `self` against `partner`. Line reactances are
// passed as (self, partner).
SlotCoefficients slot_coefficients(const InverterConfig& self, const InverterConfig& partner, double x_self,
                                   double x_partner, const NetworkParams& net) {
  const double xg = net.xg;
  const double ug = net.ug;
  const double delta = x_self * x_partner + x_self * xg + x_partner * xg;
  const double x_self_sum = x_self + xg;
  const double x_partner_sum = x_partner + xg;
  const bool partner_is_source = partner.kind == InverterKind::GFM || partner.has_voltage_support();
  const double v_partner = partner.kind == InverterKind::GFM ? partner.v_mag : partner.v_ref;

  if (self.kind == InverterKind::GFM) {
    const double v = self.v_mag;
    if (partner_is_source) return {self.k_gfm, v * v_partner * xg / delta, v * ug * x_partner / delta, self.p_ref, 0.0};
    return {self.k_gfm, 0.0, ug * v / x_self_sum, self.p_ref, xg * partner.i_d * v / x_self_sum};
  }
  if (partner_is_source) {
    const double x_self_par = x_self + xg * x_partner / (xg + x_partner);
    return {self.k_pll, xg / x_partner_sum * v_partner, x_partner / x_partner_sum * ug, x_self_par * self.i_d, 0.0};
  }
  return {self.k_pll, 0.0, ug, x_self_sum * self.i_d, xg * partner.i_d};
}

}  // namespace

std::string to_string(InverterKind kind) {
  switch (kind) {
    case InverterKind::GFM:
      return "GFM";
    case InverterKind::GFL:
      return "GFL";
    case InverterKind::GSP:
      return "GSP";
  }
  return "?";
}

InverterKind inverter_kind_from_string(const std::string& s) {
  if (s == "GFM") return InverterKind::GFM;
  if (s == "GFL") return InverterKind::GFL;
  if (s == "GSP") return InverterKind::GSP;
  throw InvalidArgument("unknown inverter kind '" + s + "'");
}

InverterConfig InverterConfig::gfm(double k_gfm, double p_ref, double v_mag) {
  InverterConfig c;
  c.kind = InverterKind::GFM;
  c.k_gfm = k_gfm;
  c.p_ref = p_ref;
  c.v_mag = v_mag;
  return c;
}

InverterConfig InverterConfig::gfl(double k_pll, double i_d, double k_i) {
  InverterConfig c;
  c.kind = InverterKind::GFL;
  c.k_pll = k_pll;
  c.i_d = i_d;
  c.k_i = k_i;
  return c;
}

InverterConfig InverterConfig::gsp(double k_pll, double i_d, double m_q, double v_ref, double k_i) {
  InverterConfig c = gfl(k_pll, i_d, k_i);
  c.kind = InverterKind::GSP;
  c.m_q = m_q;
  c.v_ref = v_ref;
  return c;
}

void InverterConfig::validate() const {
  require(finite_all({k_gfm, p_ref, v_mag, k_pll, k_i, i_d, m_q, v_ref}), "inverter parameters must be finite");
  if (kind == InverterKind::GFM) {
    require(k_gfm > 0.0, "GFM requires k_gfm > 0");
    require(v_mag > 0.0, "GFM requires v_mag > 0");
    return;
  }
  require(k_pll > 0.0, "PLL-based inverter requires k_pll > 0");
  require(k_i >= 0.0, "k_i must be >= 0");
  if (kind == InverterKind::GSP) {
    require(m_q >= 0.0, "GSP requires m_q >= 0");
    require(v_ref > 0.0, "GSP requires v_ref > 0");
  }
  if (omega_limit) require(*omega_limit > 0.0, "omega_limit must be > 0");
}

void NetworkParams::validate() const {
  require(finite_all({x1, x2, xg, ug}), "network parameters must be finite");
  require(x1 > 0.0 && x2 > 0.0 && xg > 0.0, "line reactances must be > 0");
  require(ug > 0.0, "grid voltage must be > 0");
}

DerivedImpedances derive_impedances(const NetworkParams& net) {
  net.validate();
  const double x1 = net.x1, x2 = net.x2, xg = net.xg;
  const double delta = x1 * x2 + x1 * xg + x2 * xg;
  DerivedImpedances d;
  d.x_d12 = delta / xg;
  d.x_dg1 = delta / x2;
  d.x_dg2 = delta / x1;
  d.x_1sum = x1 + xg;
  d.x_2sum = x2 + xg;
  d.x_1p2g = x1 + xg * x2 / (xg + x2);
  d.x_2p1g = x2 + xg * x1 / (xg + x1);
  return d;
}

void TwoInverterSystem::validate() const {
  ibr1.validate();
  ibr2.validate();
  network.validate();
  if (ibr1.kind == InverterKind::GSP && ibr2.kind == InverterKind::GSP)
    throw UnsupportedCombination("GSP-GSP combination is not supported");
}

GeneralizedCoefficients to_generalized(const TwoInverterSystem& sys) {
  sys.validate();
  const auto& n = sys.network;
  const auto s1 = slot_coefficients(sys.ibr1, sys.ibr2, n.x1, n.x2, n);
  const auto s2 = slot_coefficients(sys.ibr2, sys.ibr1, n.x2, n.x1, n);
  return {s1.k, s1.a, s1.b, s1.c, s1.d, s2.k, s2.a, s2.b, s2.c, s2.d};
}

void FaultSpec::validate(const NetworkParams& pre_fault) const {
  require(std::isfinite(t_start), "fault t_start must be finite");
  if (const auto* lf = std::get_if<LineFault>(&kind)) {
    require(lf->position_frac >= 0.0 && lf->position_frac <= 1.0, "fault position_frac must lie in [0, 1]");
    require(lf->r_fault > 0.0 && std::isfinite(lf->r_fault), "fault resistance must be > 0");
    require(post_fault_xg_factor > 0.0 && std::isfinite(post_fault_xg_factor), "post_fault_xg_factor must be > 0");
  } else {
    const auto& sag = std::get<VoltageSag>(kind);
    require(sag.ug_during >= 0.0 && sag.ug_during <= pre_fault.ug, "ug_during must lie in [0, ug]");
  }
}

TheveninEquivalent line_fault_thevenin(const NetworkParams& net, const LineFault& fault, double factor) {
  using C = std::complex<double>;
  const double x_circuit = factor * net.xg;
  const C z_healthy{0.0, x_circuit};
  const C z_grid_side{0.0, fault.position_frac * x_circuit};
  const C z_bus_side{0.0, (1.0 - fault.position_frac) * x_circuit};
  const C r{fault.r_fault, 0.0};
  const C ug{net.ug, 0.0};

  // Faulted circuit: source behind z_grid_side with the fault shunt at F, seen from F.
  const C v_f = ug * r / (r + z_grid_side);
  const C z_f = z_grid_side * r / (z_grid_side + r);
  const C z_faulted = z_f + z_bus_side;
  if (std::abs(z_faulted) < 1e-12) throw DegenerateFault("faulted circuit collapses to zero impedance");

  const C y = 1.0 / z_healthy + 1.0 / z_faulted;
  const C z_th = 1.0 / y;
  const C v_th = (ug / z_healthy + v_f / z_faulted) * z_th;
  if (std::abs(z_th) < 1e-9) throw DegenerateFault("fault-on Thevenin impedance below 1e-9 p.u.");
  return {v_th, z_th};
}

FaultedSystems apply_fault(const TwoInverterSystem& sys, const FaultSpec& spec) {
  sys.validate();
  spec.validate(sys.network);
  FaultedSystems out{sys, sys};
  if (const auto* lf = std::get_if<LineFault>(&spec.kind)) {
    const auto th = line_fault_thevenin(sys.network, *lf, spec.post_fault_xg_factor);
    // Lossless reduced model: keep |V| and the reactive part only.
    out.fault_on.network.ug = std::abs(th.voltage);
    out.fault_on.network.xg = th.impedance.imag();
    if (!(out.fault_on.network.xg > 1e-9) || !(out.fault_on.network.ug > 0.0))
      throw DegenerateFault("fault-on network has non-positive reactance or zero voltage");
    out.post_fault.network.xg = spec.post_fault_xg_factor * sys.network.xg;
  } else {
    out.fault_on.network.ug = std::get<VoltageSag>(spec.kind).ug_during;
  }
  return out;
}

}  // namespace idoa
