#include "inverter_doa/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "inverter_doa/error.hpp"

namespace idoa {

namespace {

// Forward-mode dual number carrying one directional derivative.
struct Dual {
  double v = 0.0;
  double g = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.g + b.g}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.g - b.g}; }
inline Dual operator-(Dual a) { return {-a.v, -a.g}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.g * b.v + a.v * b.g}; }
inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.g}; }
inline Dual operator/(Dual a, double s) { return {a.v / s, a.g / s}; }
inline Dual operator+(Dual a, double s) { return {a.v + s, a.g}; }
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.g}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.g}; }

using std::cos;
using std::sin;

template <class T>
struct Phasor {
  T re;
  T im;
};

template <class T>
Phasor<T> operator+(const Phasor<T>& a, const Phasor<T>& b) {
  return {a.re + b.re, a.im + b.im};
}

template <class T>
Phasor<T> operator-(const Phasor<T>& a, const Phasor<T>& b) {
  return {a.re - b.re, a.im - b.im};
}

template <class T>
Phasor<T> scale(double s, const Phasor<T>& a) {
  return {s * a.re, s * a.im};
}

// j * x * a
template <class T>
Phasor<T> times_jx(double x, const Phasor<T>& a) {
  return {-(x * a.im), x * a.re};
}

template <class T>
Phasor<T> polar(T mag_scale, double mag, const T& angle) {
  (void)mag_scale;
  return {mag * cos(angle), mag * sin(angle)};
}

// Components of `a` in the frame rotated by `angle`: (d, q).
template <class T>
Phasor<T> to_frame(const Phasor<T>& a, const T& angle) {
  const T c = cos(angle);
  const T s = sin(angle);
  return {a.re * c + a.im * s, a.im * c - a.re * s};
}

template <class T>
T zero_like(const T&);

template <>
double zero_like(const double&) {
  return 0.0;
}

template <>
Dual zero_like(const Dual&) {
  return {};
}

enum class SlotRole { VoltageSource, CurrentSource };

template <class T>
struct NetworkView {
  Phasor<T> v_common;
  std::array<Phasor<T>, 2> current;  // current-source slots only
  double x_thevenin = 0.0;
};

// Solves the lossless star network for the common-bus voltage.
template <class T>
NetworkView<T> solve_network(const TwoInverterSystem& sys, const std::array<T, 2>& ang,
                             const std::array<SlotRole, 2>& role, const std::array<double, 2>& e_mag,
                             const std::array<T, 2>& iq) {
  const auto& n = sys.network;
  const T zero = zero_like(ang[0]);
  double b = 1.0 / n.xg;
  Phasor<T> weighted{zero + n.ug / n.xg, zero};
  for (int i = 0; i < 2; ++i) {
    if (role[i] != SlotRole::VoltageSource) continue;
    const double x = sys.line(i);
    b += 1.0 / x;
    weighted = weighted + scale(1.0 / x, polar(zero, e_mag[i], ang[i]));
  }
  NetworkView<T> view;
  view.x_thevenin = 1.0 / b;
  const Phasor<T> v_th = scale(view.x_thevenin, weighted);
  Phasor<T> injected{zero, zero};
  for (int i = 0; i < 2; ++i) {
    if (role[i] != SlotRole::CurrentSource) {
      view.current[i] = {zero, zero};
      continue;
    }
    const T c = cos(ang[i]);
    const T s = sin(ang[i]);
    const double id = sys.slot(i).i_d;
    // (id + j iq) e^{j angle}
    view.current[i] = {id * c - iq[i] * s, id * s + iq[i] * c};
    injected = injected + view.current[i];
  }
  view.v_common = v_th + times_jx(view.x_thevenin, injected);
  return view;
}

template <class T>
T pll_signal(const TwoInverterSystem& sys, const NetworkView<T>& view, int i, const T& angle) {
  const Phasor<T> v_term = view.v_common + times_jx(sys.line(i), view.current[i]);
  return to_frame(v_term, angle).im;
}

template <class T>
T gfm_signal(const TwoInverterSystem& sys, const NetworkView<T>& view, int i, const T& angle) {
  const auto& cfg = sys.slot(i);
  const double x = sys.line(i);
  const Phasor<T> e = polar(angle, cfg.v_mag, angle);
  const Phasor<T> dv = e - view.v_common;
  // I = dv / (j x)
  const Phasor<T> cur{dv.im / x, -(dv.re / x)};
  const T p = e.re * cur.re + e.im * cur.im;
  return -p + cfg.p_ref;
}

template <class T>
std::array<T, 2> solve_q_currents(const TwoInverterSystem& sys, const std::array<T, 2>& ang,
                                  const std::array<SlotRole, 2>& role, const std::array<double, 2>& e_mag) {
  const T zero = zero_like(ang[0]);
  std::array<T, 2> iq{zero, zero};
  for (int i = 0; i < 2; ++i) {
    const auto& cfg = sys.slot(i);
    if (!cfg.has_voltage_support()) continue;
    const auto view = solve_network(sys, ang, role, e_mag, iq);
    const Phasor<T> v_term = view.v_common + times_jx(sys.line(i), view.current[i]);
    const T vd0 = to_frame(v_term, ang[i]).re;
    const double x_drive = sys.line(i) + view.x_thevenin;
    iq[i] = (cfg.m_q / (1.0 + cfg.m_q * x_drive)) * (vd0 + (-cfg.v_ref));
  }
  return iq;
}

template <class T>
std::array<T, 2> signals_t(const TwoInverterSystem& sys, const std::array<T, 2>& ang, const ExactOptions& opt) {
  std::array<SlotRole, 2> role{};
  std::array<double, 2> e_mag{};
  for (int i = 0; i < 2; ++i) {
    const auto& cfg = sys.slot(i);
    role[i] = cfg.kind == InverterKind::GFM ? SlotRole::VoltageSource : SlotRole::CurrentSource;
    e_mag[i] = cfg.v_mag;
  }

  std::array<T, 2> out{};
  if (!opt.ideal_voltage_support) {
    const auto iq = solve_q_currents(sys, ang, role, e_mag);
    const auto view = solve_network(sys, ang, role, e_mag, iq);
    for (int i = 0; i < 2; ++i)
      out[i] = role[i] == SlotRole::VoltageSource ? gfm_signal(sys, view, i, ang[i]) : pll_signal(sys, view, i, ang[i]);
    return out;
  }

  // Ideal support: the partner sees each supporting GSP as a V_ref source, while the
  // GSP's own q-axis voltage does not depend on its q-axis current.
  const T zero = zero_like(ang[0]);
  const std::array<T, 2> no_iq{zero, zero};
  const auto physical = solve_network(sys, ang, role, e_mag, no_iq);
  auto ideal_role = role;
  auto ideal_mag = e_mag;
  for (int i = 0; i < 2; ++i) {
    if (sys.slot(i).has_voltage_support()) {
      ideal_role[i] = SlotRole::VoltageSource;
      ideal_mag[i] = sys.slot(i).v_ref;
    }
  }
  const auto ideal = solve_network(sys, ang, ideal_role, ideal_mag, no_iq);
  for (int i = 0; i < 2; ++i) {
    const auto& cfg = sys.slot(i);
    if (cfg.kind == InverterKind::GFM) {
      out[i] = gfm_signal(sys, ideal, i, ang[i]);
    } else if (cfg.has_voltage_support()) {
      out[i] = pll_signal(sys, physical, i, ang[i]);
    } else {
      out[i] = pll_signal(sys, ideal, i, ang[i]);
    }
  }
  return out;
}

}  // namespace

std::string to_string(RhsMode mode) {
  switch (mode) {
    case RhsMode::Exact:
      return "exact";
    case RhsMode::Generalized:
      return "generalized";
    case RhsMode::FullOrder:
      return "full_order";
  }
  return "?";
}

RhsMode rhs_mode_from_string(const std::string& s) {
  if (s == "exact") return RhsMode::Exact;
  if (s == "generalized") return RhsMode::Generalized;
  if (s == "full_order") return RhsMode::FullOrder;
  throw InvalidArgument("unknown rhs mode '" + s + "'");
}

std::array<double, 2> sync_signals(const TwoInverterSystem& sys, const State2& x, const ExactOptions& opt) {
  return signals_t<double>(sys, {x[0], x[1]}, opt);
}

std::array<double, 2> q_currents(const TwoInverterSystem& sys, const State2& x) {
  std::array<SlotRole, 2> role{};
  std::array<double, 2> e_mag{};
  for (int i = 0; i < 2; ++i) {
    role[i] = sys.slot(i).kind == InverterKind::GFM ? SlotRole::VoltageSource : SlotRole::CurrentSource;
    e_mag[i] = sys.slot(i).v_mag;
  }
  return solve_q_currents<double>(sys, {x[0], x[1]}, role, e_mag);
}

State2 rhs_exact(const TwoInverterSystem& sys, const State2& x, const ExactOptions& opt) {
  const auto s = sync_signals(sys, x, opt);
  return {sys.ibr1.gain() * s[0], sys.ibr2.gain() * s[1]};
}

State2 rhs_generalized(const GeneralizedCoefficients& c, const State2& x) {
  const double d12 = x[0] - x[1];
  const double s12 = std::sin(d12);
  const double c12 = std::cos(d12);
  return {c.k1 * (c.c1 - c.a1 * s12 - c.b1 * std::sin(x[0]) + c.d1 * c12),
          c.k2 * (c.c2 + c.a2 * s12 - c.b2 * std::sin(x[1]) + c.d2 * c12)};
}

State4 rhs_full(const TwoInverterSystem& sys, const State4& x) {
  const auto s = sync_signals(sys, {x[0], x[2]});
  State4 out{};
  for (int i = 0; i < 2; ++i) {
    const auto& cfg = sys.slot(i);
    const double z = x[2 * i + 1];
    if (cfg.kind == InverterKind::GFM) {
      out[2 * i] = cfg.k_gfm * s[i];
      out[2 * i + 1] = 0.0;
      continue;
    }
    double omega = cfg.k_pll * s[i] + cfg.k_i * z;
    if (cfg.omega_limit) omega = std::clamp(omega, -*cfg.omega_limit, *cfg.omega_limit);
    out[2 * i] = omega;
    out[2 * i + 1] = s[i];
  }
  return out;
}

Mat2 jacobian_exact(const TwoInverterSystem& sys, const State2& x, const ExactOptions& opt) {
  const auto col1 = signals_t<Dual>(sys, {Dual{x[0], 1.0}, Dual{x[1], 0.0}}, opt);
  const auto col2 = signals_t<Dual>(sys, {Dual{x[0], 0.0}, Dual{x[1], 1.0}}, opt);
  const double k1 = sys.ibr1.gain();
  const double k2 = sys.ibr2.gain();
  return {k1 * col1[0].g, k1 * col2[0].g, k2 * col1[1].g, k2 * col2[1].g};
}

Mat2 jacobian_generalized(const GeneralizedCoefficients& c, const State2& x) {
  const double d12 = x[0] - x[1];
  const double s12 = std::sin(d12);
  const double c12 = std::cos(d12);
  // d/d(d1) of [-a1 sin(d12) + d1c cos(d12)] = -a1 cos - d1c sin
  const double g1 = -c.a1 * c12 - c.d1 * s12;
  const double g2 = c.a2 * c12 - c.d2 * s12;
  return {c.k1 * (g1 - c.b1 * std::cos(x[0])), -c.k1 * g1, c.k2 * g2, c.k2 * (-g2 - c.b2 * std::cos(x[1]))};
}

PlanarField::PlanarField(TwoInverterSystem sys, RhsMode mode, ExactOptions opt)
    : sys_(std::move(sys)), mode_(mode), opt_(opt) {
  if (mode_ == RhsMode::FullOrder) throw InvalidArgument("planar field requires a 2-D mode");
  sys_.validate();
  if (mode_ == RhsMode::Generalized) coeffs_ = to_generalized(sys_);
}

PlanarField::PlanarField(const GeneralizedCoefficients& coeffs) : mode_(RhsMode::Generalized), coeffs_(coeffs) {
  if (!(coeffs.k1 > 0.0) || !(coeffs.k2 > 0.0)) throw InvalidArgument("generalized gains must be > 0");
}

double PlanarField::max_gain() const {
  return mode_ == RhsMode::Generalized ? std::max(coeffs_.k1, coeffs_.k2) : std::max(sys_.ibr1.gain(), sys_.ibr2.gain());
}

State2 PlanarField::operator()(const State2& x) const {
  return mode_ == RhsMode::Generalized ? rhs_generalized(coeffs_, x) : rhs_exact(sys_, x, opt_);
}

Mat2 PlanarField::jacobian(const State2& x) const {
  return mode_ == RhsMode::Generalized ? jacobian_generalized(coeffs_, x) : jacobian_exact(sys_, x, opt_);
}

State4 lift(const State2& x) { return {x[0], 0.0, x[1], 0.0}; }
State2 project(const State4& x) { return {x[0], x[2]}; }

Trajectory<2> integrate_system(const TwoInverterSystem& sys, RhsMode mode, const State2& x0,
                               const IntegratorSettings& settings, Direction direction,
                               const std::vector<Event<2>>& events) {
  const PlanarField field(sys, mode);
  return integrate<2>(field, x0, settings, direction, events);
}

namespace {

TwoInverterSystem with_integral_gain(TwoInverterSystem sys, double ratio) {
  for (auto* cfg : {&sys.ibr1, &sys.ibr2})
    if (cfg->has_pll()) cfg->k_i = ratio * cfg->k_pll;
  return sys;
}

TwoInverterSystem without_integral_gain(TwoInverterSystem sys) { return with_integral_gain(std::move(sys), 0.0); }

IntegratorSettings fixed_grid(const IntegratorSettings& s, double t_max) {
  IntegratorSettings out = s;
  out.method = Method::RK4Fixed;
  out.t_max = t_max;
  out.domain_box.reset();
  out.max_arc_length = std::numeric_limits<double>::infinity();
  return out;
}

void accumulate(FullOrderComparison& cmp, const Trajectory<2>& reduced, const Trajectory<4>& full) {
  const std::size_t n = std::min(reduced.samples.size(), full.samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = reduced.samples[i].x;
    const auto& f = full.samples[i].x;
    cmp.max_deviation = std::max({cmp.max_deviation, std::abs(r[0] - f[0]), std::abs(r[1] - f[2])});
  }
  cmp.reduced_final = reduced.final_state();
  cmp.full_final = full.final_state();
}

}  // namespace

FullOrderComparison reduced_vs_full_check(const TwoInverterSystem& sys, const State2& x0, double k_i_ratio,
                                          double horizon, const IntegratorSettings& settings) {
  if (!sys.ibr1.has_pll() && !sys.ibr2.has_pll()) throw InvalidArgument("system has no PLL-based inverter");
  const auto grid = fixed_grid(settings, horizon);
  const PlanarField reduced_field(without_integral_gain(sys), RhsMode::Exact);
  const auto full_sys = with_integral_gain(sys, k_i_ratio);
  const auto reduced = integrate<2>(reduced_field, x0, grid);
  const auto full = integrate<4>([&](const State4& x) { return rhs_full(full_sys, x); }, lift(x0), grid);
  FullOrderComparison cmp;
  accumulate(cmp, reduced, full);
  return cmp;
}

FullOrderComparison reduced_vs_full_check(const TwoInverterSystem& fault_on, const TwoInverterSystem& post_fault,
                                          const State2& x0, double k_i_ratio, double t_fault, double horizon,
                                          const IntegratorSettings& settings) {
  if (!post_fault.ibr1.has_pll() && !post_fault.ibr2.has_pll())
    throw InvalidArgument("system has no PLL-based inverter");
  FullOrderComparison cmp;
  const auto on_grid = fixed_grid(settings, t_fault);
  const PlanarField on_reduced(without_integral_gain(fault_on), RhsMode::Exact);
  const auto on_full_sys = with_integral_gain(fault_on, k_i_ratio);
  const auto r1 = integrate<2>(on_reduced, x0, on_grid);
  const auto f1 = integrate<4>([&](const State4& x) { return rhs_full(on_full_sys, x); }, lift(x0), on_grid);
  accumulate(cmp, r1, f1);

  const auto post_grid = fixed_grid(settings, std::max(horizon - t_fault, settings.dt));
  const PlanarField post_reduced(without_integral_gain(post_fault), RhsMode::Exact);
  const auto post_full_sys = with_integral_gain(post_fault, k_i_ratio);
  const auto r2 = integrate<2>(post_reduced, r1.final_state(), post_grid);
  const auto f2 = integrate<4>([&](const State4& x) { return rhs_full(post_full_sys, x); }, f1.final_state(),
                               post_grid);
  accumulate(cmp, r2, f2);
  return cmp;
}

void write_trajectory_csv(std::ostream& os, const Trajectory<2>& traj) {
  os << "t,delta1,delta2\n" << std::setprecision(12);
  for (const auto& s : traj.samples) os << s.t << ',' << s.x[0] << ',' << s.x[1] << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory<4>& traj) {
  os << "t,delta1,delta2,z1,z2\n" << std::setprecision(12);
  for (const auto& s : traj.samples) os << s.t << ',' << s.x[0] << ',' << s.x[2] << ',' << s.x[1] << ',' << s.x[3] << '\n';
}

}  // namespace idoa
