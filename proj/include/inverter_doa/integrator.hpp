#pragma once

// Explicit Runge-Kutta integration (fixed RK4 or adaptive Dormand-Prince 5(4))
// with sign-change event detection refined by bisection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "inverter_doa/error.hpp"
#include "inverter_doa/linalg.hpp"

namespace idoa {

enum class Method { RK4Fixed, RK45Adaptive };
enum class Direction { Forward, Backward };

struct IntegratorSettings {
  Method method = Method::RK45Adaptive;
  double dt = 1e-3;  // fixed step, or initial step for the adaptive method (s)
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_max = 10.0;           // s
  double max_arc_length = 50.0;  // rad, total path length cap
  /// Half-width of the box around the reference point; leaving it stops the run.
  std::optional<double> domain_box;
  /// Upper bound on the state change of one accepted step (rad); keeps polylines dense.
  double max_step_arc = std::numeric_limits<double>::infinity();
  double max_dt = std::numeric_limits<double>::infinity();
  double min_dt = 1e-12;

  void validate() const {
    if (!(dt > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_arc_length > 0.0) || !(t_max > 0.0))
      throw InvalidArgument("integrator settings: dt, tolerances, t_max and max_arc_length must be > 0");
    if (domain_box && !(*domain_box > 0.0)) throw InvalidArgument("integrator settings: domain_box must be > 0");
  }
};

template <std::size_t N>
struct Event {
  std::string id;
  std::function<double(double t, const Vec<N>& x)> fn;
  /// +1: only negative-to-positive crossings, -1: positive-to-negative, 0: both.
  int direction = 0;
  bool terminal = true;
};

template <std::size_t N>
struct Sample {
  double t;
  Vec<N> x;
};

template <std::size_t N>
struct EventHit {
  std::string id;
  double t;
  Vec<N> x;
};

enum class StopReason { TimeLimit, ArcLengthCap, DomainExit, Event };

template <std::size_t N>
struct Trajectory {
  std::vector<Sample<N>> samples;
  std::optional<std::string> terminal_event;
  std::vector<EventHit<N>> hits;  // every event hit, terminal or not, in time order
  StopReason stop = StopReason::TimeLimit;
  double arc_length = 0.0;

  [[nodiscard]] const Vec<N>& final_state() const { return samples.back().x; }
  [[nodiscard]] double final_time() const { return samples.back().t; }
};

/// Thrown on step-size underflow or a non-finite state. Carries the samples
/// accumulated before the failure.
class IntegrationFailure : public NumericalFailure {
 public:
  IntegrationFailure(const std::string& what, std::vector<double> times, std::vector<std::vector<double>> states)
      : NumericalFailure(what), times_(std::move(times)), states_(std::move(states)) {}
  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<std::vector<double>>& states() const { return states_; }

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> states_;
};

namespace detail {

template <std::size_t N>
struct StepResult {
  Vec<N> x;
  Vec<N> err;  // embedded error estimate (zero for RK4)
};

template <std::size_t N, class F>
StepResult<N> rk4_step(const F& f, const Vec<N>& x, double h) {
  const auto k1 = f(x);
  const auto k2 = f(x + (0.5 * h) * k1);
  const auto k3 = f(x + (0.5 * h) * k2);
  const auto k4 = f(x + h * k3);
  return {x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), Vec<N>{}};
}

// Dormand-Prince 5(4); returns the 5th-order solution and the 5th-4th difference.
template <std::size_t N, class F>
StepResult<N> dopri_step(const F& f, const Vec<N>& x, double h, const Vec<N>& k1) {
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                   a65 = -5103.0 / 18656.0;
  constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                   b6 = 11.0 / 84.0;
  constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                   e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  const auto k2 = f(x + h * (a21 * k1));
  const auto k3 = f(x + h * (a31 * k1 + a32 * k2));
  const auto k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const auto k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const auto k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  const Vec<N> x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const auto k7 = f(x_new);
  const Vec<N> err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  return {x_new, err};
}

template <std::size_t N>
bool crosses(double g0, double g1, int direction) {
  if (direction >= 0 && g0 < 0.0 && g1 >= 0.0) return true;
  if (direction <= 0 && g0 > 0.0 && g1 <= 0.0) return true;
  return false;
}

}  // namespace detail

/// Integrates x' = f(x) (or x' = -f(x) backward) from x0.
///
/// Stops at t_max, the arc-length cap, exit from the domain box around
/// `reference` (when both the box and the reference are given), or the first
/// terminal event. Backward runs report negative sample times.
template <std::size_t N, class F>
Trajectory<N> integrate(const F& field, const Vec<N>& x0, const IntegratorSettings& settings,
                        Direction direction = Direction::Forward, const std::vector<Event<N>>& events = {},
                        std::optional<Vec<N>> reference = std::nullopt) {
  settings.validate();
  const double sign = direction == Direction::Forward ? 1.0 : -1.0;
  auto f = [&](const Vec<N>& x) { return sign * field(x); };

  std::vector<Event<N>> all_events = events;
  const bool use_box = settings.domain_box.has_value() && reference.has_value();
  if (use_box) {
    const Vec<N> c = *reference;
    const double hw = *settings.domain_box;
    all_events.push_back({"domain_exit",
                          [c, hw](double, const Vec<N>& x) {
                            double m = 0.0;
                            for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(x[i] - c[i]));
                            return hw - m;
                          },
                          -1, true});
  }

  Trajectory<N> traj;
  traj.samples.push_back({0.0, x0});
  const double t_res = std::max(settings.dt * 1e-3, 1e-12);
  const bool adaptive = settings.method == Method::RK45Adaptive;

  auto fail = [&](const std::string& msg) {
    std::vector<double> ts;
    std::vector<std::vector<double>> xs;
    for (const auto& s : traj.samples) {
      ts.push_back(s.t);
      xs.emplace_back(s.x.begin(), s.x.end());
    }
    throw IntegrationFailure(msg, std::move(ts), std::move(xs));
  };

  double tau = 0.0;  // elapsed |t|
  Vec<N> x = x0;
  Vec<N> k1 = f(x);
  double h = std::min(settings.dt, settings.max_dt);
  std::vector<double> g_prev(all_events.size());
  for (std::size_t i = 0; i < all_events.size(); ++i) g_prev[i] = all_events[i].fn(0.0, x);

  auto advance = [&](const Vec<N>& from, const Vec<N>& k_from, double step) {
    return adaptive ? detail::dopri_step<N>(f, from, step, k_from) : detail::rk4_step<N>(f, from, step);
  };

  while (tau < settings.t_max) {
    const double h_try = std::min(h, settings.t_max - tau);
    if (h_try < settings.min_dt && tau + h_try < settings.t_max) fail("integration step size underflow");
    auto step = advance(x, k1, h_try);

    double step_norm = 0.0;
    for (std::size_t i = 0; i < N; ++i) step_norm += (step.x[i] - x[i]) * (step.x[i] - x[i]);
    step_norm = std::sqrt(step_norm);
    bool finite = std::isfinite(step_norm);
    for (double v : step.x) finite = finite && std::isfinite(v);

    if (adaptive) {
      double err = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double sc = settings.abs_tol + settings.rel_tol * std::max(std::abs(x[i]), std::abs(step.x[i]));
        err += (step.err[i] / sc) * (step.err[i] / sc);
      }
      err = std::sqrt(err / N);
      if (!finite || !std::isfinite(err)) {
        h = h_try * 0.1;
        if (h < settings.min_dt) fail("non-finite state during integration");
        continue;
      }
      if (err > 1.0 || step_norm > settings.max_step_arc) {
        double shrink = err > 1.0 ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 1.0;
        if (step_norm > settings.max_step_arc) shrink = std::min(shrink, 0.9 * settings.max_step_arc / step_norm);
        h = h_try * shrink;
        if (h < settings.min_dt) fail("integration step size underflow");
        continue;
      }
      const double grow = err > 0.0 ? std::min(5.0, 0.9 * std::pow(err, -0.2)) : 5.0;
      h = std::min(h_try * grow, settings.max_dt);
    } else {
      if (!finite) fail("non-finite state during integration");
    }

    // Event detection over [tau, tau + h_try].
    double t_hit = h_try;
    std::optional<std::size_t> hit_index;
    std::vector<std::pair<double, std::size_t>> nonterminal;
    std::vector<double> g_new(all_events.size());
    for (std::size_t i = 0; i < all_events.size(); ++i) {
      g_new[i] = all_events[i].fn(sign * (tau + h_try), step.x);
      if (!detail::crosses<N>(g_prev[i], g_new[i], all_events[i].direction)) continue;
      double lo = 0.0, hi = h_try;
      double g_lo = g_prev[i];
      while (hi - lo > t_res) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = all_events[i].fn(sign * (tau + mid), advance(x, k1, mid).x);
        if (detail::crosses<N>(g_lo, g_mid, all_events[i].direction)) {
          hi = mid;
        } else {
          lo = mid;
          g_lo = g_mid;
        }
      }
      if (all_events[i].terminal) {
        if (hi < t_hit || !hit_index) {
          t_hit = hi;
          hit_index = i;
        }
      } else {
        nonterminal.emplace_back(hi, i);
      }
    }
    std::sort(nonterminal.begin(), nonterminal.end());
    for (const auto& [th, i] : nonterminal) {
      if (hit_index && th > t_hit) break;
      traj.hits.push_back({all_events[i].id, sign * (tau + th), advance(x, k1, th).x});
    }

    if (hit_index) {
      const auto end = advance(x, k1, t_hit).x;
      traj.arc_length += norm2(end - x);
      tau += t_hit;
      traj.samples.push_back({sign * tau, end});
      traj.hits.push_back({all_events[*hit_index].id, sign * tau, end});
      if (all_events[*hit_index].id == "domain_exit" && use_box) {
        traj.stop = StopReason::DomainExit;
      } else {
        traj.stop = StopReason::Event;
        traj.terminal_event = all_events[*hit_index].id;
      }
      return traj;
    }

    tau += h_try;
    traj.arc_length += step_norm;
    x = step.x;
    k1 = f(x);
    g_prev = g_new;
    traj.samples.push_back({sign * tau, x});
    if (traj.arc_length >= settings.max_arc_length) {
      traj.stop = StopReason::ArcLengthCap;
      return traj;
    }
  }
  traj.stop = StopReason::TimeLimit;
  return traj;
}

}  // namespace idoa
