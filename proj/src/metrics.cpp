#include "inverter_doa/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "inverter_doa/error.hpp"

namespace idoa {

double ccr(const DOABoundary& doa) {
  const auto& poly = doa.closed_polygon;
  const State2& s = doa.sep.state;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i < doa.splice.size() && doa.splice[i]) continue;
    best = std::min(best, point_segment_distance(s, poly[i], poly[(i + 1) % poly.size()]));
  }
  for (const auto& c : doa.interior_curves)
    for (std::size_t i = 0; i + 1 < c.size(); ++i) best = std::min(best, point_segment_distance(s, c[i], c[i + 1]));
  for (const auto& p : doa.isolated_points) best = std::min(best, distance(s, p));
  return best;
}

TccrResult t_ccr(const PlanarField& fault_on, const State2& pre_sep, const State2& post_sep, double radius,
                 const TccrOptions& opt) {
  if (!(radius > 0.0)) throw InvalidArgument("t_ccr: radius must be > 0");
  auto g = [post_sep, radius](double, const State2& x) { return radius - distance(x, post_sep); };
  IntegratorSettings s = opt.settings;
  s.t_max = opt.t_max;
  const std::vector<Event<2>> events{{"exit", g, -1, false}, {"enter", g, +1, false}};

  TccrResult r;
  r.trajectory = integrate<2>(fault_on, pre_sep, s, Direction::Forward, events);
  r.started_outside = g(0.0, pre_sep) < 0.0;
  bool inside = !r.started_outside;
  bool exited = false;
  for (const auto& h : r.trajectory.hits) {
    if (!exited) {
      if (h.id == "enter") inside = true;
      if (h.id == "exit" && inside) {
        r.t = h.t;
        r.exit_state = h.x;
        exited = true;
      }
    } else if (h.id == "enter") {
      r.reentered = true;
      break;
    }
  }
  if (!exited) r.t = r.started_outside && !inside ? 0.0 : std::numeric_limits<double>::infinity();
  return r;
}

State2 fault_on_state(const PlanarField& fault_on, const State2& pre_sep, double t, const IntegratorSettings& settings) {
  if (t <= 0.0) return pre_sep;
  IntegratorSettings s = settings;
  s.t_max = t;
  s.max_arc_length = std::numeric_limits<double>::infinity();
  return integrate<2>(fault_on, pre_sep, s).final_state();
}

CctResult cct_bisection(const PlanarField& fault_on, const State2& pre_sep, const DOABoundary& post_doa, double t_hi,
                        double tol, const IntegratorSettings& settings) {
  if (!(t_hi > 0.0) || !(tol > 0.0)) throw InvalidArgument("cct_bisection: t_hi and tol must be > 0");
  auto stable = [&](double t) { return contains(post_doa, fault_on_state(fault_on, pre_sep, t, settings)); };
  if (stable(t_hi)) return {t_hi, false};
  if (!stable(0.0)) return {0.0, true};
  double lo = 0.0, hi = t_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (stable(mid) ? lo : hi) = mid;
  }
  return {lo, true};
}

CcaResult cca(const DOABoundary& doa, const GeneralizedCoefficients& c) {
  CcaResult r;
  const State2& s = doa.sep.state;
  r.proj = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : doa.closed_polygon)
    for (int i = 0; i < 2; ++i) r.proj[i] = std::max(r.proj[i], p[i] - s[i]);

  const double d12 = s[0] - s[1];
  const double c_eff[2] = {c.c1 - c.a1 * std::sin(d12) + c.d1 * std::cos(d12),
                           c.c2 + c.a2 * std::sin(d12) + c.d2 * std::cos(d12)};
  const double b[2] = {c.b1, c.b2};
  for (int i = 0; i < 2; ++i) {
    if (b[i] == 0.0) continue;
    const double ratio = c_eff[i] / b[i];
    if (std::abs(ratio) > 1.0) continue;
    const double sep_angle = std::asin(ratio);
    r.decoupled[i] = std::numbers::pi - std::asin(ratio) - sep_angle;
  }
  return r;
}

Mat2 solve_lyapunov(const Mat2& j, const Mat2& q) {
  // Unknowns (p11, p12, p22).
  const double m[3][3] = {{2 * j.a11, 2 * j.a21, 0.0}, {j.a12, j.a11 + j.a22, j.a21}, {0.0, 2 * j.a12, 2 * j.a22}};
  const double rhs[3] = {-q.a11, -0.5 * (q.a12 + q.a21), -q.a22};
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det3(m);
  if (d == 0.0) throw NumericalFailure("Lyapunov equation is singular");
  double sol[3];
  for (int k = 0; k < 3; ++k) {
    double mk[3][3];
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) mk[r][col] = col == k ? rhs[r] : m[r][col];
    sol[k] = det3(mk) / d;
  }
  return {sol[0], sol[1], sol[1], sol[2]};
}

bool LyapunovEstimate::contains(const State2& sep, const State2& x) const {
  const State2 dx = x - sep;
  return dot(dx, p * dx) <= level;
}

std::vector<State2> LyapunovEstimate::ellipse(const State2& sep, int n) const {
  const auto e = eigen(p);
  const double l1 = e.values[0].real(), l2 = e.values[1].real();
  std::vector<State2> out(n);
  for (int k = 0; k < n; ++k) {
    const double th = kTwoPi * k / n;
    out[k] = sep + std::sqrt(level) * ((std::cos(th) / std::sqrt(l1)) * e.vectors[0] +
                                       (std::sin(th) / std::sqrt(l2)) * e.vectors[1]);
  }
  return out;
}

LyapunovEstimate local_lyapunov_estimate(const PlanarField& field, const Equilibrium& sep, int sample_count,
                                         double half_width) {
  return local_lyapunov_estimate([&field](const State2& x) { return field(x); }, field.jacobian(sep.state), sep.state,
                                 sample_count, half_width);
}

LyapunovEstimate local_lyapunov_estimate(const std::function<State2(const State2&)>& field, const Mat2& j,
                                         const State2& sep, int sample_count, double half_width) {
  if (sample_count < 8) throw InvalidArgument("local_lyapunov_estimate: sample_count must be >= 8");
  if (!(j.trace() < 0.0 && j.det() > 0.0)) throw NotApplicable("Jacobian at the equilibrium is not Hurwitz");
  LyapunovEstimate est;
  est.p = solve_lyapunov(j, {1.0, 0.0, 0.0, 1.0});
  const Mat2 pinv = est.p.inverse();
  const double cap = half_width * half_width / std::max(pinv.a11, pinv.a22);

  auto decreasing = [&](double c) {
    LyapunovEstimate trial = est;
    trial.level = c;
    for (const auto& x : trial.ellipse(sep, sample_count)) {
      const State2 dx = x - sep;
      if (!(2.0 * dot(dx, est.p * field(x)) < 0.0)) return false;
    }
    return true;
  };
  if (decreasing(cap)) {
    est.level = cap;
    est.capped = true;
    return est;
  }
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (decreasing(mid) ? lo : hi) = mid;
  }
  est.level = lo;
  return est;
}

bool converges_to(const PlanarField& field, const State2& x0, const State2& sep, double t_max, double tol) {
  IntegratorSettings s;
  s.t_max = t_max;
  s.max_arc_length = std::numeric_limits<double>::infinity();
  const Event<2> near{"near", [&sep, tol](double, const State2& x) { return distance(x, sep) - tol; }, -1, true};
  if (distance(x0, sep) <= tol) return true;
  try {
    return integrate<2>(field, x0, s, Direction::Forward, {near}).stop == StopReason::Event;
  } catch (const IntegrationFailure&) {
    return false;
  }
}

BasinAgreement basin_agreement(const PlanarField& field, const DOABoundary& doa, int grid, double band, double t_max,
                               std::optional<unsigned> seed) {
  if (grid < 2) throw InvalidArgument("basin_agreement: grid must be >= 2");
  const State2& c = doa.sep.state;
  const double pi = std::numbers::pi;
  std::vector<State2> pts;
  if (seed) {
    std::mt19937 rng(*seed);
    std::uniform_real_distribution<double> u(-pi, pi);
    for (int k = 0; k < grid * grid; ++k) pts.push_back({c[0] + u(rng), c[1] + u(rng)});
  } else {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        pts.push_back({c[0] - pi + 2 * pi * i / (grid - 1), c[1] - pi + 2 * pi * j / (grid - 1)});
  }
  BasinAgreement r;
  for (const auto& p : pts) {
    const auto m = membership(doa, p, band);
    if (m.on_boundary) {
      ++r.in_band;
      continue;
    }
    ++r.total;
    if (converges_to(field, p, c, t_max) == m.inside) {
      ++r.agree;
    } else {
      r.disagreements.push_back(p);
    }
  }
  r.fraction = r.total > 0 ? static_cast<double>(r.agree) / r.total : 0.0;
  return r;
}

nlohmann::json to_json(const StabilityReport& r) {
  using nlohmann::json;
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json("inf"); };
  json j = json::object();
  j["ccr"] = r.ccr ? json(*r.ccr) : json(nullptr);
  if (r.t_ccr) {
    j["t_ccr"] = num(r.t_ccr->t);
    j["t_ccr_started_outside"] = r.t_ccr->started_outside;
    j["t_ccr_reentered"] = r.t_ccr->reentered;
  } else {
    j["t_ccr"] = nullptr;
  }
  if (r.cct) {
    j["cct"] = r.cct->t;
    j["cct_bracketed"] = r.cct->bracketed;
  } else {
    j["cct"] = nullptr;
  }
  if (r.cca) {
    j["cca_proj"] = {r.cca->proj[0], r.cca->proj[1]};
    json dec = json::array();
    for (const auto& d : r.cca->decoupled) dec.push_back(d ? json(*d) : json(nullptr));
    j["cca_decoupled"] = dec;
  } else {
    j["cca_proj"] = nullptr;
    j["cca_decoupled"] = nullptr;
  }
  if (r.lyapunov) {
    j["lyapunov_level"] = r.lyapunov->level;
    j["lyapunov_capped"] = r.lyapunov->capped;
    const Mat2& p = r.lyapunov->p;
    j["lyapunov_p"] = {{p.a11, p.a12}, {p.a21, p.a22}};
  } else {
    j["lyapunov_level"] = nullptr;
  }
  j["provenance"] = r.provenance;
  return j;
}

}  // namespace idoa
