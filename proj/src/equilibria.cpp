#include "inverter_doa/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace idoa {

namespace {

double wrapped_gap(const State2& a, const State2& b) {
  return std::max(std::abs(wrap_angle(a[0] - b[0])), std::abs(wrap_angle(a[1] - b[1])));
}

double sq(const State2& v) { return v[0] * v[0] + v[1] * v[1]; }

}  // namespace

std::string to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::SEP:
      return "SEP";
    case EquilibriumKind::Type1UEP:
      return "type1";
    case EquilibriumKind::Type2UEP:
      return "type2";
    case EquilibriumKind::NonHyperbolic:
      return "nonhyperbolic";
  }
  return "?";
}

std::optional<State2> newton_polish(const PlanarField& field, const State2& x0, const EquilibriumOptions& opt) {
  State2 x = x0;
  State2 f = field(x);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (norm_inf(f) < opt.root_tol) return x;
    const Mat2 j = field.jacobian(x);
    const double scale = std::max({std::abs(j.a11), std::abs(j.a12), std::abs(j.a21), std::abs(j.a22)});
    if (!(std::abs(j.det()) > 1e-14 * scale * scale)) return std::nullopt;
    const State2 dx = solve(j, -1.0 * f);
    // Armijo backtracking on |f|^2.
    const double phi0 = sq(f);
    double t = 1.0;
    State2 x_new = x + dx;
    State2 f_new = field(x_new);
    while (sq(f_new) > (1.0 - 1e-4 * t) * phi0 && t > 1e-6) {
      t *= 0.5;
      x_new = x + t * dx;
      f_new = field(x_new);
    }
    if (!std::isfinite(x_new[0]) || !std::isfinite(x_new[1])) return std::nullopt;
    x = x_new;
    f = f_new;
  }
  if (norm_inf(f) < opt.root_tol) return x;
  return std::nullopt;
}

Equilibrium classify(const PlanarField& field, const State2& x, const EquilibriumOptions& opt) {
  Equilibrium e;
  e.state = x;
  const auto eig = eigen(field.jacobian(x));
  e.eigenvalues = eig.values;
  e.eigenvectors = eig.vectors;
  const double tol = opt.hyperbolicity_rel_tol * field.max_gain();
  int positive = 0;
  for (const auto& l : e.eigenvalues) {
    if (std::abs(l.real()) < tol) {
      e.kind = EquilibriumKind::NonHyperbolic;
      return e;
    }
    if (l.real() > 0.0) ++positive;
  }
  e.kind = positive == 0 ? EquilibriumKind::SEP : positive == 1 ? EquilibriumKind::Type1UEP : EquilibriumKind::Type2UEP;
  return e;
}

std::vector<Equilibrium> find_equilibria(const PlanarField& field, const EquilibriumOptions& opt) {
  std::vector<State2> roots;
  const double pi = std::numbers::pi;
  const double step = kTwoPi / opt.grid;
  for (int i = 0; i < opt.grid; ++i) {
    for (int j = 0; j < opt.grid; ++j) {
      const State2 seed{-pi + i * step, -pi + j * step};
      const auto r = newton_polish(field, seed, opt);
      if (!r) continue;
      const State2 w{wrap_angle((*r)[0]), wrap_angle((*r)[1])};
      const bool dup =
          std::any_of(roots.begin(), roots.end(), [&](const State2& q) { return wrapped_gap(q, w) < opt.dedup_tol; });
      if (!dup) roots.push_back(w);
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<Equilibrium> out;
  out.reserve(roots.size());
  for (const auto& r : roots) out.push_back(classify(field, r, opt));
  return out;
}

std::vector<Equilibrium> find_equilibria(const TwoInverterSystem& sys, RhsMode mode, const EquilibriumOptions& opt) {
  return find_equilibria(PlanarField(sys, mode), opt);
}

Equilibrium shifted(const Equilibrium& e, int m1, int m2) {
  Equilibrium s = e;
  s.state = {e.state[0] + kTwoPi * m1, e.state[1] + kTwoPi * m2};
  return s;
}

std::optional<Equilibrium> nearest_sep(const std::vector<Equilibrium>& eqs, const State2& near) {
  std::optional<Equilibrium> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : eqs) {
    if (e.kind != EquilibriumKind::SEP) continue;
    const State2 w{near[0] + wrap_angle(e.state[0] - near[0]), near[1] + wrap_angle(e.state[1] - near[1])};
    const double d = distance(w, near);
    if (d < best_d) {
      best_d = d;
      best = e;
      best->state = w;
    }
  }
  return best;
}

double EnergyFunction::value(const State2& x) const {
  return -c1 * x[0] - c2 * x[1] + lambda * (1.0 - std::cos(x[0] - x[1])) + b1 * (1.0 - std::cos(x[0])) +
         b2 * (1.0 - std::cos(x[1]));
}

State2 EnergyFunction::gradient(const State2& x) const {
  const double s12 = std::sin(x[0] - x[1]);
  return {-c1 + lambda * s12 + b1 * std::sin(x[0]), -c2 - lambda * s12 + b2 * std::sin(x[1])};
}

EnergyFunction energy_function(const GeneralizedCoefficients& c) {
  EnergyFunction v;
  const bool cosine_free = std::abs(c.d1) < 1e-12 && std::abs(c.d2) < 1e-12;
  if (cosine_free && c.a1 > 0.0 && c.a2 > 0.0) {
    v.exists = true;
    v.lambda = 1.0;
    v.mu1 = c.k1 * c.a1;
    v.mu2 = c.k2 * c.a2;
    v.c1 = c.c1 / c.a1;
    v.c2 = c.c2 / c.a2;
    v.b1 = c.b1 / c.a1;
    v.b2 = c.b2 / c.a2;
  } else if (cosine_free && c.a1 == 0.0 && c.a2 == 0.0) {
    v.exists = true;
    v.lambda = 0.0;
    v.mu1 = c.k1;
    v.mu2 = c.k2;
    v.c1 = c.c1;
    v.c2 = c.c2;
    v.b1 = c.b1;
    v.b2 = c.b2;
  }
  return v;
}

nlohmann::json to_json(const Equilibrium& e) {
  return {{"delta1", e.state[0]},
          {"delta2", e.state[1]},
          {"kind", to_string(e.kind)},
          {"eig_re", {e.eigenvalues[0].real(), e.eigenvalues[1].real()}},
          {"eig_im", {e.eigenvalues[0].imag(), e.eigenvalues[1].imag()}}};
}

nlohmann::json equilibria_to_json(const std::vector<Equilibrium>& eqs) {
  auto arr = nlohmann::json::array();
  for (const auto& e : eqs) arr.push_back(to_json(e));
  return arr;
}

}  // namespace idoa
