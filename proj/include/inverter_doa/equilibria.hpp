#pragma once

// Equilibrium search on the torus, Jacobian-based classification and the
// energy function of cosine-free systems.

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inverter_doa/dynamics.hpp"

namespace idoa {

enum class EquilibriumKind { SEP, Type1UEP, Type2UEP, NonHyperbolic };

std::string to_string(EquilibriumKind kind);

struct Equilibrium {
  State2 state{};
  std::array<std::complex<double>, 2> eigenvalues{};  // ascending real part
  std::array<State2, 2> eigenvectors{};
  EquilibriumKind kind = EquilibriumKind::NonHyperbolic;

  /// For a type-1 UEP: eigenvectors[0] is the stable direction, eigenvectors[1] the unstable one.
  [[nodiscard]] const State2& stable_direction() const { return eigenvectors[0]; }
  [[nodiscard]] const State2& unstable_direction() const { return eigenvectors[1]; }
};

struct EquilibriumOptions {
  int grid = 24;
  int max_iterations = 50;
  double root_tol = 1e-10;   // max-norm of the rhs at an accepted root
  double dedup_tol = 1e-6;   // rad, modulo 2pi
  /// Relative to max(k1, k2). Eigenvalues with |Re| below it mark a non-hyperbolic point.
  double hyperbolicity_rel_tol = 1e-6;
};

/// Damped Newton from `x0`. Returns the converged root (not wrapped) or nothing.
std::optional<State2> newton_polish(const PlanarField& field, const State2& x0, const EquilibriumOptions& opt = {});

Equilibrium classify(const PlanarField& field, const State2& x, const EquilibriumOptions& opt = {});

/// Grid-seeded search over [-pi, pi)^2. Roots are wrapped into [-pi, pi)^2,
/// deduplicated modulo 2pi and sorted by (delta1, delta2).
std::vector<Equilibrium> find_equilibria(const PlanarField& field, const EquilibriumOptions& opt = {});
std::vector<Equilibrium> find_equilibria(const TwoInverterSystem& sys, RhsMode mode,
                                         const EquilibriumOptions& opt = {});

/// SEP whose 2pi-translate lies closest to `near`; the returned state is that translate.
std::optional<Equilibrium> nearest_sep(const std::vector<Equilibrium>& eqs, const State2& near);

/// Same equilibrium shifted by 2pi*(m1, m2).
Equilibrium shifted(const Equilibrium& e, int m1, int m2);

struct EnergyFunction {
  bool exists = false;
  double c1 = 0, c2 = 0, lambda = 0, b1 = 0, b2 = 0;
  double mu1 = 0, mu2 = 0;

  /// V = -c1 d1 - c2 d2 + lambda (1 - cos(d1 - d2)) + b1 (1 - cos d1) + b2 (1 - cos d2)
  [[nodiscard]] double value(const State2& x) const;
  [[nodiscard]] State2 gradient(const State2& x) const;
};

EnergyFunction energy_function(const GeneralizedCoefficients& c);

nlohmann::json to_json(const Equilibrium& e);
nlohmann::json equilibria_to_json(const std::vector<Equilibrium>& eqs);

}  // namespace idoa
