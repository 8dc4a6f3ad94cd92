#pragma once

// Stable-manifold tracing of type-1 saddles, assembly of the SEP's basin on
// the window [sep - h, sep + h]^2, membership tests and rotating-orbit detection.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inverter_doa/equilibria.hpp"

namespace idoa {

enum class BranchTermination { DomainExit, ArcLengthCap, TimeLimit, ConvergedToEquilibrium, ClosedLoop, Failed };

std::string to_string(BranchTermination t);

struct ManifoldBranch {
  Equilibrium source;  // type-1 saddle (possibly a 2pi translate)
  int direction = 1;   // side of the stable eigenvector
  std::vector<State2> polyline;
  BranchTermination termination = BranchTermination::Failed;
  /// Index into the source list passed to the tracer when the branch ended on an equilibrium.
  std::optional<std::size_t> end_equilibrium;
  std::string failure;
};

struct ManifoldOptions {
  double epsilon = 1e-4;                                    // rad
  double half_width = 3.141592653589793;                    // rad, assembly window
  double trace_half_width = 2.0 * 3.141592653589793;        // rad, tracing box
  double source_tol = 1e-3;                                 // rad, snap distance to a repelling equilibrium
  double sep_tol = 1e-4;                                    // rad, convergence test of unstable branches
  double unstable_t_max = 40.0;                             // s
  IntegratorSettings settings = default_settings();

  static IntegratorSettings default_settings() {
    IntegratorSettings s;
    s.t_max = 200.0;
    s.max_arc_length = 50.0;
    s.max_step_arc = 0.02;
    return s;
  }
};

/// Type-1 saddle translates (within the tracing box) whose unstable manifold
/// has a branch converging to `sep` itself, not to one of its translates.
std::vector<Equilibrium> boundary_saddles(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                                          const Equilibrium& sep, const ManifoldOptions& opt = {});

/// Backward-traces both stable branches of each saddle. `repellers` are the
/// equilibria (translates) on which a branch may terminate.
std::vector<ManifoldBranch> trace_stable_manifolds(const PlanarField& field, const std::vector<Equilibrium>& saddles,
                                                   const std::vector<Equilibrium>& repellers, const State2& center,
                                                   const ManifoldOptions& opt = {});

struct DOABoundary {
  Equilibrium sep;
  std::vector<ManifoldBranch> branches;
  std::vector<Equilibrium> saddles;
  /// Closed polygon, first vertex not repeated.
  std::vector<State2> closed_polygon;
  /// splice[i] marks segment i -> i+1 (cyclic) as a window-edge closure.
  std::vector<bool> splice;
  bool is_bounded = false;
  double half_width = 0.0;
  /// Boundary pieces strictly inside the face that are not part of its cycle
  /// (repellers whose whole neighbourhood drains to the SEP, detached curves).
  std::vector<State2> isolated_points;
  std::vector<std::vector<State2>> interior_curves;

  [[nodiscard]] double area() const;
};

/// Closes the traced branches into the face of the branch/window arrangement
/// that contains the SEP. Throws OpenBasin when no face encloses it.
DOABoundary assemble_doa(const Equilibrium& sep, const std::vector<ManifoldBranch>& branches,
                         const std::vector<Equilibrium>& repellers, double half_width);

/// Saddle selection + tracing + assembly. Assembles on [sep +- half_width]^2 and
/// falls back to the tracing box when the basin is bounded but overhangs that window.
DOABoundary compute_doa(const PlanarField& field, const std::vector<Equilibrium>& eqs, const Equilibrium& sep,
                        const ManifoldOptions& opt = {});

/// Type-2 / non-hyperbolic translates inside a box around `center`.
std::vector<Equilibrium> repeller_translates(const std::vector<Equilibrium>& eqs, const State2& center,
                                             double half_width);

struct Membership {
  bool inside = false;
  bool on_boundary = false;
  /// The point had to be reduced by a nonzero multiple of 2pi to reach the window.
  bool pole_slip = false;
};

Membership membership(const DOABoundary& doa, const State2& point, double boundary_tol = 1e-9);
/// Strictly inside the window polygon without 2pi reduction and off the boundary.
bool contains(const DOABoundary& doa, const State2& point);

/// Point-in-polygon (even-odd) for a closed polygon given without the repeated vertex.
bool point_in_polygon(const std::vector<State2>& poly, const State2& p);
double point_segment_distance(const State2& p, const State2& a, const State2& b);
double polygon_area(const std::vector<State2>& poly);
/// Symmetric Hausdorff distance between two closed polygons, vertex-to-segment.
double hausdorff_distance(const std::vector<State2>& a, const std::vector<State2>& b);

struct LimitCycle {
  std::vector<State2> polyline;  // one period, unwrapped
  double period = 0.0;
  std::array<int, 2> winding{};
};

struct LimitCycleOptions {
  double t_max = 60.0;     // s
  double chunk = 5.0;      // s per integration chunk
  double state_tol = 1e-5; // rad
  double period_tol = 1e-5;
  IntegratorSettings settings = default_settings();

  static IntegratorSettings default_settings() {
    IntegratorSettings s;
    s.dt = 1e-5;  // also sets the event time resolution (dt * 1e-3)
    s.rel_tol = 1e-10;
    s.abs_tol = 1e-12;
    s.max_arc_length = 1e9;
    s.max_step_arc = 0.05;
    return s;
  }
};

/// Poincare-section recurrence on delta1 = seed.delta1 (mod 2pi).
std::optional<LimitCycle> detect_limit_cycle(const PlanarField& field, const State2& seed,
                                             const LimitCycleOptions& opt = {});

/// CSV `delta1,delta2`, closed (last row repeats the first).
void write_polygon_csv(std::ostream& os, const std::vector<State2>& poly, bool close = true);
void write_doa_csv(std::ostream& os, const DOABoundary& doa);
void write_cycle_csv(std::ostream& os, const LimitCycle& cycle);
nlohmann::json to_json(const LimitCycle& cycle);
nlohmann::json to_json(const DOABoundary& doa);

}  // namespace idoa
