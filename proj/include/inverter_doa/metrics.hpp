#pragma once

// Stability metrics of a post-fault basin: critical clearing radius (CCR), the
// fault-on time to leave the CCR disk, membership-bisected clearing time,
// critical clearing angles and a quadratic Lyapunov estimate.

#include <functional>
#include <optional>

#include <json.hpp>

#include "inverter_doa/manifold.hpp"

namespace idoa {

/// Distance from the SEP to the nearest non-splice boundary point.
double ccr(const DOABoundary& doa);

struct TccrOptions {
  double t_max = 2.0;  // s
  IntegratorSettings settings = default_settings();

  static IntegratorSettings default_settings() {
    IntegratorSettings s;
    s.dt = 1e-4;  // event resolution 1e-7 s
    s.rel_tol = 1e-10;
    s.abs_tol = 1e-12;
    s.max_arc_length = 1e6;
    s.max_step_arc = 0.01;
    return s;
  }
};

struct TccrResult {
  double t = 0.0;  // s, +inf when the trajectory never leaves the disk
  /// The fault-on trajectory started outside the disk. `t` is then the first
  /// inside-to-outside crossing, or 0 if the trajectory never enters.
  bool started_outside = false;
  /// The trajectory came back into the disk after the reported exit.
  bool reentered = false;
  std::optional<State2> exit_state;
  Trajectory<2> trajectory;  // fault-on trajectory over [0, t_max]
};

/// Fault-on trajectory from `pre_sep` against the disk of radius `radius` around `post_sep`.
TccrResult t_ccr(const PlanarField& fault_on, const State2& pre_sep, const State2& post_sep, double radius,
                 const TccrOptions& opt = {});

struct CctResult {
  double t = 0.0;  // s
  bool bracketed = true;
};

/// Bisects the fault duration on [0, t_hi] with the predicate "fault-on state lies in the post-fault basin".
CctResult cct_bisection(const PlanarField& fault_on, const State2& pre_sep, const DOABoundary& post_doa, double t_hi,
                        double tol = 1e-4, const IntegratorSettings& settings = TccrOptions::default_settings());

/// Fault-on state at time t from `pre_sep`.
State2 fault_on_state(const PlanarField& fault_on, const State2& pre_sep, double t,
                      const IntegratorSettings& settings = TccrOptions::default_settings());

struct CcaResult {
  std::array<double, 2> proj{};
  std::array<std::optional<double>, 2> decoupled;
};

/// Per-axis extents of the basin beyond the SEP, and the frozen-partner single-machine angles.
CcaResult cca(const DOABoundary& doa, const GeneralizedCoefficients& coeffs);

struct LyapunovEstimate {
  Mat2 p;
  double level = 0.0;  // c* in (x - sep)' P (x - sep) <= c*
  bool capped = false; // c* hit the window cap
  [[nodiscard]] bool contains(const State2& sep, const State2& x) const;
  /// Boundary samples of the ellipse.
  [[nodiscard]] std::vector<State2> ellipse(const State2& sep, int n = 360) const;
};

/// Solves J'P + PJ = -I at the SEP and finds the largest sampled level set on
/// which the derivative of V stays negative. Throws NotApplicable when J is not Hurwitz.
LyapunovEstimate local_lyapunov_estimate(const PlanarField& field, const Equilibrium& sep, int sample_count = 720,
                                         double half_width = 3.141592653589793);
/// Same on an arbitrary planar field with Jacobian `j` at `sep`.
LyapunovEstimate local_lyapunov_estimate(const std::function<State2(const State2&)>& field, const Mat2& j,
                                         const State2& sep, int sample_count = 720,
                                         double half_width = 3.141592653589793);

/// Solution of J'P + PJ = -Q for symmetric P.
Mat2 solve_lyapunov(const Mat2& j, const Mat2& q);

/// Forward simulation reaches within `tol` of `sep` itself (not a 2pi translate) before `t_max`.
bool converges_to(const PlanarField& field, const State2& x0, const State2& sep, double t_max, double tol = 1e-3);

struct BasinAgreement {
  int total = 0;     // classified points
  int agree = 0;
  int in_band = 0;   // skipped, within the band of the boundary
  double fraction = 0.0;
  std::vector<State2> disagreements;
};

/// Compares DOA membership with forward simulation on a grid over [sep +- pi]^2
/// (or `grid`^2 uniform samples when `seed` is given), skipping a band around the boundary.
BasinAgreement basin_agreement(const PlanarField& field, const DOABoundary& doa, int grid = 41, double band = 0.05,
                               double t_max = 10.0, std::optional<unsigned> seed = std::nullopt);

struct StabilityReport {
  std::optional<double> ccr;
  std::optional<TccrResult> t_ccr;
  std::optional<CctResult> cct;
  std::optional<CcaResult> cca;
  std::optional<LyapunovEstimate> lyapunov;
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json to_json(const StabilityReport& r);

}  // namespace idoa
