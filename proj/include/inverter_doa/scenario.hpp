#pragma once

// Study files, the end-to-end analysis pipeline and parameter sweeps.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inverter_doa/metrics.hpp"

namespace idoa {

struct AnalysisFlags {
  bool doa = true;
  bool ccr = true;
  bool t_ccr = true;
  bool cct = true;
  bool cca = true;
  bool lyapunov = true;
  bool spo = false;
  bool full_order_check = false;
  bool basin_oracle = false;

  double cct_t_hi = 1.0;  // s
  std::vector<double> clearing_times;  // s, post-fault trajectories to export
  double post_fault_horizon = 3.0;     // s
  double k_i_ratio = 0.12;
  double full_order_horizon = 5.0;     // s
  int oracle_grid = 41;
  double oracle_band = 0.05;           // rad
  double oracle_t_max = 10.0;          // s
  std::optional<unsigned> oracle_seed; // random sampling instead of the regular grid
};

struct SolverConfig {
  RhsMode mode = RhsMode::Exact;
  ExactOptions exact;
  EquilibriumOptions equilibria;
  ManifoldOptions manifold;
  TccrOptions tccr;
  LimitCycleOptions cycle;
  int lyapunov_samples = 720;
};

struct SweepSpec {
  enum class Kind { Parameter, Location };
  Kind kind = Kind::Parameter;
  std::string parameter;  // dotted path, Parameter sweeps
  std::vector<double> values;
  double total_x = 1.1;   // Location sweeps: x1 + post-fault xg
};

/// A study file after parsing. `document` is the JSON it came from (overrides applied).
struct Study {
  std::string name;
  TwoInverterSystem base;
  FaultSpec fault;
  AnalysisFlags analysis;
  SolverConfig solver;
  std::optional<SweepSpec> sweep;
  nlohmann::json document;
};

/// Sets the value at a dotted path (`network.xg`, `ibr2.m_q`). The path must exist
/// unless `create` is set. Values are parsed as JSON, falling back to a string.
void set_path(nlohmann::json& doc, const std::string& dotted, const std::string& value, bool create = false);
void set_path(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value, bool create = false);

Study parse_study(const nlohmann::json& doc);
Study load_study(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});

/// Hex FNV-1a digest of the canonical JSON dump.
std::string document_hash(const nlohmann::json& doc);

enum class Outcome { Ok, NoSep, OpenBasin, NumericalFailure, InvalidInput };
std::string to_string(Outcome o);

struct ClearingRun {
  double t_clear = 0.0;
  Trajectory<2> fault_on;
  Trajectory<2> post_fault;
  bool converged = false;  // ended at the post-fault SEP itself
};

struct FullOrderResult {
  double t_fault = 0.0;
  FullOrderComparison comparison;
  bool converged = false;
};

struct PointResult {
  std::optional<double> sweep_value;
  nlohmann::json parameters;  // fully resolved study document of this point
  TwoInverterSystem pre, fault_on, post;
  Outcome outcome = Outcome::Ok;
  std::string message;
  std::vector<Equilibrium> eq_pre, eq_fault_on, eq_post;
  std::optional<Equilibrium> pre_sep, post_sep;
  std::optional<DOABoundary> doa;
  StabilityReport report;
  std::optional<TccrResult> tccr_detail;
  std::vector<ClearingRun> clearing_runs;
  std::optional<LimitCycle> cycle;
  std::optional<FullOrderResult> full_order;
  std::optional<BasinAgreement> oracle;
  double elapsed_s = 0.0;
};

struct StudyResult {
  std::string name;
  std::vector<PointResult> points;
  nlohmann::json provenance;
};

/// Runs the whole pipeline on one resolved study (its sweep block is ignored).
PointResult run_point(const Study& study);

/// Runs the study, or each point of its sweep, on up to `workers` threads.
/// Result order follows the sweep order.
StudyResult run_study(const Study& study, int workers = 1);

/// Resolved study documents of each sweep point (a single point without a sweep).
std::vector<Study> expand_sweep(const Study& study);

/// Sweep over IBR1 line positions with x1 + post-fault xg = total_x.
StudyResult location_sweep(const Study& base, const std::vector<double>& positions, double total_x, int workers = 1);

/// Hausdorff distance between each GSP basin (one per m_q) and the GFM basin.
std::vector<std::optional<double>> gsp_gfm_convergence(const Study& gsp, const Study& gfm,
                                                       const std::vector<double>& mq_values, int workers = 1);

/// Worker count from INVERTER_DOA_WORKERS, or 1.
int default_workers();

nlohmann::json to_json(const PointResult& p, bool with_timing = true);
nlohmann::json to_json(const StudyResult& r, bool with_timing = true);

/// Writes report.json, doa_<i>.csv, trajectory_<i>.csv, cycle_<i>.csv and sweep_summary.csv.
void write_outputs(const StudyResult& r, const std::filesystem::path& dir, bool trajectories = true);

/// Columns: sweep_value, ccr, t_ccr, cct, sep_d1, sep_d2, outcome.
void write_sweep_summary(std::ostream& os, const StudyResult& r);

}  // namespace idoa
