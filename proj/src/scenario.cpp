#include "inverter_doa/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "inverter_doa/error.hpp"

namespace idoa {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> parts;
  std::stringstream ss(dotted);
  std::string p;
  while (std::getline(ss, p, '.')) {
    if (p.empty()) throw InvalidArgument("malformed parameter path '" + dotted + "'");
    parts.push_back(p);
  }
  if (parts.empty()) throw InvalidArgument("empty parameter path");
  return parts;
}

void check_keys(const json& j, const std::string& block, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InvalidArgument("'" + block + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InvalidArgument("unknown key '" + block + "." + k + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("wrong type for '") + key + "'");
  }
}

double xg_post_fault(const NetworkParams& net, const FaultSpec& fault) {
  return std::holds_alternative<LineFault>(fault.kind) ? fault.post_fault_xg_factor * net.xg : net.xg;
}

InverterConfig parse_inverter(const json& j, const std::string& block, double x_line, double xg_post) {
  check_keys(j, block,
             {"kind", "k_gfm", "p_ref", "v_mag", "k_pll", "k_i", "i_d", "m_q", "v_ref", "omega_limit", "matched_k_gfm"});
  if (!j.contains("kind")) throw InvalidArgument("'" + block + ".kind' is required");
  InverterConfig c;
  c.kind = inverter_kind_from_string(j.at("kind").get<std::string>());
  c.k_gfm = get_or(j, "k_gfm", 0.0);
  c.p_ref = get_or(j, "p_ref", 0.0);
  c.v_mag = get_or(j, "v_mag", 1.0);
  c.k_pll = get_or(j, "k_pll", 0.0);
  c.k_i = get_or(j, "k_i", 0.0);
  c.i_d = get_or(j, "i_d", 0.0);
  c.m_q = get_or(j, "m_q", 0.0);
  c.v_ref = get_or(j, "v_ref", 1.0);
  if (j.contains("omega_limit") && !j.at("omega_limit").is_null()) c.omega_limit = j.at("omega_limit").get<double>();
  if (j.contains("matched_k_gfm")) {
    if (!c.has_pll()) throw InvalidArgument("'" + block + ".matched_k_gfm' applies to PLL-based inverters only");
    // Equivalent gain of a GFM in the same slot of the post-fault network.
    c.k_pll = j.at("matched_k_gfm").get<double>() / (x_line + xg_post);
  }
  return c;
}

FaultSpec parse_fault(const json& j) {
  check_keys(j, "fault", {"kind", "position_frac", "r_fault", "ug_during", "t_start", "post_fault_xg_factor"});
  FaultSpec f;
  const auto kind = get_or<std::string>(j, "kind", "LineFault");
  if (kind == "LineFault") {
    f.kind = LineFault{get_or(j, "position_frac", 0.5), get_or(j, "r_fault", 0.0)};
  } else if (kind == "VoltageSag") {
    f.kind = VoltageSag{get_or(j, "ug_during", 0.1)};
  } else {
    throw InvalidArgument("unknown fault kind '" + kind + "'");
  }
  f.t_start = get_or(j, "t_start", 0.0);
  f.post_fault_xg_factor = get_or(j, "post_fault_xg_factor", 2.0);
  return f;
}

void apply_tolerances(IntegratorSettings& s, const json& j) {
  const auto method = get_or<std::string>(j, "method", "rk45");
  if (method == "rk45") {
    s.method = Method::RK45Adaptive;
  } else if (method == "rk4") {
    s.method = Method::RK4Fixed;
  } else {
    throw InvalidArgument("unknown solver.method '" + method + "'");
  }
  s.rel_tol = get_or(j, "rel_tol", s.rel_tol);
  s.abs_tol = get_or(j, "abs_tol", s.abs_tol);
}

SolverConfig parse_solver(const json& j) {
  check_keys(j, "solver",
             {"mode", "ideal_voltage_support", "method", "rel_tol", "abs_tol", "dt", "epsilon", "half_width",
              "trace_half_width", "max_arc_length", "equilibrium_grid", "tccr_t_max", "cycle_t_max",
              "lyapunov_samples"});
  SolverConfig s;
  s.mode = rhs_mode_from_string(get_or<std::string>(j, "mode", "exact"));
  if (s.mode == RhsMode::FullOrder) throw InvalidArgument("solver.mode must be a planar mode (exact or generalized)");
  s.exact.ideal_voltage_support = get_or(j, "ideal_voltage_support", false);
  s.equilibria.grid = get_or(j, "equilibrium_grid", s.equilibria.grid);
  s.manifold.epsilon = get_or(j, "epsilon", s.manifold.epsilon);
  s.manifold.half_width = get_or(j, "half_width", s.manifold.half_width);
  s.manifold.trace_half_width = get_or(j, "trace_half_width", s.manifold.trace_half_width);
  apply_tolerances(s.manifold.settings, j);
  s.manifold.settings.dt = get_or(j, "dt", s.manifold.settings.dt);
  s.manifold.settings.max_arc_length = get_or(j, "max_arc_length", s.manifold.settings.max_arc_length);
  s.tccr.t_max = get_or(j, "tccr_t_max", s.tccr.t_max);
  s.cycle.t_max = get_or(j, "cycle_t_max", s.cycle.t_max);
  s.lyapunov_samples = get_or(j, "lyapunov_samples", s.lyapunov_samples);
  return s;
}

json solver_to_json(const SolverConfig& s) {
  const auto& m = s.manifold.settings;
  return {{"mode", to_string(s.mode)},
          {"ideal_voltage_support", s.exact.ideal_voltage_support},
          {"method", m.method == Method::RK45Adaptive ? "rk45" : "rk4"},
          {"rel_tol", m.rel_tol},
          {"abs_tol", m.abs_tol},
          {"dt", m.dt},
          {"epsilon", s.manifold.epsilon},
          {"half_width", s.manifold.half_width},
          {"trace_half_width", s.manifold.trace_half_width},
          {"max_arc_length", m.max_arc_length},
          {"equilibrium_grid", s.equilibria.grid},
          {"tccr_t_max", s.tccr.t_max},
          {"cycle_t_max", s.cycle.t_max},
          {"lyapunov_samples", s.lyapunov_samples}};
}

AnalysisFlags parse_analysis(const json& j) {
  check_keys(j, "analysis",
             {"doa", "ccr", "t_ccr", "cct", "cca", "lyapunov", "spo", "full_order_check", "basin_oracle", "cct_t_hi",
              "clearing_times", "post_fault_horizon", "k_i_ratio", "full_order_horizon", "oracle_grid", "oracle_band",
              "oracle_t_max", "oracle_seed"});
  AnalysisFlags a;
  a.doa = get_or(j, "doa", a.doa);
  a.ccr = get_or(j, "ccr", a.ccr);
  a.t_ccr = get_or(j, "t_ccr", a.t_ccr);
  a.cct = get_or(j, "cct", a.cct);
  a.cca = get_or(j, "cca", a.cca);
  a.lyapunov = get_or(j, "lyapunov", a.lyapunov);
  a.spo = get_or(j, "spo", a.spo);
  a.full_order_check = get_or(j, "full_order_check", a.full_order_check);
  a.basin_oracle = get_or(j, "basin_oracle", a.basin_oracle);
  a.cct_t_hi = get_or(j, "cct_t_hi", a.cct_t_hi);
  a.clearing_times = get_or(j, "clearing_times", a.clearing_times);
  a.post_fault_horizon = get_or(j, "post_fault_horizon", a.post_fault_horizon);
  a.k_i_ratio = get_or(j, "k_i_ratio", a.k_i_ratio);
  a.full_order_horizon = get_or(j, "full_order_horizon", a.full_order_horizon);
  a.oracle_grid = get_or(j, "oracle_grid", a.oracle_grid);
  a.oracle_band = get_or(j, "oracle_band", a.oracle_band);
  a.oracle_t_max = get_or(j, "oracle_t_max", a.oracle_t_max);
  if (j.contains("oracle_seed") && !j.at("oracle_seed").is_null()) a.oracle_seed = j.at("oracle_seed").get<unsigned>();
  if ((a.ccr || a.cct || a.cca || a.spo || a.basin_oracle) && !a.doa)
    throw InvalidArgument("analysis: ccr, cct, cca, spo and basin_oracle require doa");
  if (a.t_ccr && !a.ccr) throw InvalidArgument("analysis: t_ccr requires ccr");
  for (double t : a.clearing_times)
    if (!(t >= 0.0)) throw InvalidArgument("analysis.clearing_times must be >= 0");
  return a;
}

std::optional<SweepSpec> parse_sweep(const json& j) {
  if (j.is_null()) return std::nullopt;
  check_keys(j, "sweep", {"kind", "parameter", "values", "positions", "total_x"});
  SweepSpec s;
  const auto kind = get_or<std::string>(j, "kind", "parameter");
  if (kind == "parameter") {
    s.kind = SweepSpec::Kind::Parameter;
    s.parameter = get_or<std::string>(j, "parameter", "");
    if (s.parameter.empty()) throw InvalidArgument("sweep.parameter is required");
    s.values = get_or(j, "values", std::vector<double>{});
  } else if (kind == "location") {
    s.kind = SweepSpec::Kind::Location;
    s.values = get_or(j, "positions", std::vector<double>{});
    s.total_x = get_or(j, "total_x", s.total_x);
    for (double x : s.values)
      if (!(x > 0.0 && x < s.total_x)) throw InvalidArgument("sweep positions must lie in (0, total_x)");
  } else {
    throw InvalidArgument("unknown sweep.kind '" + kind + "'");
  }
  if (s.values.empty()) throw InvalidArgument("sweep values are empty");
  for (double v : s.values)
    if (!std::isfinite(v)) throw InvalidArgument("sweep values must be finite");
  return s;
}

Trajectory<2> run_for(const PlanarField& f, const State2& x0, double t, const IntegratorSettings& base) {
  IntegratorSettings s = base;
  s.t_max = t;
  s.max_arc_length = std::numeric_limits<double>::infinity();
  if (t <= 0.0) {
    Trajectory<2> tr;
    tr.samples.push_back({0.0, x0});
    return tr;
  }
  return integrate<2>(f, x0, s);
}

json state_json(const State2& x) { return json::array({x[0], x[1]}); }

}  // namespace

void set_path(json& doc, const std::string& dotted, const json& value, bool create) {
  json* node = &doc;
  const auto parts = split_path(dotted);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object()) throw InvalidArgument("'" + dotted + "' does not address an object field");
    const bool last = i + 1 == parts.size();
    if (!node->contains(parts[i])) {
      if (!create) throw InvalidArgument("unknown parameter path '" + dotted + "'");
      (*node)[parts[i]] = last ? json() : json::object();
    }
    node = &(*node)[parts[i]];
  }
  *node = value;
}

void set_path(json& doc, const std::string& dotted, const std::string& value, bool create) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  set_path(doc, dotted, v, create);
}

Study parse_study(const json& doc) {
  check_keys(doc, "study",
             {"name", "description", "ibr1", "ibr2", "network", "fault", "solver", "outputs", "analysis", "sweep"});
  for (const char* k : {"ibr1", "ibr2", "network", "fault"})
    if (!doc.contains(k)) throw InvalidArgument(std::string("study is missing '") + k + "'");
  Study st;
  st.document = doc;
  st.name = get_or<std::string>(doc, "name", "study");
  const auto& n = doc.at("network");
  check_keys(n, "network", {"x1", "x2", "xg", "ug", "r1", "r2", "rg"});
  st.base.network = {get_or(n, "x1", 0.0), get_or(n, "x2", 0.0), get_or(n, "xg", 0.0), get_or(n, "ug", 1.0)};
  st.fault = parse_fault(doc.at("fault"));
  const double xg_post = xg_post_fault(st.base.network, st.fault);
  st.base.ibr1 = parse_inverter(doc.at("ibr1"), "ibr1", st.base.network.x1, xg_post);
  st.base.ibr2 = parse_inverter(doc.at("ibr2"), "ibr2", st.base.network.x2, xg_post);
  st.base.validate();
  st.fault.validate(st.base.network);
  st.solver = parse_solver(doc.value("solver", json::object()));
  st.analysis = parse_analysis(doc.value("analysis", json::object()));
  if (doc.contains("outputs")) check_keys(doc.at("outputs"), "outputs", {"dir", "trajectories", "portrait"});
  st.sweep = parse_sweep(doc.value("sweep", json()));
  return st;
}

Study load_study(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot open study file '" + file.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("study file '" + file.string() + "': " + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw InvalidArgument("override '" + o + "' is not key=value");
    // Known field names may be absent in the file; parse_study rejects unknown ones.
    set_path(doc, o.substr(0, eq), o.substr(eq + 1), true);
  }
  return parse_study(doc);
}

std::string document_hash(const json& doc) {
  const std::string s = doc.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Ok:
      return "ok";
    case Outcome::NoSep:
      return "no_sep";
    case Outcome::OpenBasin:
      return "open_basin";
    case Outcome::NumericalFailure:
      return "numerical_failure";
    case Outcome::InvalidInput:
      return "invalid_input";
  }
  return "?";
}

PointResult run_point(const Study& study) {
  const auto t0 = std::chrono::steady_clock::now();
  PointResult r;
  json params = study.document;
  params.erase("sweep");
  r.parameters = params;
  r.report.provenance = {{"scenario_hash", document_hash(params)}, {"solver", solver_to_json(study.solver)}};
  const auto& a = study.analysis;
  const auto& sv = study.solver;

  try {
    const auto faulted = apply_fault(study.base, study.fault);
    r.pre = study.base;
    r.fault_on = faulted.fault_on;
    r.post = faulted.post_fault;
    const PlanarField f_pre(r.pre, sv.mode, sv.exact);
    const PlanarField f_on(r.fault_on, sv.mode, sv.exact);
    const PlanarField f_post(r.post, sv.mode, sv.exact);
    r.eq_pre = find_equilibria(f_pre, sv.equilibria);
    r.eq_fault_on = find_equilibria(f_on, sv.equilibria);
    r.eq_post = find_equilibria(f_post, sv.equilibria);
    r.pre_sep = nearest_sep(r.eq_pre, {0.0, 0.0});
    if (!r.pre_sep) {
      r.outcome = Outcome::NoSep;
      r.message = "pre-fault system has no SEP";
    } else {
      r.post_sep = nearest_sep(r.eq_post, r.pre_sep->state);
      if (!r.post_sep) {
        r.outcome = Outcome::NoSep;
        r.message = "post-fault system has no SEP";
      }
    }

    if (r.post_sep) {
      const State2 pre = r.pre_sep->state;
      const State2 sep = r.post_sep->state;
      IntegratorSettings sim = sv.tccr.settings;
      sim.rel_tol = std::min(sim.rel_tol, sv.manifold.settings.rel_tol);
      sim.abs_tol = std::min(sim.abs_tol, sv.manifold.settings.abs_tol);

      if (a.doa) {
        try {
          r.doa = compute_doa(f_post, r.eq_post, *r.post_sep, sv.manifold);
        } catch (const OpenBasin& e) {
          r.outcome = Outcome::OpenBasin;
          r.message = e.what();
        }
      }
      if (r.doa) {
        if (a.ccr) r.report.ccr = ccr(*r.doa);
        if (a.t_ccr && r.report.ccr && *r.report.ccr > 0.0) {
          r.tccr_detail = t_ccr(f_on, pre, sep, *r.report.ccr, sv.tccr);
          r.report.t_ccr = *r.tccr_detail;
          r.report.t_ccr->trajectory = {};
        }
        if (a.cct) r.report.cct = cct_bisection(f_on, pre, *r.doa, a.cct_t_hi, 1e-4, sim);
        if (a.cca) {
          try {
            r.report.cca = cca(*r.doa, to_generalized(r.post));
          } catch (const UnsupportedCombination& e) {
            r.message += std::string(r.message.empty() ? "" : "; ") + e.what();
          }
        }
      }
      if (a.lyapunov) {
        try {
          r.report.lyapunov = local_lyapunov_estimate(f_post, *r.post_sep, sv.lyapunov_samples);
        } catch (const NotApplicable& e) {
          r.message += std::string(r.message.empty() ? "" : "; ") + e.what();
        }
      }

      for (double tc : a.clearing_times) {
        ClearingRun run;
        run.t_clear = tc;
        run.fault_on = run_for(f_on, pre, tc, sim);
        run.post_fault = run_for(f_post, run.fault_on.final_state(), a.post_fault_horizon, sim);
        run.converged = distance(run.post_fault.final_state(), sep) < 1e-2;
        r.clearing_runs.push_back(std::move(run));
      }

      if (a.spo && r.doa) {
        std::optional<State2> seed;
        for (const auto& run : r.clearing_runs) {
          if (!contains(*r.doa, run.fault_on.final_state())) {
            seed = run.fault_on.final_state();
            break;
          }
        }
        if (!seed) {
          const State2 beyond = sep + State2{std::numbers::pi, 0.0};
          if (!contains(*r.doa, beyond)) seed = beyond;
        }
        if (seed) r.cycle = detect_limit_cycle(f_post, *seed, sv.cycle);
      }

      if (a.full_order_check && r.report.t_ccr && std::isfinite(r.report.t_ccr->t) &&
          (r.pre.ibr1.has_pll() || r.pre.ibr2.has_pll())) {
        FullOrderResult fo;
        fo.t_fault = r.report.t_ccr->t;
        IntegratorSettings s = sim;
        s.max_step_arc = std::numeric_limits<double>::infinity();
        fo.comparison = reduced_vs_full_check(r.fault_on, r.post, pre, a.k_i_ratio, fo.t_fault, a.full_order_horizon, s);
        fo.converged = distance(project(fo.comparison.full_final), sep) < 1e-2;
        r.full_order = fo;
      }

      if (a.basin_oracle && r.doa)
        r.oracle = basin_agreement(f_post, *r.doa, a.oracle_grid, a.oracle_band, a.oracle_t_max, a.oracle_seed);
    }
  } catch (const NumericalFailure& e) {
    r.outcome = Outcome::NumericalFailure;
    r.message = e.what();
  } catch (const InvalidArgument& e) {
    r.outcome = Outcome::InvalidInput;
    r.message = e.what();
  } catch (const UnsupportedCombination& e) {
    r.outcome = Outcome::InvalidInput;
    r.message = e.what();
  } catch (const DegenerateFault& e) {
    r.outcome = Outcome::InvalidInput;
    r.message = e.what();
  }
  r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<Study> expand_sweep(const Study& study) {
  if (!study.sweep) {
    Study s = study;
    return {s};
  }
  std::vector<Study> out;
  const auto& sw = *study.sweep;
  for (double v : sw.values) {
    json doc = study.document;
    doc.erase("sweep");
    if (sw.kind == SweepSpec::Kind::Parameter) {
      set_path(doc, sw.parameter, json(v), true);
    } else {
      doc["network"]["x1"] = v;
      const double xg_post = sw.total_x - v;
      const bool line = std::holds_alternative<LineFault>(study.fault.kind);
      doc["network"]["xg"] = line ? xg_post / study.fault.post_fault_xg_factor : xg_post;
    }
    out.push_back(parse_study(doc));
  }
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("INVERTER_DOA_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

namespace {

std::vector<PointResult> run_points(const std::vector<Study>& points, int workers) {
  std::vector<PointResult> results(points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) results[i] = run_point(points[i]);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace

StudyResult run_study(const Study& study, int workers) {
  const auto points = expand_sweep(study);
  StudyResult r;
  r.name = study.name;
  r.points = run_points(points, workers);
  if (study.sweep)
    for (std::size_t i = 0; i < points.size(); ++i) r.points[i].sweep_value = study.sweep->values[i];
  r.provenance = {{"scenario_hash", document_hash(study.document)}, {"solver", solver_to_json(study.solver)}};
  return r;
}

StudyResult location_sweep(const Study& base, const std::vector<double>& positions, double total_x, int workers) {
  Study s = base;
  json doc = base.document;
  doc["sweep"] = {{"kind", "location"}, {"positions", positions}, {"total_x", total_x}};
  s = parse_study(doc);
  return run_study(s, workers);
}

std::vector<std::optional<double>> gsp_gfm_convergence(const Study& gsp, const Study& gfm,
                                                       const std::vector<double>& mq_values, int workers) {
  std::string slot;
  if (gsp.base.ibr1.kind == InverterKind::GSP) slot = "ibr1";
  if (gsp.base.ibr2.kind == InverterKind::GSP) slot = "ibr2";
  if (slot.empty()) throw InvalidArgument("gsp_gfm_convergence: the first study has no GSP slot");
  std::vector<Study> points;
  for (double m : mq_values) {
    json doc = gsp.document;
    doc.erase("sweep");
    doc[slot]["m_q"] = m;
    points.push_back(parse_study(doc));
  }
  json gdoc = gfm.document;
  gdoc.erase("sweep");
  points.push_back(parse_study(gdoc));
  const auto res = run_points(points, workers);
  const auto& ref = res.back();
  std::vector<std::optional<double>> out;
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    if (res[i].doa && ref.doa) {
      out.push_back(hausdorff_distance(res[i].doa->closed_polygon, ref.doa->closed_polygon));
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

json to_json(const PointResult& p, bool with_timing) {
  json j;
  j["sweep_value"] = p.sweep_value ? json(*p.sweep_value) : json(nullptr);
  j["outcome"] = to_string(p.outcome);
  j["message"] = p.message;
  j["parameters"] = p.parameters;
  j["equilibria"] = {{"pre_fault", equilibria_to_json(p.eq_pre)},
                     {"fault_on", equilibria_to_json(p.eq_fault_on)},
                     {"post_fault", equilibria_to_json(p.eq_post)}};
  j["fault_on_network"] = {{"ug", p.fault_on.network.ug}, {"xg", p.fault_on.network.xg}};
  j["post_fault_network"] = {{"ug", p.post.network.ug}, {"xg", p.post.network.xg}};
  j["pre_sep"] = p.pre_sep ? state_json(p.pre_sep->state) : json(nullptr);
  j["post_sep"] = p.post_sep ? state_json(p.post_sep->state) : json(nullptr);
  j["doa"] = p.doa ? to_json(*p.doa) : json(nullptr);
  j["report"] = to_json(p.report);
  if (p.tccr_detail && p.tccr_detail->exit_state) j["report"]["t_ccr_exit_state"] = state_json(*p.tccr_detail->exit_state);
  j["limit_cycle"] = p.cycle ? to_json(*p.cycle) : json(nullptr);
  json runs = json::array();
  for (const auto& c : p.clearing_runs)
    runs.push_back({{"t_clear", c.t_clear}, {"converged", c.converged}, {"clearing_state", state_json(c.fault_on.final_state())},
                    {"final_state", state_json(c.post_fault.final_state())}});
  j["clearing_runs"] = runs;
  if (p.full_order) {
    j["full_order"] = {{"t_fault", p.full_order->t_fault},
                       {"max_deviation", p.full_order->comparison.max_deviation},
                       {"converged", p.full_order->converged}};
  } else {
    j["full_order"] = nullptr;
  }
  if (p.oracle) {
    j["basin_oracle"] = {{"total", p.oracle->total},
                         {"agree", p.oracle->agree},
                         {"in_band", p.oracle->in_band},
                         {"fraction", p.oracle->fraction}};
  } else {
    j["basin_oracle"] = nullptr;
  }
  if (with_timing) j["timing"] = {{"elapsed_s", p.elapsed_s}};
  return j;
}

json to_json(const StudyResult& r, bool with_timing) {
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back(to_json(p, with_timing));
  return {{"name", r.name}, {"provenance", r.provenance}, {"points", pts}};
}

void write_sweep_summary(std::ostream& os, const StudyResult& r) {
  os << "sweep_value,ccr,t_ccr,cct,sep_d1,sep_d2,outcome\n" << std::setprecision(12);
  auto opt = [&os](const std::optional<double>& v) {
    if (v) os << *v;
  };
  for (const auto& p : r.points) {
    opt(p.sweep_value);
    os << ',';
    opt(p.report.ccr);
    os << ',';
    if (p.report.t_ccr) opt(p.report.t_ccr->t);
    os << ',';
    if (p.report.cct) opt(p.report.cct->t);
    os << ',';
    if (p.post_sep) os << p.post_sep->state[0] << ',' << p.post_sep->state[1];
    else os << ',';
    os << ',' << to_string(p.outcome) << '\n';
  }
}

void write_outputs(const StudyResult& r, const std::filesystem::path& dir, bool trajectories) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw InvalidArgument("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("report.json");
    f << to_json(r).dump(2) << '\n';
  }
  {
    auto f = open("sweep_summary.csv");
    write_sweep_summary(f, r);
  }
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    const std::string idx = std::to_string(i);
    if (p.doa) {
      auto f = open("doa_" + idx + ".csv");
      write_doa_csv(f, *p.doa);
    }
    if (trajectories && p.tccr_detail) {
      auto f = open("trajectory_" + idx + ".csv");
      write_trajectory_csv(f, p.tccr_detail->trajectory);
    }
    for (std::size_t k = 0; trajectories && k < p.clearing_runs.size(); ++k) {
      const auto& c = p.clearing_runs[k];
      Trajectory<2> joined = c.fault_on;
      for (std::size_t s = 1; s < c.post_fault.samples.size(); ++s)
        joined.samples.push_back({c.t_clear + c.post_fault.samples[s].t, c.post_fault.samples[s].x});
      auto f = open("trajectory_" + idx + "_clear" + std::to_string(k) + ".csv");
      write_trajectory_csv(f, joined);
    }
    if (p.cycle) {
      auto f = open("cycle_" + idx + ".csv");
      write_cycle_csv(f, *p.cycle);
    }
  }
}

}  // namespace idoa
