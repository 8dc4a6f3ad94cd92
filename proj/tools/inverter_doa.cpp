// Command-line front end: study files in, one JSON document out.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "inverter_doa/error.hpp"
#include "inverter_doa/portrait.hpp"
#include "inverter_doa/scenario.hpp"

using namespace idoa;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNoSep = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string study;
  std::string out;
  std::vector<std::string> sets;
  int workers = default_workers();
  std::optional<unsigned> seed;
  std::string format = "json";
  bool no_timing = false;
};

Study load(const Common& c, std::vector<std::string> extra = {}) {
  std::vector<std::string> sets = c.sets;
  if (c.seed) sets.push_back("analysis.oracle_seed=" + std::to_string(*c.seed));
  sets.insert(sets.end(), extra.begin(), extra.end());
  return load_study(c.study, sets);
}

int exit_code(const std::vector<PointResult>& pts) {
  int code = kExitOk;
  for (const auto& p : pts) {
    if (p.outcome == Outcome::NumericalFailure) return kExitNumerical;
    if (p.outcome == Outcome::InvalidInput) code = std::max(code, kExitInvalid);
    if (p.outcome == Outcome::NoSep && code == kExitOk) code = kExitNoSep;
  }
  return code;
}

std::filesystem::path out_dir(const Common& c, const Study& s) {
  if (!c.out.empty()) return c.out;
  if (s.document.contains("outputs") && s.document["outputs"].contains("dir"))
    return s.document["outputs"]["dir"].get<std::string>();
  return "out/" + s.name;
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

// Only the named analyses, everything else switched off.
std::vector<std::string> only(std::initializer_list<const char*> keep) {
  std::vector<std::string> sets;
  for (const char* k : {"doa", "ccr", "t_ccr", "cct", "cca", "lyapunov", "spo", "full_order_check", "basin_oracle"}) {
    bool on = false;
    for (const char* x : keep) on = on || std::string(k) == x;
    sets.push_back(std::string("analysis.") + k + (on ? "=true" : "=false"));
  }
  return sets;
}

int cmd_equilibria(const Common& c) {
  const Study s = load(c, only({}));
  const auto p = run_point(s);
  std::vector<json> seps;
  for (const auto& e : p.eq_post)
    if (e.kind == EquilibriumKind::SEP) seps.push_back(to_json(e));
  emit({{"outcome", to_string(p.outcome)},
        {"message", p.message},
        {"pre_fault", equilibria_to_json(p.eq_pre)},
        {"fault_on", equilibria_to_json(p.eq_fault_on)},
        {"post_fault", equilibria_to_json(p.eq_post)},
        {"post_fault_seps", seps},
        {"post_sep", p.post_sep ? to_json(*p.post_sep) : json(nullptr)}});
  return exit_code({p});
}

int cmd_doa(const Common& c) {
  const Study s = load(c, only({"doa"}));
  const auto p = run_point(s);
  if (!c.out.empty() && p.doa) {
    std::filesystem::create_directories(c.out);
    std::ofstream f(std::filesystem::path(c.out) / "doa_0.csv");
    write_doa_csv(f, *p.doa);
  }
  if (c.format == "csv") {
    if (p.doa) write_doa_csv(std::cout, *p.doa);
  } else {
    emit({{"outcome", to_string(p.outcome)},
          {"message", p.message},
          {"doa", p.doa ? to_json(*p.doa) : json(nullptr)}});
  }
  return exit_code({p});
}

int cmd_ccr(const Common& c) {
  const Study s = load(c, only({"doa", "ccr", "t_ccr", "cct"}));
  const auto p = run_point(s);
  const json rep = to_json(p.report);
  json j = {{"outcome", to_string(p.outcome)},    {"message", p.message},
            {"ccr", rep["ccr"]},                  {"t_ccr", rep["t_ccr"]},
            {"cct", rep["cct"]},                  {"post_sep", p.post_sep ? json::array({p.post_sep->state[0], p.post_sep->state[1]}) : json(nullptr)}};
  if (rep.contains("t_ccr_started_outside")) j["t_ccr_started_outside"] = rep["t_ccr_started_outside"];
  if (c.format == "csv") {
    std::cout << "ccr,t_ccr,cct\n" << j["ccr"].dump() << ',' << j["t_ccr"].dump() << ',' << j["cct"].dump() << '\n';
  } else {
    emit(j);
  }
  return exit_code({p});
}

int cmd_simulate(const Common& c, std::optional<double> t_clear, double horizon) {
  std::vector<std::string> extra = only({});
  if (t_clear) extra.push_back("analysis.clearing_times=[" + json(*t_clear).dump() + "]");
  extra.push_back("analysis.post_fault_horizon=" + json(horizon).dump());
  const Study s = load(c, extra);
  if (s.analysis.clearing_times.empty()) throw InvalidArgument("simulate: give --t-clear or analysis.clearing_times");
  const auto p = run_point(s);
  if (!c.out.empty() && !p.clearing_runs.empty()) {
    StudyResult r{s.name, {p}, json::object()};
    write_outputs(r, c.out);
  }
  if (c.format == "csv") {
    if (!p.clearing_runs.empty()) {
      const auto& run = p.clearing_runs.front();
      Trajectory<2> joined = run.fault_on;
      for (std::size_t k = 1; k < run.post_fault.samples.size(); ++k)
        joined.samples.push_back({run.t_clear + run.post_fault.samples[k].t, run.post_fault.samples[k].x});
      write_trajectory_csv(std::cout, joined);
    }
  } else {
    json runs = json::array();
    for (const auto& run : p.clearing_runs)
      runs.push_back({{"t_clear", run.t_clear},
                      {"clearing_state", {run.fault_on.final_state()[0], run.fault_on.final_state()[1]}},
                      {"final_state", {run.post_fault.final_state()[0], run.post_fault.final_state()[1]}},
                      {"converged", run.converged},
                      {"samples", run.fault_on.samples.size() + run.post_fault.samples.size()}});
    emit({{"outcome", to_string(p.outcome)}, {"message", p.message}, {"runs", runs}});
  }
  return exit_code({p});
}

bool output_flag(const Study& s, const char* key) {
  const auto& d = s.document;
  return !d.contains("outputs") || d["outputs"].value(key, true);
}

int cmd_study(const Common& c, bool require_sweep) {
  const Study s = load(c);
  if (require_sweep && !s.sweep) throw InvalidArgument("sweep: the study file has no sweep block");
  const auto r = run_study(s, c.workers);
  const auto dir = out_dir(c, s);
  write_outputs(r, dir, output_flag(s, "trajectories"));
  if (output_flag(s, "portrait") && s.analysis.doa)
    for (std::size_t i = 0; i < r.points.size(); ++i) write_portrait(r.points[i], dir, "portrait_" + std::to_string(i));
  if (c.format == "csv") {
    write_sweep_summary(std::cout, r);
  } else {
    emit(to_json(r, !c.no_timing));
  }
  return exit_code(r.points);
}

int cmd_portrait(const Common& c) {
  const Study s = load(c);
  if (!s.analysis.doa) throw InvalidArgument("portrait needs the basin: enable analysis.doa (computed by the `doa` subcommand)");
  const auto r = run_study(s, c.workers);
  const auto dir = out_dir(c, s);
  write_outputs(r, dir);
  json files = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (const auto& f : write_portrait(r.points[i], dir, "portrait_" + std::to_string(i))) files.push_back(f.string());
  emit({{"name", r.name}, {"files", files}});
  return exit_code(r.points);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-of-attraction analysis of two-inverter infinite-bus systems"};
  app.require_subcommand(1);
  Common c;
  std::optional<double> t_clear;
  double horizon = 3.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--study", c.study, "Study file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--set", c.sets, "Override a study field, key=value (repeatable)");
    sub->add_option("--workers", c.workers, "Sweep worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "Seed for random basin-oracle sampling");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--no-timing", c.no_timing, "Omit timing metadata from the JSON output");
  };
  auto* eq = app.add_subcommand("equilibria", "Equilibria of the pre-fault, fault-on and post-fault systems");
  auto* doa = app.add_subcommand("doa", "Post-fault domain of attraction");
  auto* ccr = app.add_subcommand("ccr", "Critical clearing radius, disk-exit time and clearing time");
  auto* sim = app.add_subcommand("simulate", "Fault-on then post-fault trajectory");
  auto* study = app.add_subcommand("study", "Full pipeline with persisted outputs");
  auto* sweep = app.add_subcommand("sweep", "Full pipeline over the sweep block");
  auto* portrait = app.add_subcommand("portrait", "SVG phase portraits with CSV layers");
  for (auto* sub : {eq, doa, ccr, sim, study, sweep, portrait}) add_common(sub);
  sim->add_option("--t-clear", t_clear, "Fault duration (s)")->check(CLI::NonNegativeNumber);
  sim->add_option("--horizon", horizon, "Post-fault horizon (s)")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (eq->parsed()) return cmd_equilibria(c);
    if (doa->parsed()) return cmd_doa(c);
    if (ccr->parsed()) return cmd_ccr(c);
    if (sim->parsed()) return cmd_simulate(c, t_clear, horizon);
    if (study->parsed()) return cmd_study(c, false);
    if (sweep->parsed()) return cmd_study(c, true);
    if (portrait->parsed()) return cmd_portrait(c);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
