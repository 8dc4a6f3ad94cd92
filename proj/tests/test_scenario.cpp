#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "inverter_doa/error.hpp"
#include "inverter_doa/portrait.hpp"
#include "inverter_doa/scenario.hpp"

using namespace idoa;
using nlohmann::json;

namespace {

const std::filesystem::path kStudies = STUDY_DIR;

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("inverter_doa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Cheap analysis set for tests that only exercise plumbing.
json light(json doc) {
  doc["analysis"]["cct"] = false;
  doc["analysis"]["lyapunov"] = false;
  doc["analysis"]["full_order_check"] = false;
  doc["analysis"]["spo"] = false;
  return doc;
}

}  // namespace

TEST_CASE("set_path edits existing fields and parses values") {
  json doc = {{"network", {{"xg", 0.35}}}, {"ibr2", {{"kind", "GFL"}}}};
  set_path(doc, "network.xg", std::string("0.4"));
  CHECK(doc["network"]["xg"].get<double>() == 0.4);
  set_path(doc, "ibr2.kind", std::string("GSP"));
  CHECK(doc["ibr2"]["kind"] == "GSP");
  CHECK_THROWS_AS(set_path(doc, "ibr2.m_q", std::string("2")), InvalidArgument);
  set_path(doc, "ibr2.m_q", std::string("2"), true);
  CHECK(doc["ibr2"]["m_q"].get<double>() == 2.0);
  CHECK_THROWS_AS(set_path(doc, "network.xg.deeper", std::string("1")), InvalidArgument);
  CHECK_THROWS_AS(set_path(doc, "network..xg", std::string("1")), InvalidArgument);
}

TEST_CASE("study parsing validates keys and analysis dependencies") {
  const json doc = read_json(kStudies / "a1_two_gfl_xg035.json");
  CHECK_NOTHROW(parse_study(doc));
  json typo = doc;
  typo["network"]["xgg"] = 0.4;
  CHECK_THROWS_AS(parse_study(typo), InvalidArgument);
  json dep = doc;
  dep["analysis"]["doa"] = false;
  CHECK_THROWS_AS(parse_study(dep), InvalidArgument);
  json neg = doc;
  neg["network"]["xg"] = -0.1;
  CHECK_THROWS(parse_study(neg));
  json sweep = doc;
  sweep["sweep"] = {{"kind", "parameter"}, {"parameter", "network.xg"}, {"values", json::array()}};
  CHECK_THROWS_AS(parse_study(sweep), InvalidArgument);
  json fm = doc;
  fm["solver"]["mode"] = "full_order";
  CHECK_THROWS_AS(parse_study(fm), InvalidArgument);
}

TEST_CASE("matched gain follows the post-fault reactance of the slot") {
  json doc = read_json(kStudies / "a2_statcom_gsp_mq1.json");
  const double k = doc["ibr2"]["matched_k_gfm"].get<double>();
  const Study line = parse_study(doc);
  // Line fault: post-fault xg is twice the pre-fault value.
  CHECK(line.base.ibr2.k_pll == doctest::Approx(k / (0.15 + 2 * 0.3)));
  doc["fault"] = {{"kind", "VoltageSag"}, {"ug_during", 0.1}};
  const Study sag = parse_study(doc);
  CHECK(sag.base.ibr2.k_pll == doctest::Approx(k / (0.15 + 0.3)));
  json gfm = read_json(kStudies / "a2_statcom_gfm.json");
  gfm["ibr2"]["matched_k_gfm"] = 1.0;
  CHECK_THROWS_AS(parse_study(gfm), InvalidArgument);
}

TEST_CASE("override is equivalent to editing the file") {
  const auto dir = scratch("override");
  json edited = read_json(kStudies / "a1_two_gfl_xg035.json");
  edited["network"]["xg"] = 0.4;
  std::ofstream(dir / "edited.json") << edited.dump(2);
  const auto a = run_point(load_study(kStudies / "a1_two_gfl_xg035.json", {"network.xg=0.4"}));
  const auto b = run_point(load_study(dir / "edited.json"));
  CHECK(to_json(a, false).dump() == to_json(b, false).dump());
  CHECK(a.report.ccr);
  CHECK_THROWS_AS(load_study(kStudies / "a1_two_gfl_xg035.json", {"network.bogus=1"}), InvalidArgument);
  CHECK_THROWS_AS(load_study(kStudies / "a1_two_gfl_xg035.json", {"network.xg"}), InvalidArgument);
}

TEST_CASE("location sweep binds x1 plus post-fault xg") {
  for (const char* kind : {"VoltageSag", "LineFault"}) {
    json doc = read_json(kStudies / "location_gfm.json");
    if (std::string(kind) == "LineFault") doc["fault"] = {{"kind", "LineFault"}, {"position_frac", 0.5}, {"r_fault", 0.01}};
    const Study st = parse_study(doc);
    const auto pts = expand_sweep(st);
    REQUIRE(pts.size() == 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto post = apply_fault(pts[i].base, pts[i].fault).post_fault;
      CHECK(pts[i].base.network.x1 == doctest::Approx(st.sweep->values[i]));
      CHECK(post.network.x1 + post.network.xg == doctest::Approx(1.1));
      CHECK_FALSE(pts[i].document.contains("sweep"));
    }
  }
  json bad = read_json(kStudies / "location_gfm.json");
  bad["sweep"]["positions"] = {0.5, 1.2};
  CHECK_THROWS_AS(parse_study(bad), InvalidArgument);
}

TEST_CASE("single-point sweep equals the point run alone") {
  json doc = light(read_json(kStudies / "a1_two_gfl_xg035.json"));
  const auto alone = run_point(parse_study(doc));
  doc["sweep"] = {{"kind", "parameter"}, {"parameter", "network.xg"}, {"values", {0.35}}};
  const auto swept = run_study(parse_study(doc));
  REQUIRE(swept.points.size() == 1);
  json a = to_json(alone, false), b = to_json(swept.points[0], false);
  CHECK(b["sweep_value"].get<double>() == 0.35);
  b["sweep_value"] = nullptr;
  CHECK(a.dump() == b.dump());
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
  json doc = light(read_json(kStudies / "a3_gfm_gsp_mq_sweep.json"));
  const Study st = parse_study(doc);
  const auto serial = to_json(run_study(st, 1), false).dump();
  const auto again = to_json(run_study(st, 1), false).dump();
  const auto parallel = to_json(run_study(st, 3), false).dump();
  CHECK(serial == again);
  CHECK(serial == parallel);
  // Point 1 of the sweep, run on its own.
  json one = doc;
  one.erase("sweep");
  one["ibr2"]["m_q"] = 2.0;
  json alone = to_json(run_point(parse_study(one)), false);
  json in_sweep = json::parse(serial)["points"][1];
  in_sweep["sweep_value"] = nullptr;
  CHECK(alone.dump() == in_sweep.dump());
}

TEST_CASE("every result row carries its resolved parameters") {
  const Study st = parse_study(light(read_json(kStudies / "location_gfm.json")));
  const auto r = run_study(st, 2);
  REQUIRE(r.points.size() == 3);
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    CHECK_FALSE(p.parameters.contains("sweep"));
    CHECK(p.parameters["network"]["x1"].get<double>() == doctest::Approx(*p.sweep_value));
    CHECK(p.report.provenance.contains("scenario_hash"));
  }
}

TEST_CASE("missing SEP is recorded without aborting the sweep") {
  const Study st = parse_study(light(read_json(kStudies / "location_gsp.json")));
  const auto r = run_study(st, 2);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[2].outcome == Outcome::NoSep);
  CHECK_FALSE(r.points[2].doa);
  CHECK(r.points[0].outcome == Outcome::Ok);
  CHECK(r.points[0].doa);
  std::ostringstream os;
  write_sweep_summary(os, r);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "sweep_value,ccr,t_ccr,cct,sep_d1,sep_d2,outcome");
  int rows = 0;
  std::string last;
  while (std::getline(is, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 3);
  CHECK(last == "0.9,,,,,,no_sep");
}

TEST_CASE("identical systems have zero basin distance") {
  const Study gsp = parse_study(light(read_json(kStudies / "a2_statcom_gsp_mq4.json")));
  const auto d = gsp_gfm_convergence(gsp, gsp, {4.0});
  REQUIRE(d.size() == 1);
  REQUIRE(d[0]);
  CHECK(*d[0] == 0.0);
  const Study gfm = parse_study(read_json(kStudies / "a2_statcom_gfm.json"));
  CHECK_THROWS_AS(gsp_gfm_convergence(gfm, gfm, {1.0}), InvalidArgument);
}

TEST_CASE("outputs and portrait layers") {
  const auto dir = scratch("outputs");
  const Study st = parse_study(read_json(kStudies / "a1_two_gfl_xg040.json"));
  const auto r = run_study(st);
  write_outputs(r, dir);
  for (const char* f : {"report.json", "sweep_summary.csv", "doa_0.csv", "trajectory_0.csv", "cycle_0.csv"})
    CHECK(std::filesystem::exists(dir / f));
  const json rep = read_json(dir / "report.json");
  CHECK(rep["points"][0]["outcome"] == "ok");
  CHECK(rep["points"][0].contains("timing"));

  const auto files = write_portrait(r.points[0], dir, "portrait_0");
  CHECK(slurp(dir / "portrait_0_doa.csv") == slurp(dir / "doa_0.csv"));
  const std::string svg = slurp(dir / "portrait_0.svg");
  for (const char* id : {"id=\"doa\"", "id=\"branches\"", "id=\"ccr\"", "id=\"fault_on\"", "id=\"spo\"",
                         "id=\"equilibria\""})
    CHECK(svg.find(id) != std::string::npos);
  CHECK(svg.find("no SEP") == std::string::npos);
  CHECK(files.size() >= 8);
}

TEST_CASE("portrait of a case without SEP shows only equilibria and a note") {
  const Study st = parse_study(light(read_json(kStudies / "location_gsp.json")));
  const auto pts = expand_sweep(st);
  const auto p = run_point(pts[2]);
  REQUIRE(p.outcome == Outcome::NoSep);
  const std::string svg = render_portrait_svg(p);
  CHECK(svg.find("no SEP") != std::string::npos);
  CHECK(svg.find("id=\"equilibria\"") != std::string::npos);
  CHECK(svg.find("id=\"doa\"") == std::string::npos);
  CHECK(svg.find("id=\"ccr\"") == std::string::npos);
}
