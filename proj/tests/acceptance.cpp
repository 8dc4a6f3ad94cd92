// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "fixtures.hpp"
#include "inverter_doa/scenario.hpp"

using namespace idoa;

namespace {

const std::filesystem::path kStudies = STUDY_DIR;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

std::string num(double v, int prec = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

bool within(double v, double ref, double rel) { return std::abs(v - ref) <= rel * std::abs(ref); }

Study study(const std::string& file, std::vector<std::string> sets = {}) { return load_study(kStudies / file, sets); }

struct Timed {
  StudyResult result;
  double seconds = 0.0;
};

Timed run_timed(const Study& s) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t{run_study(s), 0.0};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

double t_ccr_of(const PointResult& p) { return p.report.t_ccr ? p.report.t_ccr->t : std::nan(""); }
double ccr_of(const PointResult& p) { return p.report.ccr.value_or(std::nan("")); }

// CCR / t_ccr against reference values with a relative tolerance.
void check_pair(Verdict& v, const std::string& label, const PointResult& p, double ccr_ref, double tccr_ref) {
  const double c = ccr_of(p), t = t_ccr_of(p);
  v.require(within(c, ccr_ref, 0.1), label + " CCR " + num(c) + " vs " + num(ccr_ref));
  v.require(within(t, tccr_ref, 0.1), label + " t_ccr " + num(t) + " vs " + num(tccr_ref));
}

void report(int id, const Verdict& v, int& failures) {
  std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " | " << v.detail.str() << std::endl;
  if (!v.pass) ++failures;
}

Mat2 fd_jacobian(const PlanarField& f, const State2& x) {
  const double h = 1e-6;
  Mat2 j;
  const State2 d1 = (1.0 / (2 * h)) * (f(x + State2{h, 0}) - f(x - State2{h, 0}));
  const State2 d2 = (1.0 / (2 * h)) * (f(x + State2{0, h}) - f(x - State2{0, h}));
  j.a11 = d1[0];
  j.a21 = d1[1];
  j.a12 = d2[0];
  j.a22 = d2[1];
  return j;
}

}  // namespace

int main() {
  int failures = 0;
  std::cout << std::unitbuf;

  // Criteria 1-3: two GFL inverters.
  const auto a1_035 = run_timed(study("a1_two_gfl_xg035.json"));
  const auto a1_040 = run_timed(study("a1_two_gfl_xg040.json"));
  const auto& p035 = a1_035.result.points.at(0);
  const auto& p040 = a1_040.result.points.at(0);
  {
    Verdict v;
    check_pair(v, "xg=0.35", p035, 0.90, 0.212);
    check_pair(v, "xg=0.4", p040, 0.53, 0.131);
    v.require(a1_035.seconds < 10.0 && a1_040.seconds < 10.0,
              "runtime " + num(a1_035.seconds, 2) + " s / " + num(a1_040.seconds, 2) + " s");
    report(1, v, failures);
  }
  {
    Verdict v;
    const bool have = p035.report.cct.has_value();
    const double t = have ? p035.report.cct->t : std::nan("");
    v.require(have && p035.report.cct->bracketed && t >= 0.212 && t < 0.25,
              "cct " + num(t, 5) + " s in [0.212, 0.25)");
    report(2, v, failures);
  }
  {
    Verdict v;
    v.require(p040.cycle.has_value(), "limit cycle found");
    if (p040.cycle && p040.doa) {
      const auto& c = *p040.cycle;
      v.require(std::abs(c.winding[0]) == 1 && c.winding[1] == 0,
                "winding (" + std::to_string(c.winding[0]) + "," + std::to_string(c.winding[1]) + ")");
      int inside = 0;
      for (const auto& x : c.polyline) inside += contains(*p040.doa, x) ? 1 : 0;
      v.require(inside == 0, std::to_string(inside) + " of " + std::to_string(c.polyline.size()) +
                                 " cycle points in the basin, period " + num(c.period) + " s");
    }
    report(3, v, failures);
  }

  // Criterion 4: STATCOM comparison.
  const auto a2_gfm = run_timed(study("a2_statcom_gfm.json"));
  const auto a2_mq1 = run_timed(study("a2_statcom_gsp_mq1.json"));
  const auto a2_mq4 = run_timed(study("a2_statcom_gsp_mq4.json"));
  {
    Verdict v;
    check_pair(v, "GFM", a2_gfm.result.points.at(0), 0.65, 0.28);
    check_pair(v, "GSP m_q=1", a2_mq1.result.points.at(0), 0.27, 0.155);
    check_pair(v, "GSP m_q=4", a2_mq4.result.points.at(0), 0.66, 0.28);
    report(4, v, failures);
  }

  // Criterion 5: GFM + GSP droop sweep.
  const auto a3 = run_timed(study("a3_gfm_gsp_mq_sweep.json"));
  {
    Verdict v;
    const double ref[3] = {0.15, 0.31, 0.45};
    const auto& pts = a3.result.points;
    v.require(pts.size() == 3, "three sweep points");
    for (std::size_t i = 0; i < pts.size() && i < 3; ++i) {
      const double t = t_ccr_of(pts[i]);
      v.require(within(t, ref[i], 0.1), "m_q=" + num(*pts[i].sweep_value) + " t_ccr " + num(t) + " vs " + num(ref[i]));
    }
    bool increasing = pts.size() == 3;
    std::string ccrs;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ccrs += (i ? "," : "") + num(ccr_of(pts[i]));
      if (i > 0 && !(ccr_of(pts[i]) > ccr_of(pts[i - 1]))) increasing = false;
    }
    v.require(increasing, "CCR strictly increasing {" + ccrs + "}");
    report(5, v, failures);
  }

  // Criterion 6: GSP basin approaches the matched-gain GFM basin.
  {
    Verdict v;
    const std::vector<double> mq{1.0, 2.0, 4.0, 16.0};
    const auto d = gsp_gfm_convergence(study("a2_statcom_gsp_mq1.json"), study("a2_statcom_gfm.json"), mq, 4);
    bool all = true, monotone = true;
    std::string list;
    for (std::size_t i = 0; i < d.size(); ++i) {
      list += (i ? "," : "") + (d[i] ? num(*d[i]) : std::string("n/a"));
      all = all && d[i].has_value();
      if (i > 0 && d[i] && d[i - 1] && *d[i] > *d[i - 1]) monotone = false;
    }
    v.require(all, "Hausdorff distances for m_q {1,2,4,16}: {" + list + "} rad");
    v.require(monotone, "non-increasing");
    report(6, v, failures);
  }

  // Criterion 7: STATCOM location. A position without SEP has no basin and counts as CCR 0.
  const auto loc_gfm = run_timed(study("location_gfm.json"));
  const auto loc_gsp = run_timed(study("location_gsp.json"));
  {
    Verdict v;
    for (const auto* r : {&loc_gfm, &loc_gsp}) {
      const auto& pts = r->result.points;
      if (pts.size() != 3) {
        v.require(false, r->result.name + ": expected three positions");
        continue;
      }
      double c[3];
      for (int i = 0; i < 3; ++i) c[i] = pts[i].report.ccr.value_or(0.0);
      v.require(pts[1].report.ccr && c[1] > c[0] && c[1] > c[2],
                r->result.name + " CCR {" + num(c[0]) + "," + num(c[1]) + "," + num(c[2]) + "} at x1 {0.2,0.5,0.9}");
    }
    report(7, v, failures);
  }

  // Criterion 8: membership against forward simulation, every shipped scenario.
  std::vector<std::string> files{"a1_two_gfl_xg035.json", "a1_two_gfl_xg040.json", "a2_statcom_gfm.json",
                                 "a2_statcom_gsp_mq1.json", "a2_statcom_gsp_mq4.json", "a3_gfm_gsp_mq_sweep.json",
                                 "location_gfm.json", "location_gsp.json"};
  std::vector<PointResult> oracle_points;
  {
    Verdict v;
    double worst = 1.0, slowest = 0.0;
    int checked = 0, skipped = 0;
    for (const auto& f : files) {
      const auto r = run_study(study(f, {"analysis.basin_oracle=true"}), 4);
      for (const auto& p : r.points) {
        oracle_points.push_back(p);
        if (p.outcome == Outcome::NoSep) {
          ++skipped;
          continue;
        }
        ++checked;
        const double frac = p.oracle ? p.oracle->fraction : 0.0;
        worst = std::min(worst, frac);
        slowest = std::max(slowest, p.elapsed_s);
        if (frac < 0.98 || p.elapsed_s >= 120.0)
          v.require(false, r.name + (p.sweep_value ? "@" + num(*p.sweep_value) : "") + " agreement " + num(frac));
      }
    }
    v.require(checked > 0, std::to_string(checked) + " scenario points, worst agreement " + num(worst) +
                               ", slowest " + num(slowest, 2) + " s (" + std::to_string(skipped) +
                               " without SEP not applicable)");
    report(8, v, failures);
  }

  // Criterion 9: Jacobians, energy decrease, energy existence.
  {
    Verdict v;
    const auto states = fixtures::random_states(100, 9);
    int jac_bad = 0, jac_checked = 0;
    for (const auto& sys : fixtures::all_pairings()) {
      for (auto mode : {RhsMode::Exact, RhsMode::Generalized}) {
        const PlanarField f(sys, mode);
        for (const auto& x : states) {
          const Mat2 ja = f.jacobian(x), jf = fd_jacobian(f, x);
          const double scale = std::max({1.0, std::abs(ja.a11), std::abs(ja.a12), std::abs(ja.a21), std::abs(ja.a22)});
          const double err = std::max({std::abs(ja.a11 - jf.a11), std::abs(ja.a12 - jf.a12), std::abs(ja.a21 - jf.a21),
                                       std::abs(ja.a22 - jf.a22)});
          ++jac_checked;
          if (err > 1e-6 * scale) ++jac_bad;
        }
      }
    }
    v.require(jac_bad == 0, std::to_string(jac_checked - jac_bad) + "/" + std::to_string(jac_checked) +
                                " Jacobians within 1e-6");

    const TwoInverterSystem gfm_pair{InverterConfig::gfm(15.0, 0.4, 1.0), InverterConfig::gfm(10.0, 0.2, 1.05),
                                     {0.3, 0.4, 0.5, 1.0}};
    const auto e = energy_function(to_generalized(gfm_pair));
    double worst_rise = -std::numeric_limits<double>::infinity();
    if (e.exists) {
      IntegratorSettings s;
      s.t_max = 2.0;
      s.max_dt = 0.01;
      for (const auto& x0 : fixtures::random_states(50, 10, 3.0)) {
        const auto tr = integrate_system(gfm_pair, RhsMode::Exact, x0, s);
        for (std::size_t i = 1; i < tr.samples.size(); ++i)
          worst_rise = std::max(worst_rise, e.value(tr.samples[i].x) - e.value(tr.samples[i - 1].x));
      }
    }
    v.require(e.exists && worst_rise <= 1e-9, "GFM-GFM energy max step change " + num(worst_rise));

    int with_d = 0, wrong = 0;
    for (const auto& sys : fixtures::all_pairings()) {
      const auto c = to_generalized(sys);
      const bool gfl = sys.ibr1.kind == InverterKind::GFL || sys.ibr2.kind == InverterKind::GFL;
      if (gfl && (c.d1 != 0.0 || c.d2 != 0.0)) {
        ++with_d;
        if (energy_function(c).exists) ++wrong;
      }
    }
    v.require(with_d > 0 && wrong == 0, std::to_string(with_d) + " GFL pairings with D terms, energy rejected for " +
                                            std::to_string(with_d - wrong));
    report(9, v, failures);
  }

  // Criterion 10: ellipse inside basin inside projection box, t_ccr <= cct.
  {
    Verdict v;
    int points = 0, ell_bad = 0, box_bad = 0, order_bad = 0;
    for (const auto& p : oracle_points) {
      if (!p.doa || !p.post_sep) continue;
      ++points;
      const auto& sep = p.post_sep->state;
      if (p.report.lyapunov)
        for (const auto& x : p.report.lyapunov->ellipse(sep, 720)) ell_bad += contains(*p.doa, x) ? 0 : 1;
      if (p.report.cca) {
        const auto& poly = p.doa->closed_polygon;
        for (std::size_t i = 0; i < poly.size(); ++i)
          for (int k = 0; k < 4; ++k) {
            const State2 x = poly[i] + (k / 4.0) * (poly[(i + 1) % poly.size()] - poly[i]);
            for (int a = 0; a < 2; ++a) box_bad += x[a] - sep[a] <= p.report.cca->proj[a] + 1e-12 ? 0 : 1;
          }
      }
      // cct is the stable end of a 1e-4 s bisection bracket.
      if (p.report.t_ccr && p.report.cct && std::isfinite(p.report.t_ccr->t) && p.report.cct->bracketed)
        order_bad += p.report.t_ccr->t <= p.report.cct->t + 1e-4 ? 0 : 1;
    }
    v.require(ell_bad == 0, std::to_string(ell_bad) + " ellipse samples outside the basin");
    v.require(box_bad == 0, std::to_string(box_bad) + " boundary samples outside the projection box");
    v.require(order_bad == 0, std::to_string(order_bad) + " points with t_ccr > cct");
    v.require(points > 0, std::to_string(points) + " scenario points");
    report(10, v, failures);
  }

  // Not one of the ten: full-order PI check at k_i = 0.12 k_pll under a t_ccr-long fault.
  {
    bool ok = true;
    std::string d;
    for (const auto* p : {&p035, &p040}) {
      const bool conv = p->full_order && p->full_order->converged;
      ok = ok && conv;
      d += (d.empty() ? "" : "; ") + std::string(p == &p035 ? "xg=0.35" : "xg=0.4") + " " +
           (conv ? "settles" : "does not settle") +
           (p->full_order ? ", max deviation " + num(p->full_order->comparison.max_deviation) + " rad" : "");
    }
    std::cout << "supplementary full-order check: " << (ok ? "PASS" : "FAIL") << " | " << d << std::endl;
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
