#include "inverter_doa/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>

#include "inverter_doa/error.hpp"

namespace idoa {

namespace {

constexpr double kPi = std::numbers::pi;

double wrapped_distance(const State2& a, const State2& b) {
  return std::hypot(wrap_angle(a[0] - b[0]), wrap_angle(a[1] - b[1]));
}

struct Box {
  State2 lo, hi;

  [[nodiscard]] bool contains(const State2& p, double tol = 1e-12) const {
    return p[0] >= lo[0] - tol && p[0] <= hi[0] + tol && p[1] >= lo[1] - tol && p[1] <= hi[1] + tol;
  }
  [[nodiscard]] double width() const { return hi[0] - lo[0]; }
  [[nodiscard]] double height() const { return hi[1] - lo[1]; }

  // Moves a point that is numerically on the boundary exactly onto its nearest side.
  [[nodiscard]] State2 snap(const State2& p) const {
    State2 q{std::clamp(p[0], lo[0], hi[0]), std::clamp(p[1], lo[1], hi[1])};
    const double d[4] = {q[1] - lo[1], hi[0] - q[0], hi[1] - q[1], q[0] - lo[0]};
    const int side = static_cast<int>(std::min_element(d, d + 4) - d);
    if (side == 0) q[1] = lo[1];
    if (side == 1) q[0] = hi[0];
    if (side == 2) q[1] = hi[1];
    if (side == 3) q[0] = lo[0];
    return q;
  }

  // Counter-clockwise perimeter coordinate starting at the lower-left corner.
  [[nodiscard]] double perimeter_param(const State2& q) const {
    const double w = width(), h = height();
    const double d[4] = {std::abs(q[1] - lo[1]), std::abs(hi[0] - q[0]), std::abs(hi[1] - q[1]), std::abs(q[0] - lo[0])};
    const int side = static_cast<int>(std::min_element(d, d + 4) - d);
    switch (side) {
      case 0:
        return q[0] - lo[0];
      case 1:
        return w + (q[1] - lo[1]);
      case 2:
        return w + h + (hi[0] - q[0]);
      default:
        return 2 * w + h + (hi[1] - q[1]);
    }
  }

  [[nodiscard]] State2 inward_normal(const State2& q) const {
    const double d[4] = {std::abs(q[1] - lo[1]), std::abs(hi[0] - q[0]), std::abs(hi[1] - q[1]), std::abs(q[0] - lo[0])};
    const int side = static_cast<int>(std::min_element(d, d + 4) - d);
    static constexpr State2 n[4] = {{0, 1}, {-1, 0}, {0, -1}, {1, 0}};
    return n[side];
  }
};

// Liang-Barsky clip of segment a->b; returns the parameter interval inside the box.
std::optional<std::pair<double, double>> clip_segment(const Box& box, const State2& a, const State2& b) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a[0] - box.lo[0], box.hi[0] - a[0], a[1] - box.lo[1], box.hi[1] - a[1]};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

enum class EndKind { Perimeter, Source, Dangling };

struct EndRef {
  EndKind kind = EndKind::Dangling;
  std::size_t source = 0;
};

struct Curve {
  std::vector<State2> pts;
  EndRef a, b;
};

EndRef end_of(const ManifoldBranch& br) {
  if (br.termination == BranchTermination::ConvergedToEquilibrium && br.end_equilibrium)
    return {EndKind::Source, *br.end_equilibrium};
  return {EndKind::Dangling, 0};
}

std::vector<Curve> clip_curve(const Curve& c, const Box& box) {
  std::vector<Curve> out;
  std::optional<Curve> cur;
  const auto& P = c.pts;
  if (P.empty()) return out;
  if (box.contains(P[0])) cur = Curve{{P[0]}, c.a, {}};
  for (std::size_t i = 0; i + 1 < P.size(); ++i) {
    const State2& a = P[i];
    const State2& b = P[i + 1];
    const auto iv = clip_segment(box, a, b);
    if (!iv) {
      if (cur) {  // numerically inconsistent; close where we are
        cur->b = {EndKind::Perimeter, 0};
        cur->pts.back() = box.snap(cur->pts.back());
        out.push_back(std::move(*cur));
        cur.reset();
      }
      continue;
    }
    const auto [t0, t1] = *iv;
    if (!cur) {
      if (t1 - t0 <= 1e-15) continue;  // grazing contact
      const State2 q0 = box.snap(a + t0 * (b - a));
      cur = Curve{{q0}, {EndKind::Perimeter, 0}, {}};
    }
    if (t1 < 1.0) {
      const State2 q1 = box.snap(a + t1 * (b - a));
      if (distance(q1, cur->pts.back()) > 0.0) cur->pts.push_back(q1);
      cur->b = {EndKind::Perimeter, 0};
      if (cur->pts.size() >= 2) out.push_back(std::move(*cur));
      cur.reset();
    } else {
      cur->pts.push_back(b);
    }
  }
  if (cur) {
    cur->b = c.b;
    if (cur->pts.size() >= 2) out.push_back(std::move(*cur));
  }
  return out;
}

struct Graph {
  std::vector<State2> vpos;
  std::vector<bool> v_on_perimeter;
  struct Edge {
    int u, v;
    std::vector<State2> pts;
    bool splice;
  };
  std::vector<Edge> edges;

  int add_vertex(const State2& p, bool perimeter) {
    vpos.push_back(p);
    v_on_perimeter.push_back(perimeter);
    return static_cast<int>(vpos.size()) - 1;
  }
};

// Direction in which half-edge `pts` leaves its first point.
double departure_angle(const std::vector<State2>& pts, bool splice, bool at_perimeter, const Box& box) {
  const State2& o = pts.front();
  if (splice) {
    const State2 d = pts[1] - o;
    return std::atan2(d[1], d[0]);
  }
  if (at_perimeter) {
    const State2 n = box.inward_normal(o);
    return std::atan2(n[1], n[0]);
  }
  constexpr double r = 0.05;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (distance(pts[i], o) >= r) {
      const State2 d = pts[i] - o;
      return std::atan2(d[1], d[0]);
    }
  }
  const State2 d = pts.back() - o;
  return std::atan2(d[1], d[0]);
}

double polyline_distance(const State2& p, const std::vector<State2>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, point_segment_distance(p, pts[i], pts[i + 1]));
  if (pts.size() == 1) best = distance(p, pts[0]);
  return best;
}

}  // namespace

std::string to_string(BranchTermination t) {
  switch (t) {
    case BranchTermination::DomainExit:
      return "domain_exit";
    case BranchTermination::ArcLengthCap:
      return "arc_length_cap";
    case BranchTermination::TimeLimit:
      return "time_limit";
    case BranchTermination::ConvergedToEquilibrium:
      return "converged";
    case BranchTermination::ClosedLoop:
      return "closed_loop";
    case BranchTermination::Failed:
      return "failed";
  }
  return "?";
}

double point_segment_distance(const State2& p, const State2& a, const State2& b) {
  const State2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

bool point_in_polygon(const std::vector<State2>& poly, const State2& p) {
  bool in = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const State2& a = poly[i];
    const State2& b = poly[j];
    if ((a[1] > p[1]) != (b[1] > p[1])) {
      const double x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
      if (p[0] < x) in = !in;
    }
  }
  return in;
}

double polygon_area(const std::vector<State2>& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const State2& a = poly[i];
    const State2& b = poly[(i + 1) % n];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * s;
}

double hausdorff_distance(const std::vector<State2>& a, const std::vector<State2>& b) {
  auto one_way = [](const std::vector<State2>& p, const std::vector<State2>& q) {
    double h = 0.0;
    for (const auto& x : p) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < q.size(); ++i) d = std::min(d, point_segment_distance(x, q[i], q[(i + 1) % q.size()]));
      h = std::max(h, d);
    }
    return h;
  };
  if (a.empty() || b.empty()) throw InvalidArgument("hausdorff_distance: empty polygon");
  return std::max(one_way(a, b), one_way(b, a));
}

double DOABoundary::area() const { return std::abs(polygon_area(closed_polygon)); }

std::vector<Equilibrium> repeller_translates(const std::vector<Equilibrium>& eqs, const State2& center,
                                             double half_width) {
  std::vector<Equilibrium> out;
  const int m = static_cast<int>(std::ceil(half_width / kTwoPi)) + 1;
  for (const auto& e : eqs) {
    if (e.kind != EquilibriumKind::Type2UEP && e.kind != EquilibriumKind::NonHyperbolic) continue;
    for (int i = -m; i <= m; ++i) {
      for (int j = -m; j <= m; ++j) {
        const auto s = shifted(e, i, j);
        if (norm_inf(s.state - center) <= half_width) out.push_back(s);
      }
    }
  }
  return out;
}

std::vector<Equilibrium> boundary_saddles(const PlanarField& field, const std::vector<Equilibrium>& eqs,
                                          const Equilibrium& sep, const ManifoldOptions& opt) {
  std::vector<State2> seps;
  for (const auto& e : eqs)
    if (e.kind == EquilibriumKind::SEP) seps.push_back(e.state);
  seps.push_back(sep.state);

  Event<2> settle{"settle",
                  [&seps, &opt](double, const State2& x) {
                    double m = std::numeric_limits<double>::infinity();
                    for (const auto& s : seps) m = std::min(m, wrapped_distance(x, s));
                    return m - opt.sep_tol;
                  },
                  -1, true};
  IntegratorSettings s = opt.settings;
  s.t_max = opt.unstable_t_max;
  s.max_arc_length = std::numeric_limits<double>::infinity();
  s.max_step_arc = std::numeric_limits<double>::infinity();

  std::vector<Equilibrium> out;
  for (const auto& e : eqs) {
    if (e.kind != EquilibriumKind::Type1UEP) continue;
    for (int sgn : {1, -1}) {
      const State2 x0 = e.state + (sgn * opt.epsilon) * e.unstable_direction();
      Trajectory<2> traj;
      try {
        traj = integrate<2>(field, x0, s, Direction::Forward, {settle});
      } catch (const IntegrationFailure&) {
        continue;
      }
      if (!traj.terminal_event) continue;
      const State2 xe = traj.final_state();
      if (wrapped_distance(xe, sep.state) > 10.0 * opt.sep_tol) continue;
      const int n1 = static_cast<int>(std::lround((xe[0] - sep.state[0]) / kTwoPi));
      const int n2 = static_cast<int>(std::lround((xe[1] - sep.state[1]) / kTwoPi));
      const auto copy = shifted(e, -n1, -n2);
      if (norm_inf(copy.state - sep.state) > opt.trace_half_width) continue;
      const bool dup = std::any_of(out.begin(), out.end(), [&](const Equilibrium& q) {
        return distance(q.state, copy.state) < 1e-9;
      });
      if (!dup) out.push_back(copy);
    }
  }
  std::sort(out.begin(), out.end(), [](const Equilibrium& a, const Equilibrium& b) { return a.state < b.state; });
  return out;
}

std::vector<ManifoldBranch> trace_stable_manifolds(const PlanarField& field, const std::vector<Equilibrium>& saddles,
                                                   const std::vector<Equilibrium>& repellers, const State2& center,
                                                   const ManifoldOptions& opt) {
  if (!(opt.epsilon >= 1e-6 && opt.epsilon <= 1e-3)) throw InvalidArgument("epsilon must lie in [1e-6, 1e-3]");
  IntegratorSettings s = opt.settings;
  s.domain_box = opt.trace_half_width;

  std::vector<Event<2>> events;
  if (!repellers.empty()) {
    events.push_back({"repeller",
                      [&repellers, &opt](double, const State2& x) {
                        double m = std::numeric_limits<double>::infinity();
                        for (const auto& r : repellers) m = std::min(m, distance(x, r.state));
                        return m - opt.source_tol;
                      },
                      -1, true});
  }

  std::vector<ManifoldBranch> out;
  for (const auto& sd : saddles) {
    if (sd.kind != EquilibriumKind::Type1UEP) throw InvalidArgument("stable manifolds are traced from type-1 saddles only");
    for (int sgn : {1, -1}) {
      ManifoldBranch br;
      br.source = sd;
      br.direction = sgn;
      const State2 x0 = sd.state + (sgn * opt.epsilon) * sd.stable_direction();
      try {
        const auto traj = integrate<2>(field, x0, s, Direction::Backward, events, center);
        br.polyline.reserve(traj.samples.size() + 1);
        for (const auto& smp : traj.samples) br.polyline.push_back(smp.x);
        switch (traj.stop) {
          case StopReason::DomainExit:
            br.termination = BranchTermination::DomainExit;
            break;
          case StopReason::ArcLengthCap:
            br.termination = BranchTermination::ArcLengthCap;
            break;
          case StopReason::TimeLimit:
            br.termination = BranchTermination::TimeLimit;
            break;
          case StopReason::Event: {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < repellers.size(); ++i) {
              const double d = distance(traj.final_state(), repellers[i].state);
              if (d < bd) {
                bd = d;
                best = i;
              }
            }
            br.termination = BranchTermination::ConvergedToEquilibrium;
            br.end_equilibrium = best;
            br.polyline.push_back(repellers[best].state);
            break;
          }
        }
      } catch (const IntegrationFailure& f) {
        br.termination = BranchTermination::Failed;
        br.failure = f.what();
        for (const auto& xs : f.states()) br.polyline.push_back({xs[0], xs[1]});
      }
      out.push_back(std::move(br));
    }
  }
  return out;
}

DOABoundary assemble_doa(const Equilibrium& sep, const std::vector<ManifoldBranch>& branches,
                         const std::vector<Equilibrium>& repellers, double half_width) {
  if (sep.kind != EquilibriumKind::SEP) throw InvalidArgument("assemble_doa requires an SEP");
  const Box box{{sep.state[0] - half_width, sep.state[1] - half_width},
                {sep.state[0] + half_width, sep.state[1] + half_width}};

  // Join the two branches of each saddle into one curve through the saddle.
  std::vector<Curve> curves;
  std::vector<bool> used(branches.size(), false);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const auto& bi = branches[i];
    std::optional<std::size_t> partner;
    for (std::size_t j = i + 1; j < branches.size(); ++j) {
      if (!used[j] && branches[j].source.state == bi.source.state && branches[j].direction != bi.direction) {
        partner = j;
        used[j] = true;
        break;
      }
    }
    Curve c;
    c.pts.assign(bi.polyline.rbegin(), bi.polyline.rend());
    c.a = end_of(bi);
    c.pts.push_back(bi.source.state);
    if (partner) {
      const auto& bj = branches[*partner];
      c.pts.insert(c.pts.end(), bj.polyline.begin(), bj.polyline.end());
      c.b = end_of(bj);
    } else {
      c.b = {EndKind::Dangling, 0};
    }
    curves.push_back(std::move(c));
  }

  std::vector<Curve> pieces;
  for (const auto& c : curves) {
    auto p = clip_curve(c, box);
    pieces.insert(pieces.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }

  Graph g;
  std::map<std::size_t, int> source_vertex;
  std::vector<std::pair<double, int>> perimeter;
  auto vertex_for = [&](const EndRef& r, const State2& p) {
    if (r.kind == EndKind::Source) {
      const auto it = source_vertex.find(r.source);
      if (it != source_vertex.end()) return it->second;
      const int v = g.add_vertex(p, false);
      source_vertex[r.source] = v;
      return v;
    }
    if (r.kind == EndKind::Perimeter) {
      const int v = g.add_vertex(p, true);
      perimeter.emplace_back(box.perimeter_param(p), v);
      return v;
    }
    return g.add_vertex(p, false);
  };
  for (auto& pc : pieces) {
    const int u = vertex_for(pc.a, pc.pts.front());
    const int v = vertex_for(pc.b, pc.pts.back());
    g.edges.push_back({u, v, std::move(pc.pts), false});
  }
  const State2 corners[4] = {box.lo, {box.hi[0], box.lo[1]}, box.hi, {box.lo[0], box.hi[1]}};
  for (const auto& c : corners) {
    const int v = g.add_vertex(c, true);
    perimeter.emplace_back(box.perimeter_param(c), v);
  }
  std::stable_sort(perimeter.begin(), perimeter.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  // Corners are parameterized ambiguously at side ends; pin them.
  for (auto& [s, v] : perimeter) {
    for (int k = 0; k < 4; ++k)
      if (g.vpos[v] == corners[k]) s = k == 0 ? 0.0 : k == 1 ? box.width() : k == 2 ? box.width() + box.height()
                                                                               : 2 * box.width() + box.height();
  }
  std::stable_sort(perimeter.begin(), perimeter.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < perimeter.size(); ++i) {
    const int u = perimeter[i].second;
    const int v = perimeter[(i + 1) % perimeter.size()].second;
    if (g.vpos[u] == g.vpos[v]) continue;
    g.edges.push_back({u, v, {g.vpos[u], g.vpos[v]}, true});
  }

  // Half-edge structure: h = 2e is u->v, h = 2e+1 is v->u.
  const std::size_t nh = 2 * g.edges.size();
  auto origin = [&](std::size_t h) { return h % 2 == 0 ? g.edges[h / 2].u : g.edges[h / 2].v; };
  auto half_pts = [&](std::size_t h) {
    const auto& e = g.edges[h / 2];
    if (h % 2 == 0) return e.pts;
    return std::vector<State2>(e.pts.rbegin(), e.pts.rend());
  };
  std::vector<std::vector<std::pair<double, std::size_t>>> around(g.vpos.size());
  for (std::size_t h = 0; h < nh; ++h) {
    const int o = origin(h);
    const auto pts = half_pts(h);
    around[o].emplace_back(departure_angle(pts, g.edges[h / 2].splice, g.v_on_perimeter[o], box), h);
  }
  std::vector<std::size_t> pos_in_around(nh);
  for (auto& lst : around) {
    std::sort(lst.begin(), lst.end());
    for (std::size_t k = 0; k < lst.size(); ++k) pos_in_around[lst[k].second] = k;
  }
  auto next_half = [&](std::size_t h) {
    const std::size_t twin = h ^ 1U;
    const int v = origin(twin);
    const auto& lst = around[v];
    const std::size_t k = pos_in_around[twin];
    return lst[(k + lst.size() - 1) % lst.size()].second;
  };

  std::vector<bool> visited(nh, false);
  std::optional<std::vector<State2>> best_poly;
  std::vector<bool> best_splice;
  std::vector<std::size_t> best_edges;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t h0 = 0; h0 < nh; ++h0) {
    if (visited[h0]) continue;
    std::vector<State2> poly;
    std::vector<bool> spl;
    std::vector<std::size_t> face_edges;
    std::size_t h = h0;
    std::size_t guard = 0;
    do {
      visited[h] = true;
      const auto pts = half_pts(h);
      const bool splice = g.edges[h / 2].splice;
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        poly.push_back(pts[k]);
        spl.push_back(splice);
      }
      face_edges.push_back(h / 2);
      h = next_half(h);
      if (++guard > nh + 1) break;
    } while (h != h0);
    if (poly.size() < 3) continue;
    const double a = polygon_area(poly);
    if (a <= 0.0 || a >= best_area) continue;
    if (!point_in_polygon(poly, sep.state)) continue;
    best_area = a;
    best_poly = std::move(poly);
    best_splice = std::move(spl);
    best_edges = std::move(face_edges);
  }
  if (!best_poly) throw OpenBasin("no face of the manifold arrangement encloses the SEP");

  DOABoundary doa;
  doa.sep = sep;
  doa.branches = branches;
  for (const auto& b : branches) {
    if (std::none_of(doa.saddles.begin(), doa.saddles.end(),
                     [&](const Equilibrium& s) { return s.state == b.source.state; }))
      doa.saddles.push_back(b.source);
  }
  doa.closed_polygon = std::move(*best_poly);
  doa.splice = std::move(best_splice);
  doa.half_width = half_width;
  doa.is_bounded = std::none_of(doa.splice.begin(), doa.splice.end(), [](bool b) { return b; });

  std::sort(best_edges.begin(), best_edges.end());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (g.edges[e].splice || std::binary_search(best_edges.begin(), best_edges.end(), e)) continue;
    const auto& pts = g.edges[e].pts;
    if (point_in_polygon(doa.closed_polygon, pts[pts.size() / 2])) doa.interior_curves.push_back(pts);
  }
  for (const auto& r : repellers) {
    if (!box.contains(r.state, 0.0)) continue;
    if (polyline_distance(r.state, doa.closed_polygon) < 1e-9) continue;
    if (point_in_polygon(doa.closed_polygon, r.state)) doa.isolated_points.push_back(r.state);
  }
  return doa;
}

DOABoundary compute_doa(const PlanarField& field, const std::vector<Equilibrium>& eqs, const Equilibrium& sep,
                        const ManifoldOptions& opt) {
  const auto saddles = boundary_saddles(field, eqs, sep, opt);
  const auto repellers = repeller_translates(eqs, sep.state, opt.trace_half_width + 0.5);
  const auto branches = trace_stable_manifolds(field, saddles, repellers, sep.state, opt);
  std::optional<DOABoundary> doa;
  try {
    doa = assemble_doa(sep, branches, repellers, opt.half_width);
  } catch (const OpenBasin&) {
  }
  // A bounded basin that merely overhangs the window is assembled on the tracing box instead.
  if ((!doa || !doa->is_bounded) && opt.trace_half_width > opt.half_width) {
    try {
      auto wide = assemble_doa(sep, branches, repellers, opt.trace_half_width);
      if (wide.is_bounded || !doa) doa = std::move(wide);
    } catch (const OpenBasin&) {
    }
  }
  if (!doa) throw OpenBasin("no face of the manifold arrangement encloses the SEP");
  return std::move(*doa);
}

Membership membership(const DOABoundary& doa, const State2& point, double boundary_tol) {
  Membership m;
  State2 p = point;
  const double hw = doa.half_width;
  for (int i = 0; i < 2; ++i) {
    if (std::abs(point[i] - doa.sep.state[i]) > hw) {
      p[i] = doa.sep.state[i] + wrap_angle(point[i] - doa.sep.state[i]);
      m.pole_slip = true;
    }
  }
  double d = std::numeric_limits<double>::infinity();
  const auto& poly = doa.closed_polygon;
  for (std::size_t i = 0; i < poly.size(); ++i)
    d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  for (const auto& c : doa.interior_curves) d = std::min(d, polyline_distance(p, c));
  for (const auto& q : doa.isolated_points) d = std::min(d, distance(p, q));
  if (d <= boundary_tol) {
    m.on_boundary = true;
    return m;
  }
  m.inside = point_in_polygon(poly, p) && !m.pole_slip;
  return m;
}

bool contains(const DOABoundary& doa, const State2& point) { return membership(doa, point).inside; }

std::optional<LimitCycle> detect_limit_cycle(const PlanarField& field, const State2& seed,
                                             const LimitCycleOptions& opt) {
  struct Hit {
    double t;
    State2 x;
    int dir;
  };
  const double s1 = seed[0];
  Event<2> section{"section", [s1](double, const State2& x) { return std::sin(x[0] - s1); }, 0, false};
  std::vector<Hit> hits;
  std::vector<Sample<2>> samples{{0.0, seed}};
  IntegratorSettings s = opt.settings;
  s.t_max = opt.chunk;
  State2 x = seed;
  double t0 = 0.0;
  const double settle_tol = 1e-9 * field.max_gain();

  while (t0 < opt.t_max) {
    const auto traj = integrate<2>(field, x, s, Direction::Forward, {section});
    for (std::size_t i = 1; i < traj.samples.size(); ++i) samples.push_back({t0 + traj.samples[i].t, traj.samples[i].x});
    for (const auto& h : traj.hits) {
      if (std::cos(h.x[0] - s1) <= 0.0) continue;
      hits.push_back({t0 + h.t, h.x, field(h.x)[0] > 0.0 ? 1 : -1});
      // Compare with the previous two crossings in the same direction.
      std::vector<const Hit*> same;
      for (auto it = hits.rbegin(); it != hits.rend() && same.size() < 3; ++it)
        if (it->dir == hits.back().dir) same.push_back(&*it);
      if (same.size() < 3) continue;
      const Hit& c = *same[0];
      const Hit& b = *same[1];
      const Hit& a = *same[2];
      const double dx = std::max(std::abs(wrap_angle(c.x[0] - b.x[0])), std::abs(wrap_angle(c.x[1] - b.x[1])));
      if (dx > opt.state_tol || std::abs((c.t - b.t) - (b.t - a.t)) > opt.period_tol) continue;
      LimitCycle cyc;
      cyc.period = c.t - b.t;
      cyc.polyline.push_back(b.x);
      for (const auto& smp : samples)
        if (smp.t > b.t && smp.t < c.t) cyc.polyline.push_back(smp.x);
      cyc.polyline.push_back(c.x);
      cyc.winding = {static_cast<int>(std::lround((c.x[0] - b.x[0]) / kTwoPi)),
                     static_cast<int>(std::lround((c.x[1] - b.x[1]) / kTwoPi))};
      return cyc;
    }
    x = traj.final_state();
    t0 += traj.final_time();
    if (norm_inf(field(x)) < settle_tol) return std::nullopt;
    // Keep memory bounded: only the current recurrence window is needed.
    if (hits.size() > 3) {
      const double keep_from = hits[hits.size() - 4].t;
      samples.erase(samples.begin(),
                    std::find_if(samples.begin(), samples.end(), [&](const Sample<2>& q) { return q.t >= keep_from; }));
    }
  }
  return std::nullopt;
}

void write_polygon_csv(std::ostream& os, const std::vector<State2>& poly, bool close) {
  os << "delta1,delta2\n" << std::setprecision(12);
  for (const auto& p : poly) os << p[0] << ',' << p[1] << '\n';
  if (close && !poly.empty()) os << poly.front()[0] << ',' << poly.front()[1] << '\n';
}

void write_doa_csv(std::ostream& os, const DOABoundary& doa) { write_polygon_csv(os, doa.closed_polygon, true); }

void write_cycle_csv(std::ostream& os, const LimitCycle& cycle) { write_polygon_csv(os, cycle.polyline, false); }

nlohmann::json to_json(const LimitCycle& cycle) {
  return {{"period", cycle.period}, {"winding", {cycle.winding[0], cycle.winding[1]}}, {"points", cycle.polyline.size()}};
}

nlohmann::json to_json(const DOABoundary& doa) {
  nlohmann::json saddles = nlohmann::json::array();
  for (const auto& s : doa.saddles) saddles.push_back(to_json(s));
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& b : doa.branches) {
    branches.push_back({{"saddle", {b.source.state[0], b.source.state[1]}},
                        {"direction", b.direction},
                        {"termination", to_string(b.termination)},
                        {"points", b.polyline.size()}});
  }
  return {{"sep", to_json(doa.sep)},
          {"is_bounded", doa.is_bounded},
          {"area", doa.area()},
          {"half_width", doa.half_width},
          {"vertices", doa.closed_polygon.size()},
          {"saddles", saddles},
          {"branches", branches}};
}

}  // namespace idoa
