#include "inverter_doa/portrait.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "inverter_doa/error.hpp"

namespace idoa {

namespace {

struct Frame {
  PortraitWindow w;
  double px0, px1;  // plot area in pixels

  [[nodiscard]] double sx(double d1) const { return px0 + (d1 - (w.center[0] - w.half_width)) / (2 * w.half_width) * (px1 - px0); }
  [[nodiscard]] double sy(double d2) const { return px1 - (d2 - (w.center[1] - w.half_width)) / (2 * w.half_width) * (px1 - px0); }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string path_data(const Frame& f, const std::vector<State2>& pts, bool close) {
  std::ostringstream os;
  for (std::size_t i = 0; i < pts.size(); ++i) os << (i == 0 ? 'M' : 'L') << fmt(f.sx(pts[i][0])) << ',' << fmt(f.sy(pts[i][1])) << ' ';
  if (close) os << 'Z';
  return os.str();
}

std::vector<State2> states_of(const Trajectory<2>& tr) {
  std::vector<State2> out;
  out.reserve(tr.samples.size());
  for (const auto& s : tr.samples) out.push_back(s.x);
  return out;
}

std::vector<State2> circle(const State2& c, double r, int n) {
  std::vector<State2> out(n);
  for (int k = 0; k < n; ++k) {
    const double th = kTwoPi * k / n;
    out[k] = {c[0] + r * std::cos(th), c[1] + r * std::sin(th)};
  }
  return out;
}

// Post-fault equilibria and their 2pi translates inside the window.
std::vector<Equilibrium> visible_equilibria(const PointResult& p, const PortraitWindow& w) {
  std::vector<Equilibrium> out;
  const int reach = static_cast<int>(std::ceil(w.half_width / kTwoPi)) + 1;
  for (const auto& e : p.eq_post)
    for (int m1 = -reach; m1 <= reach; ++m1)
      for (int m2 = -reach; m2 <= reach; ++m2) {
        const auto s = shifted(e, m1, m2);
        if (std::abs(s.state[0] - w.center[0]) <= w.half_width && std::abs(s.state[1] - w.center[1]) <= w.half_width)
          out.push_back(s);
      }
  return out;
}

// Fault-on path shown in the portrait: the longest clearing run, else the disk-exit run.
std::optional<Trajectory<2>> fault_on_layer(const PointResult& p) {
  const ClearingRun* longest = nullptr;
  for (const auto& c : p.clearing_runs)
    if (!longest || c.t_clear > longest->t_clear) longest = &c;
  if (longest) return longest->fault_on;
  if (!p.tccr_detail) return std::nullopt;
  Trajectory<2> tr = p.tccr_detail->trajectory;
  if (std::isfinite(p.tccr_detail->t) && p.tccr_detail->t > 0.0) {
    const double stop = 1.5 * p.tccr_detail->t;
    std::erase_if(tr.samples, [stop](const Sample<2>& s) { return s.t > stop; });
  }
  if (tr.samples.empty()) return std::nullopt;
  return tr;
}

// The unwrapped cycle moved by whole turns next to the window centre, plus
// neighbouring copies along its winding so a rotation spans the window.
std::vector<std::vector<State2>> cycle_copies(const LimitCycle& c, const PortraitWindow& w) {
  if (c.polyline.empty()) return {};
  State2 mean{};
  for (const auto& x : c.polyline) mean = mean + x;
  mean = (1.0 / static_cast<double>(c.polyline.size())) * mean;
  State2 shift{};
  for (int i = 0; i < 2; ++i) shift[i] = -kTwoPi * std::round((mean[i] - w.center[i]) / kTwoPi);
  const State2 step{kTwoPi * c.winding[0], kTwoPi * c.winding[1]};
  const bool rotating = c.winding[0] != 0 || c.winding[1] != 0;
  std::vector<std::vector<State2>> out;
  for (int k = rotating ? -1 : 0; k <= (rotating ? 1 : 0); ++k) {
    std::vector<State2> copy;
    for (const auto& x : c.polyline) copy.push_back(x + shift + static_cast<double>(k) * step);
    out.push_back(std::move(copy));
  }
  return out;
}

void write_points_csv(const std::filesystem::path& file, const std::vector<State2>& pts, bool close) {
  std::ofstream f(file);
  if (!f) throw InvalidArgument("cannot write '" + file.string() + "'");
  write_polygon_csv(f, pts, close);
}

}  // namespace

PortraitWindow portrait_window(const PointResult& p) {
  PortraitWindow w;
  if (p.post_sep) {
    w.center = p.post_sep->state;
  } else if (p.pre_sep) {
    w.center = p.pre_sep->state;
  }
  if (p.doa) w.half_width = p.doa->half_width;
  return w;
}

std::string render_portrait_svg(const PointResult& p, const PortraitOptions& opt) {
  const Frame f{portrait_window(p), static_cast<double>(opt.margin_px), static_cast<double>(opt.size_px - opt.margin_px)};
  const int size = opt.size_px;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
     << size << ' ' << size << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<defs><clipPath id=\"plot\"><rect x=\"" << fmt(f.px0) << "\" y=\"" << fmt(f.px0) << "\" width=\""
     << fmt(f.px1 - f.px0) << "\" height=\"" << fmt(f.px1 - f.px0) << "\"/></clipPath></defs>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes, ticks every radian.
  os << "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n<rect x=\"" << fmt(f.px0) << "\" y=\"" << fmt(f.px0)
     << "\" width=\"" << fmt(f.px1 - f.px0) << "\" height=\"" << fmt(f.px1 - f.px0) << "\"/>\n";
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = f.w.center[axis] - f.w.half_width, hi = f.w.center[axis] + f.w.half_width;
    for (double t = std::ceil(lo); t <= hi; t += 1.0) {
      if (axis == 0) {
        os << "<line x1=\"" << fmt(f.sx(t)) << "\" y1=\"" << fmt(f.px1) << "\" x2=\"" << fmt(f.sx(t)) << "\" y2=\""
           << fmt(f.px1 + 5) << "\"/>\n<text x=\"" << fmt(f.sx(t)) << "\" y=\"" << fmt(f.px1 + 18)
           << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"black\">" << t << "</text>\n";
      } else {
        os << "<line x1=\"" << fmt(f.px0 - 5) << "\" y1=\"" << fmt(f.sy(t)) << "\" x2=\"" << fmt(f.px0) << "\" y2=\""
           << fmt(f.sy(t)) << "\"/>\n<text x=\"" << fmt(f.px0 - 8) << "\" y=\"" << fmt(f.sy(t) + 4)
           << "\" text-anchor=\"end\" stroke=\"none\" fill=\"black\">" << t << "</text>\n";
      }
    }
  }
  os << "<text x=\"" << size / 2 << "\" y=\"" << size - 16
     << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"black\">delta1 (rad)</text>\n";
  os << "<text x=\"16\" y=\"" << size / 2 << "\" transform=\"rotate(-90 16 " << size / 2
     << ")\" text-anchor=\"middle\" stroke=\"none\" fill=\"black\">delta2 (rad)</text>\n</g>\n";

  os << "<g clip-path=\"url(#plot)\" fill=\"none\">\n";
  if (p.doa) {
    os << "<path id=\"doa\" d=\"" << path_data(f, p.doa->closed_polygon, true)
       << "\" fill=\"#c8c8c8\" fill-opacity=\"0.7\" stroke=\"#555555\" stroke-width=\"1\"/>\n";
    os << "<g id=\"branches\" stroke=\"#1f5fa8\" stroke-width=\"1.2\">\n";
    for (const auto& b : p.doa->branches) os << "<path d=\"" << path_data(f, b.polyline, false) << "\"/>\n";
    os << "</g>\n";
  }
  if (p.report.lyapunov && p.post_sep)
    os << "<path id=\"lyapunov\" d=\"" << path_data(f, p.report.lyapunov->ellipse(p.post_sep->state), true)
       << "\" stroke=\"#2a9d2a\" stroke-width=\"1\"/>\n";
  if (p.report.ccr && p.post_sep)
    os << "<path id=\"ccr\" d=\""
       << path_data(f, circle(p.post_sep->state, *p.report.ccr, opt.circle_samples), true)
       << "\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  if (const auto fo = fault_on_layer(p))
    os << "<path id=\"fault_on\" d=\"" << path_data(f, states_of(*fo), false)
       << "\" stroke=\"#ff7f0e\" stroke-width=\"1.5\"/>\n";
  os << "<g id=\"post_fault\" stroke=\"#9467bd\" stroke-width=\"1.2\">\n";
  for (const auto& c : p.clearing_runs) os << "<path d=\"" << path_data(f, states_of(c.post_fault), false) << "\"/>\n";
  os << "</g>\n";
  if (p.cycle) {
    const bool rotating = p.cycle->winding[0] != 0 || p.cycle->winding[1] != 0;
    os << "<g id=\"spo\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"3 3\">\n";
    for (const auto& copy : cycle_copies(*p.cycle, f.w)) os << "<path d=\"" << path_data(f, copy, !rotating) << "\"/>\n";
    os << "</g>\n";
  }
  os << "</g>\n";

  os << "<g id=\"equilibria\" stroke=\"black\" stroke-width=\"1\">\n";
  for (const auto& e : visible_equilibria(p, f.w)) {
    const double x = f.sx(e.state[0]), y = f.sy(e.state[1]), r = 4.5;
    switch (e.kind) {
      case EquilibriumKind::SEP:
        os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << r << "\" fill=\"black\"/>\n";
        break;
      case EquilibriumKind::Type1UEP:
        os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << r << "\" fill=\"white\"/>\n";
        os << "<path d=\"M" << fmt(x - r) << ',' << fmt(y) << " A" << r << ',' << r << " 0 0 0 " << fmt(x + r) << ','
           << fmt(y) << " Z\" fill=\"black\"/>\n";
        break;
      default:
        os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << r << "\" fill=\"white\"/>\n";
    }
  }
  if (p.pre_sep)
    os << "<path id=\"pre_fault_sep\" d=\"M" << fmt(f.sx(p.pre_sep->state[0]) - 5) << ',' << fmt(f.sy(p.pre_sep->state[1]) - 5)
       << " l10,10 m-10,0 l10,-10\" stroke=\"#ff7f0e\" stroke-width=\"2\"/>\n";
  os << "</g>\n";

  if (!p.post_sep) {
    os << "<text id=\"annotation\" x=\"" << size / 2 << "\" y=\"" << fmt(f.px0 + 24)
       << "\" text-anchor=\"middle\" font-size=\"16\" fill=\"#d62728\">no SEP: "
       << (p.message.empty() ? "no stable equilibrium" : p.message) << "</text>\n";
  } else if (p.outcome != Outcome::Ok) {
    os << "<text id=\"annotation\" x=\"" << size / 2 << "\" y=\"" << fmt(f.px0 + 24)
       << "\" text-anchor=\"middle\" font-size=\"14\" fill=\"#d62728\">" << to_string(p.outcome) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> write_portrait(const PointResult& p, const std::filesystem::path& dir,
                                                  const std::string& stem, const PortraitOptions& opt) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  auto open = [&](const std::string& layer) {
    files.push_back(dir / (stem + layer));
    std::ofstream f(files.back());
    if (!f) throw InvalidArgument("cannot write '" + files.back().string() + "'");
    return f;
  };
  {
    auto f = open(".svg");
    f << render_portrait_svg(p, opt);
  }
  {
    auto f = open("_equilibria.csv");
    f << "delta1,delta2,kind\n" << std::setprecision(12);
    for (const auto& e : visible_equilibria(p, portrait_window(p)))
      f << e.state[0] << ',' << e.state[1] << ',' << to_string(e.kind) << '\n';
  }
  if (p.doa) {
    {
      auto f = open("_doa.csv");
      write_doa_csv(f, *p.doa);
    }
    auto f = open("_branches.csv");
    f << "branch,delta1,delta2\n" << std::setprecision(12);
    for (std::size_t b = 0; b < p.doa->branches.size(); ++b)
      for (const auto& x : p.doa->branches[b].polyline) f << b << ',' << x[0] << ',' << x[1] << '\n';
  }
  if (p.report.ccr && p.post_sep) {
    files.push_back(dir / (stem + "_ccr.csv"));
    write_points_csv(files.back(), circle(p.post_sep->state, *p.report.ccr, opt.circle_samples), true);
  }
  if (p.report.lyapunov && p.post_sep) {
    files.push_back(dir / (stem + "_lyapunov.csv"));
    write_points_csv(files.back(), p.report.lyapunov->ellipse(p.post_sep->state), true);
  }
  if (const auto fo = fault_on_layer(p)) {
    auto f = open("_fault_on.csv");
    write_trajectory_csv(f, *fo);
  }
  for (std::size_t k = 0; k < p.clearing_runs.size(); ++k) {
    auto f = open("_post_" + std::to_string(k) + ".csv");
    write_trajectory_csv(f, p.clearing_runs[k].post_fault);
  }
  if (p.cycle) {
    // Centre copy only; the raw unwrapped orbit is in cycle_<i>.csv.
    LimitCycle shown = *p.cycle;
    const auto copies = cycle_copies(shown, portrait_window(p));
    shown.polyline = copies[copies.size() / 2];
    auto f = open("_spo.csv");
    write_cycle_csv(f, shown);
  }
  return files;
}

}  // namespace idoa
