// Copyright 2026 The mergeplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mergeplan/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mergeplan/error.hpp"
#include "mergeplan/report.hpp"

namespace mergeplan {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Fmt(w) + "\" height=\"" + Fmt(h) +
         "\" viewBox=\"0 0 " + Fmt(w) + " " + Fmt(h) + "\" font-family=\"sans-serif\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string Text(double x, double y, const std::string& s, const char* anchor = "start",
                 int size = 12) {
  return "<text x=\"" + Fmt(x) + "\" y=\"" + Fmt(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\">" + Escape(s) + "</text>\n";
}

std::string Line(double x0, double y0, double x1, double y1, const std::string& style) {
  return "<line x1=\"" + Fmt(x0) + "\" y1=\"" + Fmt(y0) + "\" x2=\"" + Fmt(x1) + "\" y2=\"" +
         Fmt(y1) + "\" " + style + "/>\n";
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

// A "nice" step giving about `target` intervals over `span`.
double NiceStep(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  double left = 70, top = 40, width = 640, height = 300;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double X(double v) const { return left + (v - x0) / (x1 - x0) * width; }
  double Y(double v) const { return top + height - (v - y0) / (y1 - y0) * height; }
};

void FitRange(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double step = NiceStep(hi - lo, 6);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
}

std::string DrawAxes(const Axes& a, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel) {
  std::string out;
  out += Text(a.left + a.width / 2, 22, title, "middle", 15);
  out += "<rect x=\"" + Fmt(a.left) + "\" y=\"" + Fmt(a.top) + "\" width=\"" + Fmt(a.width) +
         "\" height=\"" + Fmt(a.height) + "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = NiceStep(a.x1 - a.x0, 6);
  for (double v = a.x0; v <= a.x1 + 1e-9 * xs; v += xs) {
    out += Line(a.X(v), a.top + a.height, a.X(v), a.top + a.height + 5, "stroke=\"black\"");
    out += Text(a.X(v), a.top + a.height + 18, Tick(v), "middle", 11);
  }
  const double ys = NiceStep(a.y1 - a.y0, 6);
  for (double v = a.y0; v <= a.y1 + 1e-9 * ys; v += ys) {
    out += Line(a.left - 5, a.Y(v), a.left, a.Y(v), "stroke=\"black\"");
    out += Line(a.left, a.Y(v), a.left + a.width, a.Y(v), "stroke=\"#e0e0e0\"");
    out += Text(a.left - 8, a.Y(v) + 4, Tick(v), "end", 11);
  }
  out += Text(a.left + a.width / 2, a.top + a.height + 38, xlabel, "middle");
  out += "<text x=\"18\" y=\"" + Fmt(a.top + a.height / 2) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         Fmt(a.top + a.height / 2) + ")\">" + Escape(ylabel) + "</text>\n";
  return out;
}

std::string Legend(const Axes& a, const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = a.top + 14 + 16 * static_cast<double>(i);
    const double x = a.left + a.width + 12;
    out += Line(x, y - 4, x + 18, y - 4,
                std::string("stroke=\"") + kPalette[i % 5] + "\" stroke-width=\"2\"");
    out += Text(x + 24, y, labels[i], "start", 11);
  }
  return out;
}

std::string LineChart(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<Series>& series) {
  Axes a;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  FitRange(xlo, xhi);
  FitRange(ylo, yhi);
  a.x0 = xlo;
  a.x1 = xhi;
  a.y0 = ylo;
  a.y1 = yhi;

  std::string out = Header(a.left + a.width + 150, a.top + a.height + 60);
  out += DrawAxes(a, title, xlabel, ylabel);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    labels.push_back(s.label);
    std::string points, values;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!values.empty()) values += ' ';
      values += FormatNumber(s.y[i]);
      if (!std::isfinite(s.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += Fmt(a.X(s.x[i])) + "," + Fmt(a.Y(s.y[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[k % 5]) +
           "\" stroke-width=\"1.5\" data-label=\"" + Escape(s.label) + "\" data-values=\"" +
           values + "\" points=\"" + points + "\"/>\n";
  }
  out += Legend(a, labels);
  out += "</svg>\n";
  return out;
}

}  // namespace

int SnapshotIndex(const EpisodeLog& log, double time) {
  const int n = static_cast<int>(log.records.size());
  if (n == 0) throw InvalidArgument("snapshot: empty log");
  const double last = (n - 1) * log.T;
  const double idx = std::round(time / log.T);
  if (!std::isfinite(time) || idx < 0 || idx > n - 1) {
    throw InvalidArgument("snapshot: time " + Tick(time) + " s is outside the valid range [0, " +
                          Tick(last) + "] s (indices 0.." + std::to_string(n - 1) + ")");
  }
  return static_cast<int>(idx);
}

std::string RenderSnapshot(const EpisodeLog& log, const ScenarioConfig& config, PlannerKind kind,
                           int index) {
  const int n = static_cast<int>(log.records.size());
  if (index < 0 || index >= n) {
    throw InvalidArgument("snapshot: index " + std::to_string(index) +
                          " is outside the valid range [0, " + std::to_string(n - 1) + "]");
  }
  const StepRecord& r = log.records[static_cast<std::size_t>(index)];
  if (r.svs.size() != 2) throw InvalidArgument("snapshot: two SVs per record required");
  const std::vector<double> lanes{config.sv0.lane_center, config.sv1.lane_center};
  std::vector<SvState> svs;
  std::vector<AccelBounds> bounds;
  for (const SvRecord& s : r.svs) {
    svs.push_back(s.state);
    bounds.push_back(s.bounds);
  }
  const std::vector<OccupancyPrediction> occ =
      OccupancyForPlanner(kind, svs, bounds, WorstCaseBounds(config.mu, config.g), config.n_p,
                          config.v_adm, config.T, config.geometry, lanes);

  // 5 px per metre along the road, 20 px per metre across it.
  const double x_lo = r.ev.p_x - 80.0, x_hi = r.ev.p_x + 120.0;
  const double sx = 5.0, sy = 20.0, left = 20.0, top = 50.0;
  const double road = 2.0 * config.w_lane;
  auto X = [&](double x) { return left + (std::clamp(x, x_lo, x_hi) - x_lo) * sx; };
  auto Y = [&](double y) { return top + (road - y) * sy; };
  const double w = left * 2 + (x_hi - x_lo) * sx;
  const double h = top + road * sy + 60;

  std::string out = Header(w, h);
  out += Text(w / 2, 22,
              std::string(PlannerKindName(kind)) + " at t = " + Tick(r.t) + " s (" +
                  std::string(ManeuverName(r.reference.maneuver)) + ")",
              "middle", 15);
  out += "<defs><clipPath id=\"road\"><rect x=\"" + Fmt(left) + "\" y=\"" + Fmt(Y(road)) +
         "\" width=\"" + Fmt((x_hi - x_lo) * sx) + "\" height=\"" + Fmt(road * sy) +
         "\"/></clipPath></defs>\n";
  out += "<rect x=\"" + Fmt(left) + "\" y=\"" + Fmt(Y(road)) + "\" width=\"" +
         Fmt((x_hi - x_lo) * sx) + "\" height=\"" + Fmt(road * sy) + "\" fill=\"#f2f2f2\"/>\n";
  out += Line(X(x_lo), Y(0), X(x_hi), Y(0), "stroke=\"black\" stroke-width=\"2\"");
  out += Line(X(x_lo), Y(road), X(x_hi), Y(road), "stroke=\"black\" stroke-width=\"2\"");
  out += Line(X(x_lo), Y(config.w_lane), X(x_hi), Y(config.w_lane),
              "stroke=\"black\" stroke-dasharray=\"10,8\"");
  if (config.p_x_ter >= x_lo && config.p_x_ter <= x_hi) {
    out += Line(X(config.p_x_ter), Y(0), X(config.p_x_ter), Y(config.w_lane),
                "stroke=\"#d62728\" stroke-width=\"3\"");
  }

  out += "<g clip-path=\"url(#road)\">\n";
  for (std::size_t s = 0; s < occ.size(); ++s) {
    for (const Polytope2& p : occ[s].steps) {
      std::string pts;
      for (const Vec2& v : p.vertices()) {
        if (!pts.empty()) pts += ' ';
        pts += Fmt(left + (v.x() - x_lo) * sx) + "," + Fmt(Y(v.y()));
      }
      out += "<polygon class=\"occupancy\" data-sv=\"" + std::to_string(s) +
             "\" fill=\"none\" stroke=\"" + kPalette[1 + s] +
             "\" stroke-opacity=\"0.5\" points=\"" + pts + "\"/>\n";
    }
  }
  auto vehicle = [&](double x, double y, const char* fill, const std::string& label) {
    const double hl = 0.5 * config.geometry.l_veh, hw = 0.5 * config.geometry.w_veh;
    std::string g = "<rect class=\"vehicle\" data-label=\"" + label + "\" x=\"" +
                    Fmt(left + (x - hl - x_lo) * sx) + "\" y=\"" + Fmt(Y(y + hw)) +
                    "\" width=\"" + Fmt(2 * hl * sx) + "\" height=\"" + Fmt(2 * hw * sy) +
                    "\" fill=\"" + fill + "\" stroke=\"black\"/>\n";
    g += Text(left + (x - x_lo) * sx, Y(y) + 4, label, "middle", 10);
    return g;
  };
  out += vehicle(r.svs[0].state.p_x, lanes[0], "#f4b6b6", "SV0");
  out += vehicle(r.svs[1].state.p_x, lanes[1], "#b6e3b6", "SV1");
  out += vehicle(r.ev.p_x, r.ev.p_y, "#a9c8ea", "EV");
  out += "</g>\n";
  out += Text(left, h - 30,
              "EV p_x = " + Fmt(r.ev.p_x) + " m, v = " + Fmt(r.ev.v) + " m/s; d_sv0 = " +
                  Fmt(r.svs[0].distance) + " m, d_sv1 = " + Fmt(r.svs[1].distance) + " m",
              "start", 12);
  out += Text(left, h - 12,
              "SV0 bounds [" + Fmt(r.svs[0].bounds.a_min) + ", " + Fmt(r.svs[0].bounds.a_max) +
                  "], SV1 bounds [" + Fmt(r.svs[1].bounds.a_min) + ", " +
                  Fmt(r.svs[1].bounds.a_max) + "] m/s^2",
              "start", 12);
  out += "</svg>\n";
  return out;
}

std::string RenderAccelTrace(const std::vector<LabeledLog>& logs) {
  if (logs.empty()) throw InvalidArgument("accel_trace: at least one log required");
  std::vector<Series> series;
  for (const LabeledLog& l : logs) {
    if (l.log == nullptr || l.log->records.empty()) {
      throw InvalidArgument("accel_trace: empty log '" + l.label + "'");
    }
    Series s{l.label, {}, {}};
    for (const StepRecord& r : l.log->records) {
      s.x.push_back(r.t);
      s.y.push_back(r.ev.a);
    }
    series.push_back(std::move(s));
  }
  return LineChart("EV longitudinal acceleration", "t [s]", "a [m/s^2]", series);
}

std::string RenderDistanceTrace(const EpisodeLog& log) {
  if (log.records.empty()) throw InvalidArgument("distance_trace: empty log");
  Series d0{"d_sv0", {}, {}}, d1{"d_sv1", {}, {}};
  for (const StepRecord& r : log.records) {
    if (r.svs.size() != 2) throw InvalidArgument("distance_trace: two SVs per record required");
    d0.x.push_back(r.t);
    d0.y.push_back(r.svs[0].distance);
    d1.x.push_back(r.t);
    d1.y.push_back(r.svs[1].distance);
  }
  return LineChart("EV footprint distance to the SVs", "t [s]", "distance [m]", {d0, d1});
}

std::string RenderConvergenceBars(const std::vector<ConvergenceRow>& rows) {
  if (rows.empty()) throw InvalidArgument("convergence_bars: at least one row required");
  struct Panel {
    const char* title;
    const MeanStd BatchSummary::*field;
  };
  const Panel panels[] = {{"min d_sv0 [m]", &BatchSummary::min_d_sv0},
                          {"min d_sv1 [m]", &BatchSummary::min_d_sv1},
                          {"max |a| [m/s^2]", &BatchSummary::max_abs_accel}};
  const double pw = 300, ph = 220, top = 50, left = 60, gap = 70;
  const double w = left + 3 * (pw + gap), h = top + ph + 70;
  std::string out = Header(w, h);
  out += Text(w / 2, 22, "Metrics versus initial information-set size", "middle", 15);
  for (int k = 0; k < 3; ++k) {
    const Panel& p = panels[k];
    double hi = 0.0;
    for (const ConvergenceRow& r : rows) {
      const MeanStd& m = r.summary.*p.field;
      if (std::isfinite(m.mean)) hi = std::max(hi, m.mean + (std::isfinite(m.std) ? m.std : 0.0));
    }
    double lo = 0.0;
    FitRange(lo, hi);
    Axes a;
    a.left = left + k * (pw + gap);
    a.top = top;
    a.width = pw;
    a.height = ph;
    a.x0 = 0;
    a.x1 = static_cast<double>(rows.size());
    a.y0 = 0;
    a.y1 = hi;
    out += Text(a.left + pw / 2, top - 8, p.title, "middle", 13);
    out += "<rect x=\"" + Fmt(a.left) + "\" y=\"" + Fmt(a.top) + "\" width=\"" + Fmt(pw) +
           "\" height=\"" + Fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    const double ys = NiceStep(hi, 5);
    for (double v = 0; v <= hi + 1e-9 * ys; v += ys) {
      out += Line(a.left - 5, a.Y(v), a.left, a.Y(v), "stroke=\"black\"");
      out += Text(a.left - 8, a.Y(v) + 4, Tick(v), "end", 11);
    }
    std::string values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const MeanStd& m = rows[i].summary.*p.field;
      if (!values.empty()) values += ' ';
      values += FormatNumber(m.mean) + ":" + FormatNumber(m.std);
      const double cx = a.X(static_cast<double>(i) + 0.5);
      const double bw = 0.6 * pw / static_cast<double>(rows.size());
      out += Text(cx, a.top + ph + 18, std::to_string(rows[i].size), "middle", 11);
      if (!std::isfinite(m.mean)) continue;
      out += "<rect x=\"" + Fmt(cx - bw / 2) + "\" y=\"" + Fmt(a.Y(m.mean)) + "\" width=\"" +
             Fmt(bw) + "\" height=\"" + Fmt(a.Y(0) - a.Y(m.mean)) + "\" fill=\"" + kPalette[k] +
             "\" fill-opacity=\"0.7\"/>\n";
      if (std::isfinite(m.std) && m.std > 0) {
        out += Line(cx, a.Y(std::max(0.0, m.mean - m.std)), cx, a.Y(m.mean + m.std),
                    "stroke=\"black\"");
      }
    }
    out += "<g class=\"panel\" data-values=\"" + values + "\"/>\n";
    out += Text(a.left + pw / 2, a.top + ph + 40, "|I_0|", "middle");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace mergeplan
