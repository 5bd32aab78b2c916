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

#include "mergeplan/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "mergeplan/error.hpp"

namespace mergeplan {

namespace {

using nlohmann::json;

constexpr std::size_t kColumns = 25;

double ParseNumber(std::string_view s, int row, std::string_view column) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw InvalidArgument("episode csv: row " + std::to_string(row) + ", column " +
                          std::string(column) + ": expected a number, got '" + std::string(s) +
                          "'");
  }
  return v;
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto c = line.find(',');
    out.push_back(line.substr(0, c));
    if (c == std::string_view::npos) return out;
    line.remove_prefix(c + 1);
  }
}

}  // namespace

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

const std::vector<std::string>& EpisodeCsvColumns() {
  static const std::vector<std::string> columns = {
      "t",          "ev.p_x",       "ev.p_y",        "ev.phi",        "ev.v",
      "ev.a",       "u.delta",      "u.eta",         "maneuver",      "v_ref",
      "p_y_ref",    "sv0.p_x",      "sv0.v",         "sv0.a_applied", "sv0.a_min",
      "sv0.a_max",  "sv1.p_x",      "sv1.v",         "sv1.a_applied", "sv1.a_min",
      "sv1.a_max",  "d_sv0",        "d_sv1",         "solver_status", "solve_time_s"};
  return columns;
}

std::string WriteEpisodeCsv(const EpisodeLog& log) {
  std::string out;
  const auto& cols = EpisodeCsvColumns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const StepRecord& r : log.records) {
    if (r.svs.size() != 2) throw InvalidArgument("episode csv: two SVs per record required");
    std::vector<std::string> f = {
        FormatNumber(r.t),           FormatNumber(r.ev.p_x),
        FormatNumber(r.ev.p_y),      FormatNumber(r.ev.phi),
        FormatNumber(r.ev.v),        FormatNumber(r.ev.a),
        FormatNumber(r.control.delta), FormatNumber(r.control.eta),
        std::string(ManeuverName(r.reference.maneuver)), FormatNumber(r.reference.v_x_ref),
        FormatNumber(r.reference.p_y_ref)};
    for (const SvRecord& s : r.svs) {
      f.push_back(FormatNumber(s.state.p_x));
      f.push_back(FormatNumber(s.state.v_x));
      f.push_back(FormatNumber(s.a_applied));
      f.push_back(FormatNumber(s.bounds.a_min));
      f.push_back(FormatNumber(s.bounds.a_max));
    }
    f.push_back(FormatNumber(r.svs[0].distance));
    f.push_back(FormatNumber(r.svs[1].distance));
    f.push_back(std::string(SolverStatusName(r.status)));
    f.push_back(FormatNumber(r.solve_time));
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += '\n';
  }
  return out;
}

EpisodeLog ParseEpisodeCsv(std::string_view text, double T) {
  const auto& cols = EpisodeCsvColumns();
  EpisodeLog log;
  log.T = T;
  int row = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::vector<std::string_view> f = SplitCommas(line);
    if (row == 0) {
      if (f.size() != kColumns) throw InvalidArgument("episode csv: unexpected header");
      for (std::size_t i = 0; i < kColumns; ++i) {
        if (f[i] != cols[i]) {
          throw InvalidArgument("episode csv: header column " + std::to_string(i + 1) +
                                " must be '" + cols[i] + "'");
        }
      }
      ++row;
      continue;
    }
    if (line.empty()) continue;
    if (f.size() != kColumns) {
      throw InvalidArgument("episode csv: row " + std::to_string(row) + " has " +
                            std::to_string(f.size()) + " fields, expected " +
                            std::to_string(kColumns));
    }
    auto num = [&](std::size_t i) { return ParseNumber(f[i], row, cols[i]); };
    StepRecord r;
    r.step = row - 1;
    r.t = num(0);
    r.ev = {num(1), num(2), num(3), num(4), num(5)};
    r.control = {num(6), num(7)};
    if (f[8] == "VT1") {
      r.reference.maneuver = Maneuver::kVT1;
    } else if (f[8] == "VT2") {
      r.reference.maneuver = Maneuver::kVT2;
    } else {
      throw InvalidArgument("episode csv: row " + std::to_string(row) + ": bad maneuver");
    }
    r.reference.v_x_ref = num(9);
    r.reference.p_y_ref = num(10);
    for (std::size_t s = 0; s < 2; ++s) {
      const std::size_t o = 11 + 5 * s;
      SvRecord sv;
      sv.state = {num(o), num(o + 1)};
      sv.a_applied = num(o + 2);
      sv.bounds = {num(o + 3), num(o + 4)};
      sv.distance = num(21 + s);
      r.svs.push_back(sv);
    }
    bool status_ok = false;
    for (SolverStatus s : {SolverStatus::kOptimal, SolverStatus::kMaxIter,
                           SolverStatus::kInfeasibleRelaxed}) {
      if (f[23] == SolverStatusName(s)) {
        r.status = s;
        status_ok = true;
      }
    }
    if (!status_ok) {
      throw InvalidArgument("episode csv: row " + std::to_string(row) + ": bad solver_status");
    }
    r.fallback = r.status == SolverStatus::kInfeasibleRelaxed;
    r.solve_time = num(24);
    log.records.push_back(std::move(r));
    ++row;
  }
  if (row == 0) throw InvalidArgument("episode csv: empty input");
  return log;
}

nlohmann::json MeanStdJson(const MeanStd& m) {
  // nlohmann writes non-finite numbers as null.
  return json{{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
}

nlohmann::json EpisodeMetricsJson(const EpisodeMetrics& m) {
  return json{{"success", m.success},
              {"outcome", std::string(EpisodeOutcomeName(m.outcome))},
              {"merge_class", std::string(MergeClassName(m.merge_class))},
              {"min_d_sv0", m.min_d_sv0},
              {"min_d_sv1", m.min_d_sv1},
              {"max_abs_accel", m.max_abs_accel},
              {"steps", m.steps},
              {"fallback_steps", m.fallback_steps},
              {"solver_cascade", m.solver_cascade}};
}

nlohmann::json BatchSummaryJson(const BatchSummary& s) {
  return json{{"episodes", s.episodes},
              {"success_rate", s.success_rate},
              {"merge_ahead", s.merge_ahead},
              {"merge_between", s.merge_between},
              {"merge_after", s.merge_after},
              {"merge_none", s.merge_none},
              {"collisions", s.collisions},
              {"solver_cascades", s.solver_cascades},
              {"min_d_sv0", MeanStdJson(s.min_d_sv0)},
              {"min_d_sv1", MeanStdJson(s.min_d_sv1)},
              {"max_abs_accel", MeanStdJson(s.max_abs_accel)}};
}

std::string DumpJson(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string WriteEpisodeIndexCsv(const BatchResult& batch) {
  std::string out =
      "episode,seed,success,outcome,merge_class,min_d_sv0,min_d_sv1,max_abs_accel,steps,"
      "fallback_steps,solver_cascade\n";
  for (std::size_t i = 0; i < batch.episodes.size(); ++i) {
    const EpisodeMetrics& m = batch.episodes[i];
    out += std::to_string(i) + "," + std::to_string(batch.seeds[i]) + "," +
           (m.success ? "true" : "false") + "," + std::string(EpisodeOutcomeName(m.outcome)) +
           "," + std::string(MergeClassName(m.merge_class)) + "," + FormatNumber(m.min_d_sv0) +
           "," + FormatNumber(m.min_d_sv1) + "," + FormatNumber(m.max_abs_accel) + "," +
           std::to_string(m.steps) + "," + std::to_string(m.fallback_steps) + "," +
           (m.solver_cascade ? "true" : "false") + "\n";
  }
  return out;
}

std::string WriteConvergenceCsv(const std::vector<ConvergenceRow>& rows) {
  std::string out =
      "size,episodes,success_rate,min_d_sv0_mean,min_d_sv0_std,min_d_sv1_mean,min_d_sv1_std,"
      "max_abs_accel_mean,max_abs_accel_std\n";
  for (const ConvergenceRow& r : rows) {
    const BatchSummary& s = r.summary;
    out += std::to_string(r.size) + "," + std::to_string(s.episodes) + "," +
           FormatNumber(s.success_rate) + "," + FormatNumber(s.min_d_sv0.mean) + "," +
           FormatNumber(s.min_d_sv0.std) + "," + FormatNumber(s.min_d_sv1.mean) + "," +
           FormatNumber(s.min_d_sv1.std) + "," + FormatNumber(s.max_abs_accel.mean) + "," +
           FormatNumber(s.max_abs_accel.std) + "\n";
  }
  return out;
}

}  // namespace mergeplan
