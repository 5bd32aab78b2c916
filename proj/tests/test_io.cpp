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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mergeplan/commands.hpp"
#include "mergeplan/config.hpp"
#include "mergeplan/error.hpp"
#include "mergeplan/report.hpp"
#include "mergeplan/svg.hpp"

using namespace mergeplan;
namespace fs = std::filesystem;

namespace {

const std::string kConfigDir = MERGEPLAN_CONFIG_DIR;

std::string RequiredOnly() {
  return "ev.initial.p_x = 822.5\nev.initial.p_y = 2\nev.initial.phi = 0\n"
         "ev.initial.v = 30\nev.initial.a = 0\n"
         "sv0.initial.p_x = 812.5\nsv0.initial.v = 30\n"
         "sv1.initial.p_x = 772.5\nsv1.initial.v = 30\n";
}

template <typename F>
ConfigError CatchConfig(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError");
  return ConfigError("", 0, "");
}

// Parses every value of data-values="..." following `marker`.
std::vector<double> DataValues(const std::string& svg, const std::string& marker) {
  const auto at = svg.find(marker);
  REQUIRE(at != std::string::npos);
  const auto b = svg.find("data-values=\"", at) + 13;
  const auto e = svg.find('"', b);
  std::istringstream in(svg.substr(b, e - b));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(tok == "nan" ? NAN : std::stod(tok));
  return out;
}

ScenarioConfig Short() {
  ScenarioConfig c;
  c.max_steps = 12;
  return c;
}

}  // namespace

TEST_CASE("bundled config matches the defaults") {
  const ScenarioConfig c = LoadConfig(kConfigDir + "/table1_table2.cfg");
  CHECK(c == ScenarioConfig());
  CHECK(c.T == 0.25);
  CHECK(c.N == 20);
  CHECK(c.n_p == 10);
  CHECK(c.mu == 0.71);
  CHECK(c.ev.p_x == 822.5);
  CHECK(c.ev.p_y == 2.0);
  CHECK(c.sv0.p_x == 812.5);
  CHECK(c.sv1.p_x == 772.5);
  CHECK(c.d_min == 0.1);
  CHECK(c.d_min_decision == 0.5);

  const ScenarioConfig s = LoadConfig(kConfigDir + "/sudden_accel_sv0.cfg");
  CHECK(s.sv0.profile.kind == BehaviorKind::kSuddenAccelNearTerminal);
  CHECK(s.sv1.profile.kind == BehaviorKind::kNominal);

  CHECK(ParseConfig(RequiredOnly()) == ScenarioConfig());
}

TEST_CASE("config round trip") {
  CHECK(ParseConfig(SerializeConfig(ScenarioConfig())) == ScenarioConfig());
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int k = 0; k < 50; ++k) {
    ScenarioConfig c;
    c.W_x = u(rng);
    c.W_v = u(rng) / 3.0;
    c.q1 = u(rng) * 100.0;
    c.ev.p_y = 1.0 + u(rng);
    c.ev.v = 10.0 + u(rng);
    c.sv0.profile.nominal.std = u(rng) / 10.0;
    c.sv0.profile.kind = k % 2 ? BehaviorKind::kSuddenAccelNearTerminal : BehaviorKind::kNominal;
    c.seed = rng();
    c.initial_samples = k;
    c.record_timing = k % 3 == 0;
    c.u_lower[1] = -u(rng) - 1.0;
    const ScenarioConfig back = ParseConfig(SerializeConfig(c));
    CHECK(back == c);
    CHECK(SerializeConfig(back) == SerializeConfig(c));
  }
  for (const std::string& key : ConfigKeys()) {
    CHECK_FALSE(GetConfigValue(ScenarioConfig(), key).empty());
  }
  CHECK(RequiredConfigKeys().size() == 9);
}

TEST_CASE("config errors name the key and line") {
  std::string text = RequiredOnly();
  text.erase(0, text.find('\n') + 1);
  ConfigError e = CatchConfig([&] { ParseConfig(text); });
  CHECK(e.key() == "ev.initial.p_x");
  CHECK(std::string(e.what()).find("ev.initial.p_x") != std::string::npos);

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "# note\nfoo = 1\n"); });
  CHECK(e.key() == "foo");
  CHECK(e.line() == 11);

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "model.T = fast\n"); });
  CHECK(e.key() == "model.T");
  CHECK(e.line() == 10);

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "mpc.d_min = -0.1\n"); });
  CHECK(e.key() == "mpc.d_min");
  CHECK(std::string(e.what()).find(">= 0") != std::string::npos);

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "decision.N = 2.5\n"); });
  CHECK(e.key() == "decision.N");

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "sim.record_timing = yes\n"); });
  CHECK(e.key() == "sim.record_timing");

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "mpc.q3 = 1, 2, 3\n"); });
  CHECK(e.key() == "mpc.q3");

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "road.w_lane = 4\nroad.w_lane = 4\n"); });
  CHECK(e.key() == "road.w_lane");
  CHECK(e.line() == 11);

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "just words\n"); });
  CHECK(e.line() == 10);

  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "sv0.profile.kind = erratic\n"); });
  CHECK(e.key() == "sv0.profile.kind");

  // Cross-field constraints surface after parsing.
  e = CatchConfig([&] { ParseConfig(RequiredOnly() + "mpc.n_p = 30\n"); });
  CHECK(std::string(e.what()).find("n_p") != std::string::npos);

  CHECK_THROWS_AS(LoadConfig("/nonexistent/file.cfg"), IoError);
  ScenarioConfig c;
  CHECK_THROWS_AS(SetConfigValue(c, "nope", "1"), ConfigError);
  SetConfigValue(c, "sim.max_steps", "7");
  CHECK(c.max_steps == 7);
}

TEST_CASE("episode csv schema and round trip") {
  const auto& cols = EpisodeCsvColumns();
  const std::vector<std::string> expected = {
      "t", "ev.p_x", "ev.p_y", "ev.phi", "ev.v", "ev.a", "u.delta", "u.eta", "maneuver",
      "v_ref", "p_y_ref", "sv0.p_x", "sv0.v", "sv0.a_applied", "sv0.a_min", "sv0.a_max",
      "sv1.p_x", "sv1.v", "sv1.a_applied", "sv1.a_min", "sv1.a_max", "d_sv0", "d_sv1",
      "solver_status", "solve_time_s"};
  CHECK(cols == expected);

  const EpisodeResult res = RunEpisode(Short(), PlannerKind::kProposed, 4);
  const std::string csv = WriteEpisodeCsv(res.log);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "t,ev.p_x,ev.p_y,ev.phi,ev.v,ev.a,u.delta,u.eta,maneuver,v_ref,p_y_ref,sv0.p_x,sv0.v,"
        "sv0.a_applied,sv0.a_min,sv0.a_max,sv1.p_x,sv1.v,sv1.a_applied,sv1.a_min,sv1.a_max,"
        "d_sv0,d_sv1,solver_status,solve_time_s");
  const EpisodeLog back = ParseEpisodeCsv(csv, 0.25);
  REQUIRE(back.records.size() == res.log.records.size());
  for (std::size_t k = 0; k < back.records.size(); ++k) {
    const StepRecord& a = res.log.records[k];
    const StepRecord& b = back.records[k];
    CHECK(b.step == a.step);
    CHECK(b.t == a.t);
    CHECK(b.ev == a.ev);
    CHECK(b.control == a.control);
    CHECK(b.reference.maneuver == a.reference.maneuver);
    CHECK(b.reference.v_x_ref == a.reference.v_x_ref);
    CHECK(b.reference.p_y_ref == a.reference.p_y_ref);
    CHECK(b.status == a.status);
    CHECK(b.fallback == a.fallback);
    CHECK(b.solve_time == a.solve_time);
    for (int s = 0; s < 2; ++s) {
      CHECK(b.svs[s].state == a.svs[s].state);
      CHECK(b.svs[s].a_applied == a.svs[s].a_applied);
      CHECK(b.svs[s].bounds.a_min == a.svs[s].bounds.a_min);
      CHECK(b.svs[s].bounds.a_max == a.svs[s].bounds.a_max);
      CHECK(b.svs[s].distance == a.svs[s].distance);
    }
  }
  CHECK(WriteEpisodeCsv(back) == csv);

  CHECK_THROWS_AS(ParseEpisodeCsv("t,x\n", 0.25), InvalidArgument);
  std::string bad = csv;
  bad.replace(bad.find("VT"), 3, "VT9");
  CHECK_THROWS_AS(ParseEpisodeCsv(bad, 0.25), InvalidArgument);
  CHECK(FormatNumber(NAN) == "nan");
  CHECK(FormatNumber(0.1) == "0.1");
}

TEST_CASE("metrics json schema") {
  EpisodeMetrics m;
  m.min_d_sv0 = NAN;
  m.min_d_sv1 = 3.5;
  const auto j = EpisodeMetricsJson(m);
  CHECK(std::isnan(j["min_d_sv0"].get<double>()));
  CHECK(j["min_d_sv1"] == 3.5);
  CHECK(DumpJson(j).find("\"min_d_sv0\": null") != std::string::npos);

  std::vector<EpisodeMetrics> ms(3);
  ms[0].success = true;
  ms[0].merge_class = MergeClass::kAhead;
  ms[1].merge_class = MergeClass::kAfter;
  for (auto& x : ms) x.min_d_sv0 = NAN;
  const auto s = BatchSummaryJson(Summarize(ms));
  CHECK(s["success_rate"].get<double>() >= 0.0);
  CHECK(s["success_rate"].get<double>() <= 1.0);
  CHECK(s["merge_ahead"].get<int>() + s["merge_between"].get<int>() +
            s["merge_after"].get<int>() + s["merge_none"].get<int>() ==
        3);
  CHECK(s["max_abs_accel"]["std"] == 0.0);
  // Keys are emitted in sorted order.
  const std::string dump = DumpJson(s);
  CHECK(nlohmann::json::parse(dump)["min_d_sv0"]["mean"].is_null());
  std::vector<std::size_t> pos;
  for (const char* k : {"collisions", "episodes", "max_abs_accel", "merge_after", "merge_ahead",
                        "merge_between", "merge_none", "min_d_sv0", "min_d_sv1",
                        "solver_cascades", "success_rate"}) {
    pos.push_back(dump.find(std::string("\"") + k + "\""));
  }
  CHECK(std::is_sorted(pos.begin(), pos.end()));
}

TEST_CASE("svg traces carry the logged values") {
  const EpisodeResult res = RunEpisode(Short(), PlannerKind::kDmpc, 2);
  const std::string svg = RenderDistanceTrace(res.log);
  const std::vector<double> d0 = DataValues(svg, "data-label=\"d_sv0\"");
  const std::vector<double> d1 = DataValues(svg, "data-label=\"d_sv1\"");
  REQUIRE(d0.size() == res.log.records.size());
  REQUIRE(d1.size() == res.log.records.size());
  for (std::size_t k = 0; k < d0.size(); ++k) {
    CHECK(d0[k] == res.log.records[k].svs[0].distance);
    CHECK(d1[k] == res.log.records[k].svs[1].distance);
  }
  CHECK(RenderDistanceTrace(res.log) == svg);

  const std::string acc = RenderAccelTrace({{"dmpc", &res.log}});
  const std::vector<double> a = DataValues(acc, "data-label=\"dmpc\"");
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == res.log.records[k].ev.a);
  CHECK_THROWS_AS(RenderAccelTrace({}), InvalidArgument);
}

TEST_CASE("accel trace of a constant-speed episode is flat") {
  ScenarioConfig c;
  c.sv0.profile.nominal.std = 0.0;
  c.sv1.profile.nominal.std = 0.0;
  c.max_steps = 8;
  // Cruising in lane 2 well ahead of both SVs with the reference speed matched.
  c.ev = {600, 6, 0, 30, 0};
  c.sv0.p_x = 400;
  c.sv1.p_x = 350;
  EpisodeLog log;
  log.T = c.T;
  for (int k = 0; k < 8; ++k) {
    StepRecord r;
    r.step = k;
    r.t = k * c.T;
    r.ev = {600 + 7.5 * k, 6, 0, 30, 0};
    r.svs = {{{400 + 7.5 * k, 30}, 0, {}, 200}, {{350 + 7.5 * k, 30}, 0, {}, 250}};
    log.records.push_back(r);
  }
  const std::vector<double> a = DataValues(RenderAccelTrace({{"ev", &log}}), "data-label=\"ev\"");
  REQUIRE(a.size() == 8);
  for (double v : a) CHECK(v == 0.0);
}

TEST_CASE("snapshot geometry and time validation") {
  ScenarioConfig c;
  Episode ep(c, PlannerKind::kProposed, 1);
  ep.Step();
  const EpisodeLog& log = ep.log();
  CHECK(SnapshotIndex(log, 0.0) == 0);
  const std::string svg = RenderSnapshot(log, c, PlannerKind::kProposed, 0);
  // The view starts 80 m behind the EV at 5 px/m, 20 px margin; the road
  // top sits at y = 50 with 20 px/m across the road.
  CHECK(svg.find("data-label=\"EV\" x=\"409.25\" y=\"152.00\"") != std::string::npos);
  CHECK(svg.find("data-label=\"SV0\" x=\"359.25\" y=\"72.00\"") != std::string::npos);
  CHECK(svg.find("data-label=\"SV1\" x=\"159.25\" y=\"72.00\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("class=\"occupancy\"") != std::string::npos);
  CHECK(RenderSnapshot(log, c, PlannerKind::kProposed, 0) == svg);

  try {
    SnapshotIndex(log, 3.0);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("[0, 0] s") != std::string::npos);
  }
  CHECK_THROWS_AS(RenderSnapshot(log, c, PlannerKind::kProposed, 1), InvalidArgument);
  CHECK_THROWS_AS(SnapshotIndex(log, -1.0), InvalidArgument);
}

TEST_CASE("convergence bars") {
  std::vector<ConvergenceRow> rows(2);
  rows[0].size = 4;
  rows[0].summary.min_d_sv0 = {5.0, 1.0, 3};
  rows[1].size = 16;
  rows[1].summary.min_d_sv0 = {6.0, 0.5, 3};
  const std::string svg = RenderConvergenceBars(rows);
  CHECK(svg.find("data-values=\"5:1 6:0.5\"") != std::string::npos);
  CHECK(svg.find(">16<") != std::string::npos);
  CHECK_THROWS_AS(RenderConvergenceBars({}), InvalidArgument);
}

TEST_CASE("run command artifacts") {
  CommandOptions o;
  const CommandResult plain = CmdRun(Short(), o);
  REQUIRE(plain.artifacts.size() == 1);
  CHECK(plain.artifacts[0].path == "proposed_metrics.json");
  CHECK(plain.exit_code == kExitOk);

  o.planners = {PlannerKind::kProposed, PlannerKind::kRmpc, PlannerKind::kDmpc};
  o.emit_csv = o.emit_svg = true;
  o.snapshot_times = {0.0, 0.5, 0.0};
  const CommandResult all = CmdRun(Short(), o);
  std::vector<std::string> names;
  for (const Artifact& a : all.artifacts) names.push_back(a.path);
  for (const char* want : {"proposed.csv", "rmpc.csv", "dmpc.csv", "comparison.json",
                           "comparison_accel.svg", "rmpc_snapshot_002.svg", "dmpc_distance.svg"}) {
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  }
  CHECK(std::count(names.begin(), names.end(), "proposed_snapshot_000.svg") == 1);

  const CommandResult again = CmdRun(Short(), o);
  REQUIRE(again.artifacts.size() == all.artifacts.size());
  for (std::size_t i = 0; i < all.artifacts.size(); ++i) {
    CHECK(again.artifacts[i].contents == all.artifacts[i].contents);
  }

  o.planners = {PlannerKind::kDmpc, PlannerKind::kDmpc};
  CHECK_THROWS_AS(CmdRun(Short(), o), InvalidArgument);
  o.planners = {PlannerKind::kDmpc};
  o.snapshot_times = {100.0};
  CHECK_THROWS_AS(CmdRun(Short(), o), InvalidArgument);
}

TEST_CASE("monte-carlo and convergence commands") {
  CommandOptions o;
  o.episodes = 1;
  o.seed = 9;
  o.emit_csv = true;
  const CommandResult r = CmdMonteCarlo(Short(), o);
  REQUIRE(r.artifacts.size() == 2);
  const auto j = nlohmann::json::parse(r.artifacts[0].contents);
  CHECK(j["episodes"] == 1);
  CHECK(j["base_seed"] == 9);
  CHECK(j["max_abs_accel"]["std"] == 0.0);
  CHECK(j.contains("success_rate"));
  CHECK(j.contains("merge_ahead"));
  CHECK(CmdMonteCarlo(Short(), o).artifacts[0].contents == r.artifacts[0].contents);
  o.episodes = 0;
  CHECK_THROWS_AS(CmdMonteCarlo(Short(), o), InvalidArgument);

  CommandOptions c;
  c.sizes = {4};
  c.repeats = 1;
  c.emit_json = true;
  const CommandResult conv = CmdConvergence(Short(), c);
  REQUIRE(conv.artifacts.size() == 3);
  const std::string& table = conv.artifacts[0].contents;
  CHECK(std::count(table.begin(), table.end(), '\n') == 2);
  CHECK(table.rfind("4,1,", table.find('\n') + 1) != std::string::npos);
  c.repeats = 0;
  CHECK_THROWS_AS(CmdConvergence(Short(), c), InvalidArgument);
  c.repeats = 1;
  c.sizes.clear();
  CHECK_THROWS_AS(CmdConvergence(Short(), c), InvalidArgument);
}

TEST_CASE("plot command reads a written log") {
  const fs::path dir = fs::temp_directory_path() / "mergeplan_test_io_plot";
  fs::remove_all(dir);
  CommandOptions o;
  o.emit_csv = true;
  const CommandResult run = CmdRun(Short(), o);
  WriteArtifacts(dir.string(), run.artifacts);
  CHECK(fs::exists(dir / "proposed.csv"));

  CommandOptions p;
  p.log_path = (dir / "proposed.csv").string();
  p.snapshot_times = {0.25};
  const CommandResult plot = CmdPlot(Short(), p);
  REQUIRE(plot.artifacts.size() == 3);
  CHECK(plot.artifacts[2].path == "proposed_snapshot_001.svg");
  p.log_path = (dir / "missing.csv").string();
  CHECK_THROWS_AS(CmdPlot(Short(), p), IoError);
  fs::remove_all(dir);
}
