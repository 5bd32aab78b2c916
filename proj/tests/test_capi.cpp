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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "mergeplan/mergeplan.h"

namespace fs = std::filesystem;

namespace {

struct Config {
  mp_config* p = nullptr;
  Config() { REQUIRE(mp_config_default(&p) == MP_OK); }
  ~Config() { mp_config_free(p); }
};

std::string Get(const mp_config* c, const char* key) {
  size_t needed = 0;
  REQUIRE(mp_config_get(c, key, nullptr, 0, &needed) == MP_OK);
  std::string out(needed + 1, '\0');
  REQUIRE(mp_config_get(c, key, out.data(), out.size(), &needed) == MP_OK);
  out.resize(needed);
  return out;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("status names and planner names") {
  CHECK(std::string(mp_version()) == "1.0.0");
  CHECK(std::string(mp_status_name(MP_OK)) == "ok");
  CHECK(std::string(mp_status_name(MP_ERR_CONFIG)) == "config");
  mp_planner p;
  CHECK(mp_planner_parse("rmpc", &p) == MP_OK);
  CHECK(p == MP_PLANNER_RMPC);
  CHECK(std::string(mp_planner_name(MP_PLANNER_DMPC)) == "dmpc");
  CHECK(mp_planner_parse("smpc", &p) == MP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(mp_last_error()).find("smpc") != std::string::npos);
  CHECK(mp_planner_parse(nullptr, &p) == MP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config handles") {
  Config c;
  CHECK(mp_config_validate(c.p) == MP_OK);
  CHECK(Get(c.p, "model.T") == "0.25");
  CHECK(Get(c.p, "mpc.u_upper") == "50, 2.5, 0.1");

  CHECK(mp_config_set(c.p, "sim.max_steps", "30") == MP_OK);
  CHECK(Get(c.p, "sim.max_steps") == "30");
  CHECK(mp_config_set(c.p, "sim.max_steps", "lots") == MP_ERR_CONFIG);
  CHECK(std::string(mp_last_error()).find("sim.max_steps") != std::string::npos);
  CHECK(mp_config_set(c.p, "bogus", "1") == MP_ERR_CONFIG);
  char small[4];
  size_t needed = 0;
  CHECK(mp_config_get(c.p, "bogus", small, sizeof small, &needed) == MP_ERR_CONFIG);

  // A value that parses but breaks a cross-field constraint.
  CHECK(mp_config_set(c.p, "mpc.n_p", "40") == MP_OK);
  CHECK(mp_config_validate(c.p) == MP_ERR_CONFIG);
  CHECK(mp_config_set(c.p, "mpc.n_p", "10") == MP_OK);

  // Serialize, parse and clone agree.
  CHECK(mp_config_serialize(c.p, small, sizeof small, &needed) == MP_ERR_BUFFER_TOO_SMALL);
  CHECK(std::strlen(small) < sizeof small);
  std::string text(needed + 1, '\0');
  REQUIRE(mp_config_serialize(c.p, text.data(), text.size(), &needed) == MP_OK);
  CHECK(needed == text.size() - 1);
  mp_config* parsed = nullptr;
  REQUIRE(mp_config_parse(text.c_str(), &parsed) == MP_OK);
  CHECK(mp_config_equal(parsed, c.p) == 1);
  mp_config* copy = nullptr;
  REQUIRE(mp_config_clone(c.p, &copy) == MP_OK);
  CHECK(mp_config_equal(copy, c.p) == 1);
  CHECK(mp_config_set(copy, "decision.W_v", "0.5") == MP_OK);
  CHECK(mp_config_equal(copy, c.p) == 0);
  mp_config_free(parsed);
  mp_config_free(copy);
  mp_config_free(nullptr);

  mp_config* bad = nullptr;
  CHECK(mp_config_parse("foo = 1\n", &bad) == MP_ERR_CONFIG);
  CHECK(bad == nullptr);
  CHECK(mp_config_load("/nonexistent.cfg", &bad) == MP_ERR_IO);
  CHECK(mp_config_load(MERGEPLAN_CONFIG_DIR "/table1_table2.cfg", &bad) == MP_OK);
  Config d;
  CHECK(mp_config_equal(bad, d.p) == 1);
  mp_config_free(bad);
}

TEST_CASE("episode stepping") {
  Config c;
  REQUIRE(mp_config_set(c.p, "sim.max_steps", "6") == MP_OK);
  mp_episode* ep = nullptr;
  REQUIRE(mp_episode_create(c.p, MP_PLANNER_PROPOSED, 3, &ep) == MP_OK);
  // The episode keeps its own copy of the config.
  mp_config_set(c.p, "sim.max_steps", "2");
  mp_step_record r;
  int ticks = 0;
  while (!mp_episode_done(ep)) {
    REQUIRE(mp_episode_step(ep, &r) == MP_OK);
    CHECK(r.step == ticks);
    CHECK(r.t == doctest::Approx(0.25 * ticks));
    CHECK(r.sv_a_min[0] <= r.sv_a_max[0]);
    ++ticks;
  }
  CHECK(ticks == 6);
  CHECK(mp_episode_num_records(ep) == 6);
  CHECK(mp_episode_step(ep, &r) == MP_ERR_INVALID_STATE);
  CHECK(mp_episode_record(ep, 6, &r) == MP_ERR_INVALID_ARGUMENT);
  mp_step_record first;
  REQUIRE(mp_episode_record(ep, 0, &first) == MP_OK);
  CHECK(first.ev_p_x == 822.5);
  CHECK(first.sv_a_min[0] == 0.0);
  CHECK(first.sv_a_max[0] == 0.0);
  mp_episode_metrics m;
  REQUIRE(mp_episode_get_metrics(ep, &m) == MP_OK);
  CHECK(m.steps == 6);
  CHECK(m.outcome == MP_OUTCOME_STEP_LIMIT);
  CHECK(m.success == 0);
  mp_episode_free(ep);

  mp_episode_metrics whole;
  mp_config_set(c.p, "sim.max_steps", "6");
  REQUIRE(mp_run_episode(c.p, MP_PLANNER_PROPOSED, 3, &whole) == MP_OK);
  CHECK(whole.max_abs_accel == m.max_abs_accel);
  CHECK((whole.min_d_sv1 == m.min_d_sv1 ||
         (std::isnan(whole.min_d_sv1) && std::isnan(m.min_d_sv1))));
  CHECK(mp_episode_create(c.p, static_cast<mp_planner>(7), 1, &ep) == MP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("monte carlo summary") {
  Config c;
  mp_config_set(c.p, "sim.max_steps", "4");
  mp_batch_summary a, b;
  REQUIRE(mp_monte_carlo(c.p, MP_PLANNER_DMPC, 3, 10, 1, &a) == MP_OK);
  REQUIRE(mp_monte_carlo(c.p, MP_PLANNER_DMPC, 3, 10, 2, &b) == MP_OK);
  CHECK(a.episodes == 3);
  CHECK(a.merge_ahead + a.merge_between + a.merge_after + a.merge_none == 3);
  CHECK(a.max_abs_accel.mean == b.max_abs_accel.mean);
  CHECK(a.max_abs_accel.std == b.max_abs_accel.std);
  CHECK(mp_monte_carlo(c.p, MP_PLANNER_DMPC, 0, 10, 1, &a) == MP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("commands write files only on success") {
  const fs::path dir = fs::temp_directory_path() / "mergeplan_test_capi";
  fs::remove_all(dir);
  Config c;
  mp_config_set(c.p, "sim.max_steps", "8");
  const std::string out = dir.string();
  mp_planner planners[] = {MP_PLANNER_PROPOSED, MP_PLANNER_DMPC};
  mp_command_options o{};
  o.planners = planners;
  o.num_planners = 2;
  o.out_dir = out.c_str();
  o.emit = MP_EMIT_CSV | MP_EMIT_JSON;
  int exit_code = -1;
  REQUIRE(mp_cmd_run(c.p, &o, &exit_code) == MP_OK);
  CHECK(exit_code == 0);
  CHECK(fs::exists(dir / "proposed.csv"));
  CHECK(fs::exists(dir / "dmpc_metrics.json"));
  CHECK(fs::exists(dir / "comparison.json"));
  const std::string first = Slurp(dir / "comparison.json");
  REQUIRE(mp_cmd_run(c.p, &o, &exit_code) == MP_OK);
  CHECK(Slurp(dir / "comparison.json") == first);

  const fs::path other = dir / "nested";
  const std::string other_s = other.string();
  o.out_dir = other_s.c_str();
  double times[] = {50.0};
  o.snapshot_times = times;
  o.num_snapshot_times = 1;
  o.emit = MP_EMIT_SVG;
  CHECK(mp_cmd_run(c.p, &o, &exit_code) == MP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(mp_last_error()).find("valid range") != std::string::npos);
  CHECK_FALSE(fs::exists(other));

  mp_command_options conv{};
  int sizes[] = {2};
  conv.sizes = sizes;
  conv.num_sizes = 1;
  conv.repeats = 1;
  conv.out_dir = out.c_str();
  REQUIRE(mp_cmd_convergence(c.p, &conv, &exit_code) == MP_OK);
  CHECK(fs::exists(dir / "convergence.csv"));
  conv.repeats = -1;
  CHECK(mp_cmd_convergence(c.p, &conv, &exit_code) == MP_ERR_INVALID_ARGUMENT);

  mp_command_options plot{};
  const std::string log = (dir / "proposed.csv").string();
  plot.log_path = log.c_str();
  plot.out_dir = out.c_str();
  REQUIRE(mp_cmd_plot(c.p, &plot, &exit_code) == MP_OK);
  CHECK(fs::exists(dir / "proposed_distance.svg"));
  CHECK(mp_cmd_plot(c.p, nullptr, &exit_code) == MP_ERR_INVALID_ARGUMENT);
  fs::remove_all(dir);
}
