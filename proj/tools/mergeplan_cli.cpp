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

// mergeplan: command-line front end over the C API.
//
//   mergeplan run          --config F [--planner P]... [--seed S] [--emit csv|json|svg]...
//   mergeplan monte-carlo  --config F [--planner P]... [--episodes N]
//   mergeplan convergence  --config F [--sizes 4,16,...] [--repeats R]
//   mergeplan plot         --config F --log episode.csv [--snapshot-times 0,5]
//
// Exit codes: 0 success, 1 usage or config error, 2 an episode ended in a
// collision, 3 solver failure cascade.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mergeplan/mergeplan.h"

namespace {

struct Args {
  std::string config_path;
  std::vector<std::string> planners;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::vector<std::string> emit;
  std::vector<double> snapshot_times;
  int episodes = 50;
  std::vector<int> sizes{4, 16, 64, 256, 1024};
  int repeats = 20;
  int threads = 0;
  std::string log_path;
};

int Error(const char* what) {
  std::fprintf(stderr, "mergeplan: %s: %s\n", what, mp_last_error());
  return 1;
}

void AddCommon(CLI::App* cmd, Args& a, bool planners, bool seed) {
  cmd->add_option("--config", a.config_path, "Scenario config file")->required()->check(
      CLI::ExistingFile);
  if (planners) {
    cmd->add_option("--planner", a.planners, "proposed, rmpc or dmpc (repeatable)")
        ->check(CLI::IsMember({"proposed", "rmpc", "dmpc"}))
        ->take_all();
  }
  if (seed) cmd->add_option("--seed", a.seed, "Seed (base seed for batches)");
  cmd->add_option("--out", a.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--emit", a.emit, "Extra outputs: csv, json, svg (repeatable)")
      ->check(CLI::IsMember({"csv", "json", "svg"}))
      ->delimiter(',');
  cmd->add_option("--threads", a.threads, "Worker threads for batches (0: default)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forced-merging motion planner simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mp_version()));
  Args a;

  CLI::App* run = app.add_subcommand("run", "Run one episode per planner with a shared seed");
  AddCommon(run, a, true, true);
  run->add_option("--snapshot-times", a.snapshot_times, "Snapshot times in seconds")
      ->delimiter(',');

  CLI::App* mc = app.add_subcommand("monte-carlo", "Monte-Carlo batch per planner");
  AddCommon(mc, a, true, true);
  mc->add_option("--episodes", a.episodes, "Episodes per planner")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CLI::App* conv = app.add_subcommand("convergence", "Information-set size study");
  AddCommon(conv, a, false, true);
  conv->add_option("--sizes", a.sizes, "Initial information-set sizes")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  conv->add_option("--repeats", a.repeats, "Episodes per size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CLI::App* plot = app.add_subcommand("plot", "Render SVG plots from an episode CSV");
  AddCommon(plot, a, true, false);
  plot->add_option("--log", a.log_path, "Episode CSV written by run --emit csv")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--snapshot-times", a.snapshot_times, "Snapshot times in seconds")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  mp_config* config = nullptr;
  if (mp_config_load(a.config_path.c_str(), &config) != MP_OK) return Error("config");

  std::vector<mp_planner> planners;
  for (const std::string& p : a.planners) {
    mp_planner k;
    if (mp_planner_parse(p.c_str(), &k) != MP_OK) {
      mp_config_free(config);
      return Error("planner");
    }
    planners.push_back(k);
  }

  mp_command_options o{};
  o.planners = planners.data();
  o.num_planners = planners.size();
  o.out_dir = a.out_dir.c_str();
  for (const std::string& e : a.emit) {
    if (e == "csv") o.emit |= MP_EMIT_CSV;
    if (e == "json") o.emit |= MP_EMIT_JSON;
    if (e == "svg") o.emit |= MP_EMIT_SVG;
  }
  o.snapshot_times = a.snapshot_times.data();
  o.num_snapshot_times = a.snapshot_times.size();
  o.episodes = a.episodes;
  o.sizes = a.sizes.data();
  o.num_sizes = a.sizes.size();
  o.repeats = a.repeats;
  o.threads = a.threads;
  o.log_path = a.log_path.c_str();
  for (CLI::App* cmd : {run, mc, conv}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) {
      o.has_seed = 1;
      o.seed = a.seed;
    }
  }

  int exit_code = 0;
  mp_status status = MP_OK;
  if (run->parsed()) {
    status = mp_cmd_run(config, &o, &exit_code);
  } else if (mc->parsed()) {
    status = mp_cmd_monte_carlo(config, &o, &exit_code);
  } else if (conv->parsed()) {
    status = mp_cmd_convergence(config, &o, &exit_code);
  } else {
    status = mp_cmd_plot(config, &o, &exit_code);
  }
  mp_config_free(config);
  if (status != MP_OK) return Error(mp_status_name(status));
  return exit_code;
}
