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

// Batch commands behind the command-line tool. Each command computes and
// renders every artifact in memory first and writes files only afterwards,
// so a failing command leaves no partial output.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mergeplan/sim.hpp"

namespace mergeplan {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitCollision = 2,
  kExitSolverCascade = 3,
};

struct CommandOptions {
  std::vector<PlannerKind> planners{PlannerKind::kProposed};
  // Falls back to the config seed.
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool emit_csv = false;
  bool emit_json = false;
  bool emit_svg = false;
  std::vector<double> snapshot_times;
  int episodes = 50;
  std::vector<int> sizes{4, 16, 64, 256, 1024};
  int repeats = 20;
  int threads = 0;
  // Episode CSV read by the plot command.
  std::string log_path;
};

struct Artifact {
  std::string path;
  std::string contents;
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<Artifact> artifacts;
};

// Per planner: <planner>_metrics.json always; <planner>.csv with csv;
// <planner>_accel.svg, <planner>_distance.svg and
// <planner>_snapshot_<step>.svg with svg. Several planners add
// comparison.json (and comparison_accel.svg with svg).
CommandResult CmdRun(const ScenarioConfig& config, const CommandOptions& options);

// Per planner: monte_carlo_<planner>.json always and
// monte_carlo_<planner>_episodes.csv with csv. Several planners add
// monte_carlo.json.
CommandResult CmdMonteCarlo(const ScenarioConfig& config, const CommandOptions& options);

// convergence.csv and convergence.svg, plus convergence.json with json.
CommandResult CmdConvergence(const ScenarioConfig& config, const CommandOptions& options);

// Renders plots from an episode CSV: <stem>_accel.svg, <stem>_distance.svg
// and <stem>_snapshot_<step>.svg for each requested time. The first planner
// selects the occupancy outlines.
CommandResult CmdPlot(const ScenarioConfig& config, const CommandOptions& options);

// Creates out_dir if needed and writes every artifact. Throws IoError.
void WriteArtifacts(const std::string& out_dir, const std::vector<Artifact>& artifacts);

}  // namespace mergeplan
