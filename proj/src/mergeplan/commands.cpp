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

#include "mergeplan/commands.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mergeplan/error.hpp"
#include "mergeplan/report.hpp"
#include "mergeplan/svg.hpp"

namespace mergeplan {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void CheckPlanners(const CommandOptions& o) {
  if (o.planners.empty()) throw InvalidArgument("at least one planner is required");
  std::set<PlannerKind> seen;
  for (PlannerKind k : o.planners) {
    if (!seen.insert(k).second) {
      throw InvalidArgument("planner '" + std::string(PlannerKindName(k)) + "' given twice");
    }
  }
}

int ExitFor(bool cascade, bool collision) {
  if (cascade) return kExitSolverCascade;
  if (collision) return kExitCollision;
  return kExitOk;
}

std::string StepTag(int index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

// Snapshot indices in request order, duplicates removed.
std::vector<int> SnapshotIndices(const EpisodeLog& log, const std::vector<double>& times) {
  std::vector<int> out;
  for (double t : times) {
    const int i = SnapshotIndex(log, t);
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CommandResult CmdRun(const ScenarioConfig& config, const CommandOptions& options) {
  CheckPlanners(options);
  config.Validate();
  const std::uint64_t seed = options.seed.value_or(config.seed);
  CommandResult res;
  std::vector<EpisodeResult> episodes;
  bool cascade = false, collision = false;
  json comparison = json::object();
  for (PlannerKind kind : options.planners) {
    episodes.push_back(RunEpisode(config, kind, seed));
    const EpisodeResult& e = episodes.back();
    const std::string name(PlannerKindName(kind));
    cascade = cascade || e.metrics.solver_cascade;
    collision = collision || e.metrics.outcome == EpisodeOutcome::kCollision;

    json metrics = EpisodeMetricsJson(e.metrics);
    metrics["planner"] = name;
    metrics["seed"] = seed;
    comparison[name] = metrics;
    res.artifacts.push_back({name + "_metrics.json", DumpJson(metrics)});
    if (options.emit_csv) res.artifacts.push_back({name + ".csv", WriteEpisodeCsv(e.log)});
    if (options.emit_svg) {
      res.artifacts.push_back({name + "_accel.svg", RenderAccelTrace({{name, &e.log}})});
      res.artifacts.push_back({name + "_distance.svg", RenderDistanceTrace(e.log)});
      for (int i : SnapshotIndices(e.log, options.snapshot_times)) {
        res.artifacts.push_back({name + "_snapshot_" + StepTag(i) + ".svg",
                                 RenderSnapshot(e.log, config, kind, i)});
      }
    }
  }
  if (options.planners.size() > 1) {
    res.artifacts.push_back({"comparison.json", DumpJson(json{{"seed", seed}, {"planners", comparison}})});
    if (options.emit_svg) {
      std::vector<LabeledLog> logs;
      for (std::size_t i = 0; i < episodes.size(); ++i) {
        logs.push_back({std::string(PlannerKindName(options.planners[i])), &episodes[i].log});
      }
      res.artifacts.push_back({"comparison_accel.svg", RenderAccelTrace(logs)});
    }
  }
  res.exit_code = ExitFor(cascade, collision);
  return res;
}

CommandResult CmdMonteCarlo(const ScenarioConfig& config, const CommandOptions& options) {
  CheckPlanners(options);
  if (options.episodes < 1) throw InvalidArgument("episodes must be >= 1");
  config.Validate();
  const std::uint64_t seed = options.seed.value_or(config.seed);
  CommandResult res;
  bool cascade = false, collision = false;
  json combined = json::object();
  for (PlannerKind kind : options.planners) {
    const BatchResult batch = RunMonteCarlo(config, kind, options.episodes, seed, options.threads);
    const std::string name(PlannerKindName(kind));
    cascade = cascade || batch.summary.solver_cascades > 0;
    collision = collision || batch.summary.collisions > 0;
    json j = BatchSummaryJson(batch.summary);
    j["planner"] = name;
    j["base_seed"] = seed;
    combined[name] = j;
    res.artifacts.push_back({"monte_carlo_" + name + ".json", DumpJson(j)});
    if (options.emit_csv) {
      res.artifacts.push_back({"monte_carlo_" + name + "_episodes.csv", WriteEpisodeIndexCsv(batch)});
    }
  }
  if (options.planners.size() > 1) {
    res.artifacts.push_back(
        {"monte_carlo.json", DumpJson(json{{"base_seed", seed}, {"planners", combined}})});
  }
  res.exit_code = ExitFor(cascade, collision);
  return res;
}

CommandResult CmdConvergence(const ScenarioConfig& config, const CommandOptions& options) {
  if (options.sizes.empty()) throw InvalidArgument("at least one information-set size is required");
  if (options.repeats < 1) throw InvalidArgument("repeats must be >= 1");
  config.Validate();
  const std::uint64_t seed = options.seed.value_or(config.seed);
  const std::vector<ConvergenceRow> rows =
      ConvergenceStudy(config, options.sizes, options.repeats, seed, options.threads);
  CommandResult res;
  res.artifacts.push_back({"convergence.csv", WriteConvergenceCsv(rows)});
  res.artifacts.push_back({"convergence.svg", RenderConvergenceBars(rows)});
  bool cascade = false, collision = false;
  json table = json::array();
  for (const ConvergenceRow& r : rows) {
    cascade = cascade || r.summary.solver_cascades > 0;
    collision = collision || r.summary.collisions > 0;
    json j = BatchSummaryJson(r.summary);
    j["size"] = r.size;
    table.push_back(j);
  }
  if (options.emit_json) {
    res.artifacts.push_back(
        {"convergence.json",
         DumpJson(json{{"base_seed", seed}, {"repeats", options.repeats}, {"rows", table}})});
  }
  res.exit_code = ExitFor(cascade, collision);
  return res;
}

CommandResult CmdPlot(const ScenarioConfig& config, const CommandOptions& options) {
  CheckPlanners(options);
  if (options.log_path.empty()) throw InvalidArgument("plot requires an episode CSV log");
  config.Validate();
  const EpisodeLog log = ParseEpisodeCsv(ReadFile(options.log_path), config.T);
  if (log.records.empty()) throw InvalidArgument("plot: the log has no records");
  const std::string stem = fs::path(options.log_path).stem().string();
  CommandResult res;
  res.artifacts.push_back({stem + "_accel.svg", RenderAccelTrace({{stem, &log}})});
  res.artifacts.push_back({stem + "_distance.svg", RenderDistanceTrace(log)});
  for (int i : SnapshotIndices(log, options.snapshot_times)) {
    res.artifacts.push_back({stem + "_snapshot_" + StepTag(i) + ".svg",
                             RenderSnapshot(log, config, options.planners.front(), i)});
  }
  return res;
}

void WriteArtifacts(const std::string& out_dir, const std::vector<Artifact>& artifacts) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir + "'");
  }
  for (const Artifact& a : artifacts) {
    const fs::path p = fs::path(out_dir) / a.path;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << a.contents;
    out.close();
    if (!out) throw IoError("cannot write '" + p.string() + "'");
  }
}

}  // namespace mergeplan
