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

// Self-contained SVG plots. Output depends only on the inputs, so identical
// logs render to identical bytes. Every plotted series also carries its raw
// values in a data-values attribute for inspection.

#pragma once

#include <string>
#include <vector>

#include "mergeplan/sim.hpp"

namespace mergeplan {

enum class PlotKind { kSnapshot, kAccelTrace, kDistanceTrace, kConvergenceBars };

struct LabeledLog {
  std::string label;
  const EpisodeLog* log = nullptr;
};

// Record index for a snapshot time, rounded to the nearest step. Throws
// InvalidArgument listing the valid range when out of bounds.
int SnapshotIndex(const EpisodeLog& log, double time);

// Road, lane divider, lane end, vehicle rectangles and the occupancy outlines
// the planner of `kind` would use at record `index`.
std::string RenderSnapshot(const EpisodeLog& log, const ScenarioConfig& config, PlannerKind kind,
                           int index);

// EV longitudinal acceleration over time, one line per log.
std::string RenderAccelTrace(const std::vector<LabeledLog>& logs);

// Recorded footprint distances to SV0 and SV1 over time.
std::string RenderDistanceTrace(const EpisodeLog& log);

// Mean +- std of the three metrics per information-set size.
std::string RenderConvergenceBars(const std::vector<ConvergenceRow>& rows);

}  // namespace mergeplan
