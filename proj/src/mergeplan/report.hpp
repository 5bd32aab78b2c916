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

// Episode CSV logs and JSON metrics.
//
// Numbers are written in shortest round-trip form so a parsed log reproduces
// the recorded values exactly. JSON objects have sorted keys; NaN is null.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mergeplan/sim.hpp"

namespace mergeplan {

const std::vector<std::string>& EpisodeCsvColumns();

std::string WriteEpisodeCsv(const EpisodeLog& log);

// Inverse of WriteEpisodeCsv. Collision flags are not part of the schema and
// come back false; fallback is derived from the solver status. Throws
// InvalidArgument naming the row and column on malformed input.
EpisodeLog ParseEpisodeCsv(std::string_view text, double T);

nlohmann::json MeanStdJson(const MeanStd& m);
nlohmann::json EpisodeMetricsJson(const EpisodeMetrics& m);
nlohmann::json BatchSummaryJson(const BatchSummary& s);

// Two-space indented, trailing newline.
std::string DumpJson(const nlohmann::json& j);

// One row per episode of a batch.
std::string WriteEpisodeIndexCsv(const BatchResult& batch);

// One row per information-set size.
std::string WriteConvergenceCsv(const std::vector<ConvergenceRow>& rows);

// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string FormatNumber(double v);

}  // namespace mergeplan
