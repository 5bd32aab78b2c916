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

// Scenario config files: one `section.key = value` per line, `#` comments.
// Unknown keys, duplicates and malformed values are rejected with the key and
// line. The initial EV and SV states are required; every other key defaults
// to the ScenarioConfig default.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mergeplan/sim.hpp"

namespace mergeplan {

// Throws ConfigError.
ScenarioConfig ParseConfig(std::string_view text);
// Throws IoError when the file cannot be read, ConfigError otherwise.
ScenarioConfig LoadConfig(const std::string& path);

// Every key in canonical order; parses back to an identical config.
std::string SerializeConfig(const ScenarioConfig& config);

// Sets one key on an existing config. Throws ConfigError (line 0).
void SetConfigValue(ScenarioConfig& config, std::string_view key, std::string_view value);
std::string GetConfigValue(const ScenarioConfig& config, std::string_view key);

std::vector<std::string> ConfigKeys();
std::vector<std::string> RequiredConfigKeys();

}  // namespace mergeplan
