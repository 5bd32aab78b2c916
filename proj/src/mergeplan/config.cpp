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

#include "mergeplan/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mergeplan/error.hpp"

namespace mergeplan {

namespace {

enum class Range { kAny, kNonNegative, kPositive };

struct Field {
  std::string key;
  bool required = false;
  std::function<std::string(const ScenarioConfig&)> get;
  // Throws std::string with the reason on a bad value.
  std::function<void(ScenarioConfig&, std::string_view)> set;
};

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double ParseDouble(std::string_view s, Range range) {
  s = Trim(s);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::string("expected a number, got '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw std::string("value must be finite");
  if (range == Range::kNonNegative && v < 0.0) throw std::string("value must be >= 0");
  if (range == Range::kPositive && v <= 0.0) throw std::string("value must be > 0");
  return v;
}

long long ParseInteger(std::string_view s, long long min) {
  s = Trim(s);
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::string("expected an integer, got '" + std::string(s) + "'");
  }
  if (v < min) throw std::string("value must be >= " + std::to_string(min));
  return v;
}

bool ParseBool(std::string_view s) {
  s = Trim(s);
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::string("expected true or false, got '" + std::string(s) + "'");
}

template <int n>
Eigen::Matrix<double, n, 1> ParseVector(std::string_view s, Range range) {
  Eigen::Matrix<double, n, 1> out;
  int i = 0;
  for (;;) {
    const auto comma = s.find(',');
    if (i == n) throw std::string("expected " + std::to_string(n) + " comma-separated numbers");
    out[i++] = ParseDouble(s.substr(0, comma), range);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (i != n) throw std::string("expected " + std::to_string(n) + " comma-separated numbers");
  return out;
}

template <typename V>
std::string FormatVector(const V& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += FormatDouble(v[i]);
  }
  return out;
}

class Registry {
 public:
  Registry() {
    Real("ev.initial.p_x", &ScenarioConfig::ev, &EvState::p_x, Range::kAny, true);
    Real("ev.initial.p_y", &ScenarioConfig::ev, &EvState::p_y, Range::kAny, true);
    Real("ev.initial.phi", &ScenarioConfig::ev, &EvState::phi, Range::kAny, true);
    Real("ev.initial.v", &ScenarioConfig::ev, &EvState::v, Range::kNonNegative, true);
    Real("ev.initial.a", &ScenarioConfig::ev, &EvState::a, Range::kAny, true);
    Sv("sv0", &ScenarioConfig::sv0);
    Sv("sv1", &ScenarioConfig::sv1);

    Real("road.w_lane", &ScenarioConfig::w_lane, Range::kPositive);
    Real("road.p_x_ter", &ScenarioConfig::p_x_ter, Range::kPositive);
    Real("vehicle.l_f", &ScenarioConfig::geometry, &VehicleGeometry::l_f, Range::kPositive);
    Real("vehicle.l_r", &ScenarioConfig::geometry, &VehicleGeometry::l_r, Range::kPositive);
    Real("vehicle.l_veh", &ScenarioConfig::geometry, &VehicleGeometry::l_veh, Range::kPositive);
    Real("vehicle.w_veh", &ScenarioConfig::geometry, &VehicleGeometry::w_veh, Range::kPositive);

    Real("model.T", &ScenarioConfig::T, Range::kPositive);
    Real("model.mu", &ScenarioConfig::mu, Range::kPositive);
    Real("model.g", &ScenarioConfig::g, Range::kPositive);
    Real("model.v_adm", &ScenarioConfig::v_adm, Range::kPositive);
    Vec<3>("model.k_lon", &ScenarioConfig::k_lon, Range::kAny);
    Vec<3>("model.k_lat", &ScenarioConfig::k_lat, Range::kAny);

    Int("decision.N", &ScenarioConfig::N, 1);
    Real("decision.d_min", &ScenarioConfig::d_min_decision, Range::kNonNegative);
    Real("decision.W_x", &ScenarioConfig::W_x, Range::kNonNegative);
    Real("decision.W_y", &ScenarioConfig::W_y, Range::kNonNegative);
    Real("decision.W_v", &ScenarioConfig::W_v, Range::kNonNegative);
    Real("decision.W_l", &ScenarioConfig::W_l, Range::kNonNegative);

    Int("mpc.n_p", &ScenarioConfig::n_p, 1);
    Real("mpc.d_min", &ScenarioConfig::d_min, Range::kNonNegative);
    Real("mpc.q1", &ScenarioConfig::q1, Range::kNonNegative);
    Real("mpc.q2", &ScenarioConfig::q2, Range::kNonNegative);
    Vec<2>("mpc.q3", &ScenarioConfig::q3, Range::kNonNegative);
    Vec<3>("mpc.u_lower", &ScenarioConfig::u_lower, Range::kAny);
    Vec<3>("mpc.u_upper", &ScenarioConfig::u_upper, Range::kAny);
    Int("mpc.sqp.max_iterations", &ScenarioConfig::sqp, &SqpSettings::max_iterations, 1);
    Real("mpc.sqp.kkt_tolerance", &ScenarioConfig::sqp, &SqpSettings::kkt_tolerance, Range::kPositive);
    Real("mpc.sqp.merit_penalty", &ScenarioConfig::sqp, &SqpSettings::merit_penalty, Range::kPositive);
    Real("mpc.sqp.backtracking", &ScenarioConfig::sqp, &SqpSettings::backtracking, Range::kPositive);
    Real("mpc.sqp.slack_penalty", &ScenarioConfig::sqp, &SqpSettings::slack_penalty, Range::kPositive);
    Bool("mpc.sqp.warm_start", &ScenarioConfig::sqp, &SqpSettings::warm_start);

    Int("sim.initial_samples", &ScenarioConfig::initial_samples, 0);
    Int("sim.max_steps", &ScenarioConfig::max_steps, 1);
    Int("sim.settle_steps", &ScenarioConfig::settle_steps, 0);
    Int("sim.stop_steps", &ScenarioConfig::stop_steps, 1);
    Real("sim.stop_speed", &ScenarioConfig::stop_speed, Range::kNonNegative);
    Int("sim.cascade_steps", &ScenarioConfig::cascade_steps, 1);
    fields_.push_back({"sim.seed", false,
                       [](const ScenarioConfig& c) { return std::to_string(c.seed); },
                       [](ScenarioConfig& c, std::string_view s) {
                         s = Trim(s);
                         std::uint64_t v = 0;
                         const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
                         if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
                           throw std::string("expected an unsigned 64-bit integer");
                         }
                         c.seed = v;
                       }});
    Bool("sim.record_timing", &ScenarioConfig::record_timing);

    for (std::size_t i = 0; i < fields_.size(); ++i) index_[fields_[i].key] = i;
  }

  const std::vector<Field>& fields() const { return fields_; }

  const Field& Find(std::string_view key, int line) const {
    const auto it = index_.find(std::string(key));
    if (it == index_.end()) throw ConfigError(std::string(key), line, "unknown key");
    return fields_[it->second];
  }

 private:
  template <typename M>
  void Real(const std::string& key, M ScenarioConfig::*m, Range range, bool required = false) {
    fields_.push_back({key, required,
                       [m](const ScenarioConfig& c) { return FormatDouble(c.*m); },
                       [m, range](ScenarioConfig& c, std::string_view s) {
                         c.*m = ParseDouble(s, range);
                       }});
  }

  template <typename S, typename M>
  void Real(const std::string& key, S ScenarioConfig::*outer, M S::*m, Range range,
            bool required = false) {
    fields_.push_back({key, required,
                       [outer, m](const ScenarioConfig& c) { return FormatDouble(c.*outer.*m); },
                       [outer, m, range](ScenarioConfig& c, std::string_view s) {
                         c.*outer.*m = ParseDouble(s, range);
                       }});
  }

  void Int(const std::string& key, int ScenarioConfig::*m, int min) {
    fields_.push_back({key, false,
                       [m](const ScenarioConfig& c) { return std::to_string(c.*m); },
                       [m, min](ScenarioConfig& c, std::string_view s) {
                         const long long v = ParseInteger(s, min);
                         if (v > 1000000000) throw std::string("value too large");
                         c.*m = static_cast<int>(v);
                       }});
  }

  template <typename S>
  void Int(const std::string& key, S ScenarioConfig::*outer, int S::*m, int min) {
    fields_.push_back({key, false,
                       [outer, m](const ScenarioConfig& c) { return std::to_string(c.*outer.*m); },
                       [outer, m, min](ScenarioConfig& c, std::string_view s) {
                         const long long v = ParseInteger(s, min);
                         if (v > 1000000000) throw std::string("value too large");
                         c.*outer.*m = static_cast<int>(v);
                       }});
  }

  void Bool(const std::string& key, bool ScenarioConfig::*m) {
    fields_.push_back({key, false,
                       [m](const ScenarioConfig& c) { return std::string(c.*m ? "true" : "false"); },
                       [m](ScenarioConfig& c, std::string_view s) { c.*m = ParseBool(s); }});
  }

  template <typename S>
  void Bool(const std::string& key, S ScenarioConfig::*outer, bool S::*m) {
    fields_.push_back({key, false,
                       [outer, m](const ScenarioConfig& c) {
                         return std::string(c.*outer.*m ? "true" : "false");
                       },
                       [outer, m](ScenarioConfig& c, std::string_view s) {
                         c.*outer.*m = ParseBool(s);
                       }});
  }

  template <int n>
  void Vec(const std::string& key, Eigen::Matrix<double, n, 1> ScenarioConfig::*m, Range range) {
    fields_.push_back({key, false,
                       [m](const ScenarioConfig& c) { return FormatVector(c.*m); },
                       [m, range](ScenarioConfig& c, std::string_view s) {
                         c.*m = ParseVector<n>(s, range);
                       }});
  }

  void Sv(const std::string& name, SvConfig ScenarioConfig::*sv) {
    auto real = [&](const std::string& key, auto getter, Range range, bool required) {
      fields_.push_back({name + "." + key, required,
                         [sv, getter](const ScenarioConfig& c) {
                           return FormatDouble(getter(const_cast<SvConfig&>(c.*sv)));
                         },
                         [sv, getter, range](ScenarioConfig& c, std::string_view s) {
                           getter(c.*sv) = ParseDouble(s, range);
                         }});
    };
    real("initial.p_x", [](SvConfig& s) -> double& { return s.p_x; }, Range::kAny, true);
    real("initial.v", [](SvConfig& s) -> double& { return s.v; }, Range::kNonNegative, true);
    real("lane_center", [](SvConfig& s) -> double& { return s.lane_center; }, Range::kAny, false);
    fields_.push_back({name + ".profile.kind", false,
                       [sv](const ScenarioConfig& c) {
                         return std::string(BehaviorKindName((c.*sv).profile.kind));
                       },
                       [sv](ScenarioConfig& c, std::string_view s) {
                         const auto k = ParseBehaviorKind(Trim(s));
                         if (!k) {
                           throw std::string("expected nominal or sudden_accel_near_terminal");
                         }
                         (c.*sv).profile.kind = *k;
                       }});
    for (const char* dist : {"nominal", "burst"}) {
      const bool nominal = std::string_view(dist) == "nominal";
      auto pick = [nominal](SvConfig& s) -> TruncatedGaussian& {
        return nominal ? s.profile.nominal : s.profile.burst;
      };
      const std::string p = std::string("profile.") + dist + ".";
      real(p + "mean", [pick](SvConfig& s) -> double& { return pick(s).mean; }, Range::kAny, false);
      real(p + "std", [pick](SvConfig& s) -> double& { return pick(s).std; }, Range::kNonNegative,
           false);
      real(p + "lower", [pick](SvConfig& s) -> double& { return pick(s).lower; }, Range::kAny,
           false);
      real(p + "upper", [pick](SvConfig& s) -> double& { return pick(s).upper; }, Range::kAny,
           false);
    }
    real("profile.trigger_window", [](SvConfig& s) -> double& { return s.profile.trigger_window; },
         Range::kNonNegative, false);
    real("profile.terminal_range", [](SvConfig& s) -> double& { return s.profile.terminal_range; },
         Range::kNonNegative, false);
  }

  std::vector<Field> fields_;
  std::map<std::string, std::size_t> index_;
};

const Registry& GetRegistry() {
  static const Registry registry;
  return registry;
}

void Assign(const Field& f, ScenarioConfig& c, std::string_view value, int line) {
  try {
    f.set(c, value);
  } catch (const std::string& reason) {
    throw ConfigError(f.key, line, reason);
  }
}

}  // namespace

ScenarioConfig ParseConfig(std::string_view text) {
  const Registry& reg = GetRegistry();
  ScenarioConfig config;
  std::set<std::string> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), line_no, "expected 'key = value'");
    }
    const std::string key(Trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("", line_no, "missing key before '='");
    const Field& f = reg.Find(key, line_no);
    if (!seen.insert(key).second) throw ConfigError(key, line_no, "duplicate key");
    Assign(f, config, line.substr(eq + 1), line_no);
  }
  for (const Field& f : reg.fields()) {
    if (f.required && !seen.count(f.key)) throw ConfigError(f.key, 0, "missing required key");
  }
  try {
    config.Validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("", 0, e.what());
  }
  return config;
}

ScenarioConfig LoadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string SerializeConfig(const ScenarioConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : GetRegistry().fields()) {
    const std::string s = f.key.substr(0, f.key.find('.'));
    if (!section.empty() && s != section) out += '\n';
    section = s;
    out += f.key + " = " + f.get(config) + '\n';
  }
  return out;
}

void SetConfigValue(ScenarioConfig& config, std::string_view key, std::string_view value) {
  Assign(GetRegistry().Find(key, 0), config, value, 0);
}

std::string GetConfigValue(const ScenarioConfig& config, std::string_view key) {
  return GetRegistry().Find(key, 0).get(config);
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Field& f : GetRegistry().fields()) keys.push_back(f.key);
  return keys;
}

std::vector<std::string> RequiredConfigKeys() {
  std::vector<std::string> keys;
  for (const Field& f : GetRegistry().fields()) {
    if (f.required) keys.push_back(f.key);
  }
  return keys;
}

}  // namespace mergeplan
