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

#include "mergeplan/mergeplan.h"

#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "mergeplan/commands.hpp"
#include "mergeplan/config.hpp"
#include "mergeplan/error.hpp"
#include "mergeplan/sim.hpp"

struct mp_config {
  mergeplan::ScenarioConfig config;
};

struct mp_episode {
  mergeplan::ScenarioConfig config;
  mergeplan::Episode episode;
};

namespace {

using namespace mergeplan;

thread_local std::string g_last_error;

mp_status Fail(mp_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
mp_status Guard(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const ConfigError& e) {
    return Fail(MP_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return Fail(MP_ERR_IO, e.what());
  } catch (const InvalidArgument& e) {
    return Fail(MP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const InvalidState& e) {
    return Fail(MP_ERR_INVALID_STATE, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(MP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(MP_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(MP_ERR_INTERNAL, "unknown error");
  }
}

std::optional<PlannerKind> ToKind(mp_planner p) {
  switch (p) {
    case MP_PLANNER_PROPOSED: return PlannerKind::kProposed;
    case MP_PLANNER_RMPC: return PlannerKind::kRmpc;
    case MP_PLANNER_DMPC: return PlannerKind::kDmpc;
  }
  return std::nullopt;
}

PlannerKind RequireKind(mp_planner p) {
  const auto k = ToKind(p);
  if (!k) throw InvalidArgument("unknown planner " + std::to_string(static_cast<int>(p)));
  return *k;
}

mp_status CopyOut(const std::string& s, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = s.size();
  if (buffer == nullptr && capacity == 0) return MP_OK;
  if (buffer == nullptr || capacity < s.size() + 1) {
    return Fail(MP_ERR_BUFFER_TOO_SMALL,
                "buffer of " + std::to_string(capacity) + " bytes cannot hold " +
                    std::to_string(s.size() + 1));
  }
  std::memcpy(buffer, s.c_str(), s.size() + 1);
  return MP_OK;
}

mp_step_record ToRecord(const StepRecord& r) {
  mp_step_record o{};
  o.step = r.step;
  o.t = r.t;
  o.ev_p_x = r.ev.p_x;
  o.ev_p_y = r.ev.p_y;
  o.ev_phi = r.ev.phi;
  o.ev_v = r.ev.v;
  o.ev_a = r.ev.a;
  o.u_delta = r.control.delta;
  o.u_eta = r.control.eta;
  o.maneuver = r.reference.maneuver == Maneuver::kVT1 ? MP_MANEUVER_VT1 : MP_MANEUVER_VT2;
  o.v_ref = r.reference.v_x_ref;
  o.p_y_ref = r.reference.p_y_ref;
  for (std::size_t s = 0; s < r.svs.size() && s < 2; ++s) {
    o.sv_p_x[s] = r.svs[s].state.p_x;
    o.sv_v[s] = r.svs[s].state.v_x;
    o.sv_a_applied[s] = r.svs[s].a_applied;
    o.sv_a_min[s] = r.svs[s].bounds.a_min;
    o.sv_a_max[s] = r.svs[s].bounds.a_max;
    o.d_sv[s] = r.svs[s].distance;
  }
  o.solver_status = static_cast<mp_solver_status>(static_cast<int>(r.status));
  o.fallback = r.fallback ? 1 : 0;
  o.solve_time_s = r.solve_time;
  o.collision = r.collision ? 1 : 0;
  return o;
}

mp_episode_metrics ToMetrics(const EpisodeMetrics& m) {
  mp_episode_metrics o{};
  o.success = m.success ? 1 : 0;
  o.outcome = static_cast<mp_outcome>(static_cast<int>(m.outcome));
  o.merge_class = static_cast<mp_merge_class>(static_cast<int>(m.merge_class));
  o.min_d_sv0 = m.min_d_sv0;
  o.min_d_sv1 = m.min_d_sv1;
  o.max_abs_accel = m.max_abs_accel;
  o.steps = m.steps;
  o.fallback_steps = m.fallback_steps;
  o.solver_cascade = m.solver_cascade ? 1 : 0;
  return o;
}

mp_mean_std ToMeanStd(const MeanStd& m) { return {m.mean, m.std, m.count}; }

mp_batch_summary ToSummary(const BatchSummary& s) {
  mp_batch_summary o{};
  o.episodes = s.episodes;
  o.success_rate = s.success_rate;
  o.merge_ahead = s.merge_ahead;
  o.merge_between = s.merge_between;
  o.merge_after = s.merge_after;
  o.merge_none = s.merge_none;
  o.collisions = s.collisions;
  o.solver_cascades = s.solver_cascades;
  o.min_d_sv0 = ToMeanStd(s.min_d_sv0);
  o.min_d_sv1 = ToMeanStd(s.min_d_sv1);
  o.max_abs_accel = ToMeanStd(s.max_abs_accel);
  return o;
}

CommandOptions ToOptions(const mp_command_options* o) {
  CommandOptions out;
  if (o == nullptr) return out;
  if (o->num_planners > 0) {
    if (o->planners == nullptr) throw InvalidArgument("planners is NULL");
    out.planners.clear();
    for (size_t i = 0; i < o->num_planners; ++i) out.planners.push_back(RequireKind(o->planners[i]));
  }
  if (o->has_seed) out.seed = o->seed;
  if (o->out_dir) out.out_dir = o->out_dir;
  out.emit_csv = (o->emit & MP_EMIT_CSV) != 0;
  out.emit_json = (o->emit & MP_EMIT_JSON) != 0;
  out.emit_svg = (o->emit & MP_EMIT_SVG) != 0;
  if (o->num_snapshot_times > 0) {
    if (o->snapshot_times == nullptr) throw InvalidArgument("snapshot_times is NULL");
    out.snapshot_times.assign(o->snapshot_times, o->snapshot_times + o->num_snapshot_times);
  }
  if (o->episodes != 0) out.episodes = o->episodes;
  if (o->num_sizes > 0) {
    if (o->sizes == nullptr) throw InvalidArgument("sizes is NULL");
    out.sizes.assign(o->sizes, o->sizes + o->num_sizes);
  }
  if (o->repeats != 0) out.repeats = o->repeats;
  out.threads = o->threads;
  if (o->log_path) out.log_path = o->log_path;
  return out;
}

template <typename Cmd>
mp_status RunCommand(Cmd cmd, const mp_config* config, const mp_command_options* options,
                     int* exit_code) {
  return Guard([&] {
    if (config == nullptr || exit_code == nullptr) {
      return Fail(MP_ERR_INVALID_ARGUMENT, "config and exit_code must not be NULL");
    }
    const CommandOptions o = ToOptions(options);
    const CommandResult r = cmd(config->config, o);
    WriteArtifacts(o.out_dir, r.artifacts);
    *exit_code = r.exit_code;
    return MP_OK;
  });
}

}  // namespace

extern "C" {

const char* mp_version(void) { return "1.0.0"; }

const char* mp_last_error(void) { return g_last_error.c_str(); }

const char* mp_status_name(mp_status status) {
  switch (status) {
    case MP_OK: return "ok";
    case MP_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MP_ERR_CONFIG: return "config";
    case MP_ERR_IO: return "io";
    case MP_ERR_INVALID_STATE: return "invalid_state";
    case MP_ERR_BUFFER_TOO_SMALL: return "buffer_too_small";
    case MP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

mp_status mp_planner_parse(const char* name, mp_planner* out) {
  return Guard([&] {
    if (name == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    const auto k = ParsePlannerKind(name);
    if (!k) {
      return Fail(MP_ERR_INVALID_ARGUMENT,
                  "unknown planner '" + std::string(name) + "' (expected proposed, rmpc or dmpc)");
    }
    *out = static_cast<mp_planner>(static_cast<int>(*k));
    return MP_OK;
  });
}

const char* mp_planner_name(mp_planner planner) {
  const auto k = ToKind(planner);
  return k ? PlannerKindName(*k).data() : "unknown";
}

mp_status mp_config_default(mp_config** out) {
  return Guard([&] {
    if (out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "out is NULL");
    *out = new mp_config{};
    return MP_OK;
  });
}

mp_status mp_config_load(const char* path, mp_config** out) {
  return Guard([&] {
    if (path == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    *out = nullptr;
    auto c = std::make_unique<mp_config>(mp_config{LoadConfig(path)});
    *out = c.release();
    return MP_OK;
  });
}

mp_status mp_config_parse(const char* text, mp_config** out) {
  return Guard([&] {
    if (text == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    *out = nullptr;
    auto c = std::make_unique<mp_config>(mp_config{ParseConfig(text)});
    *out = c.release();
    return MP_OK;
  });
}

mp_status mp_config_clone(const mp_config* config, mp_config** out) {
  return Guard([&] {
    if (config == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    *out = new mp_config(*config);
    return MP_OK;
  });
}

void mp_config_free(mp_config* config) { delete config; }

mp_status mp_config_set(mp_config* config, const char* key, const char* value) {
  return Guard([&] {
    if (config == nullptr || key == nullptr || value == nullptr) {
      return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    }
    SetConfigValue(config->config, key, value);
    return MP_OK;
  });
}

mp_status mp_config_get(const mp_config* config, const char* key, char* buffer, size_t capacity,
                        size_t* needed) {
  return Guard([&] {
    if (config == nullptr || key == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    return CopyOut(GetConfigValue(config->config, key), buffer, capacity, needed);
  });
}

mp_status mp_config_serialize(const mp_config* config, char* buffer, size_t capacity,
                              size_t* needed) {
  return Guard([&] {
    if (config == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "config is NULL");
    return CopyOut(SerializeConfig(config->config), buffer, capacity, needed);
  });
}

mp_status mp_config_validate(const mp_config* config) {
  return Guard([&] {
    if (config == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "config is NULL");
    try {
      config->config.Validate();
    } catch (const InvalidArgument& e) {
      return Fail(MP_ERR_CONFIG, e.what());
    }
    return MP_OK;
  });
}

int mp_config_equal(const mp_config* a, const mp_config* b) {
  if (a == nullptr || b == nullptr) return 0;
  return a->config == b->config ? 1 : 0;
}

mp_status mp_episode_create(const mp_config* config, mp_planner planner, uint64_t seed,
                            mp_episode** out) {
  return Guard([&] {
    if (config == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    *out = nullptr;
    const PlannerKind kind = RequireKind(planner);
    *out = new mp_episode{config->config, Episode(config->config, kind, seed)};
    return MP_OK;
  });
}

void mp_episode_free(mp_episode* episode) { delete episode; }

int mp_episode_done(const mp_episode* episode) {
  return episode != nullptr && episode->episode.done() ? 1 : 0;
}

mp_status mp_episode_step(mp_episode* episode, mp_step_record* out) {
  return Guard([&] {
    if (episode == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "episode is NULL");
    if (episode->episode.done()) {
      return Fail(MP_ERR_INVALID_STATE, "episode already terminated");
    }
    const StepRecord& r = episode->episode.Step();
    if (out) *out = ToRecord(r);
    return MP_OK;
  });
}

mp_status mp_episode_get_metrics(const mp_episode* episode, mp_episode_metrics* out) {
  return Guard([&] {
    if (episode == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    EpisodeMetrics m =
        ComputeMetrics(episode->episode.log(), episode->episode.outcome(), episode->config);
    if (!episode->episode.done()) m.success = false;
    m.solver_cascade = episode->episode.solver_cascade();
    *out = ToMetrics(m);
    return MP_OK;
  });
}

size_t mp_episode_num_records(const mp_episode* episode) {
  return episode == nullptr ? 0 : episode->episode.log().records.size();
}

mp_status mp_episode_record(const mp_episode* episode, size_t index, mp_step_record* out) {
  return Guard([&] {
    if (episode == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    const auto& records = episode->episode.log().records;
    if (index >= records.size()) {
      return Fail(MP_ERR_INVALID_ARGUMENT, "record index " + std::to_string(index) +
                                               " out of range [0, " +
                                               std::to_string(records.size()) + ")");
    }
    *out = ToRecord(records[index]);
    return MP_OK;
  });
}

mp_status mp_run_episode(const mp_config* config, mp_planner planner, uint64_t seed,
                         mp_episode_metrics* out) {
  return Guard([&] {
    if (config == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    *out = ToMetrics(RunEpisode(config->config, RequireKind(planner), seed).metrics);
    return MP_OK;
  });
}

mp_status mp_monte_carlo(const mp_config* config, mp_planner planner, int episodes,
                         uint64_t base_seed, int threads, mp_batch_summary* out) {
  return Guard([&] {
    if (config == nullptr || out == nullptr) return Fail(MP_ERR_INVALID_ARGUMENT, "NULL argument");
    *out = ToSummary(
        RunMonteCarlo(config->config, RequireKind(planner), episodes, base_seed, threads).summary);
    return MP_OK;
  });
}

mp_status mp_cmd_run(const mp_config* config, const mp_command_options* options, int* exit_code) {
  return RunCommand(CmdRun, config, options, exit_code);
}

mp_status mp_cmd_monte_carlo(const mp_config* config, const mp_command_options* options,
                             int* exit_code) {
  return RunCommand(CmdMonteCarlo, config, options, exit_code);
}

mp_status mp_cmd_convergence(const mp_config* config, const mp_command_options* options,
                             int* exit_code) {
  return RunCommand(CmdConvergence, config, options, exit_code);
}

mp_status mp_cmd_plot(const mp_config* config, const mp_command_options* options,
                      int* exit_code) {
  return RunCommand(CmdPlot, config, options, exit_code);
}

}  // extern "C"
