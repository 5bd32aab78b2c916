/* Copyright 2026 The mergeplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the forced-merging planner and simulator.
 *
 * Objects are opaque handles created and released through this API. Every
 * fallible call returns an mp_status; on failure mp_last_error() returns a
 * message for the calling thread that stays valid until its next call into
 * the library. Handles may be used from any thread but not concurrently.
 */

#ifndef MERGEPLAN_MERGEPLAN_H_
#define MERGEPLAN_MERGEPLAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MP_API __declspec(dllexport)
#elif defined(__GNUC__)
#define MP_API __attribute__((visibility("default")))
#else
#define MP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mp_status {
  MP_OK = 0,
  MP_ERR_INVALID_ARGUMENT = 1,
  MP_ERR_CONFIG = 2,
  MP_ERR_IO = 3,
  MP_ERR_INVALID_STATE = 4,
  MP_ERR_BUFFER_TOO_SMALL = 5,
  MP_ERR_INTERNAL = 6
} mp_status;

typedef enum mp_planner {
  MP_PLANNER_PROPOSED = 0,
  MP_PLANNER_RMPC = 1,
  MP_PLANNER_DMPC = 2
} mp_planner;

typedef enum mp_maneuver { MP_MANEUVER_VT1 = 0, MP_MANEUVER_VT2 = 1 } mp_maneuver;

typedef enum mp_solver_status {
  MP_SOLVER_OPTIMAL = 0,
  MP_SOLVER_MAX_ITER = 1,
  MP_SOLVER_INFEASIBLE_RELAXED = 2
} mp_solver_status;

typedef enum mp_merge_class {
  MP_MERGE_AHEAD = 0,
  MP_MERGE_BETWEEN = 1,
  MP_MERGE_AFTER = 2,
  MP_MERGE_NONE = 3
} mp_merge_class;

typedef enum mp_outcome {
  MP_OUTCOME_MERGED = 0,
  MP_OUTCOME_STOPPED = 1,
  MP_OUTCOME_COLLISION = 2,
  MP_OUTCOME_STEP_LIMIT = 3
} mp_outcome;

/* Emit flags for the commands. */
#define MP_EMIT_CSV 1u
#define MP_EMIT_JSON 2u
#define MP_EMIT_SVG 4u

typedef struct mp_config mp_config;
typedef struct mp_episode mp_episode;

/* One simulation tick. Index 0 of the SV arrays is the lead vehicle SV0. */
typedef struct mp_step_record {
  int step;
  double t;
  double ev_p_x, ev_p_y, ev_phi, ev_v, ev_a;
  double u_delta, u_eta;
  mp_maneuver maneuver;
  double v_ref, p_y_ref;
  double sv_p_x[2], sv_v[2], sv_a_applied[2], sv_a_min[2], sv_a_max[2];
  double d_sv[2];
  mp_solver_status solver_status;
  int fallback;
  double solve_time_s;
  int collision;
} mp_step_record;

typedef struct mp_episode_metrics {
  int success;
  mp_outcome outcome;
  mp_merge_class merge_class;
  double min_d_sv0; /* NaN when the EV center never entered lane 2 */
  double min_d_sv1;
  double max_abs_accel;
  int steps;
  int fallback_steps;
  int solver_cascade;
} mp_episode_metrics;

typedef struct mp_mean_std {
  double mean;
  double std;
  int count;
} mp_mean_std;

typedef struct mp_batch_summary {
  int episodes;
  double success_rate;
  int merge_ahead, merge_between, merge_after, merge_none;
  int collisions;
  int solver_cascades;
  mp_mean_std min_d_sv0, min_d_sv1, max_abs_accel;
} mp_batch_summary;

/* Options shared by the commands; zero-initialize and fill what is needed. */
typedef struct mp_command_options {
  const mp_planner* planners; /* NULL or empty selects the proposed planner */
  size_t num_planners;
  int has_seed; /* otherwise the config seed is used */
  uint64_t seed;
  const char* out_dir; /* NULL writes to the current directory */
  unsigned emit;       /* MP_EMIT_* flags */
  const double* snapshot_times;
  size_t num_snapshot_times;
  int episodes; /* monte-carlo; 0 selects 50 */
  const int* sizes; /* convergence; NULL selects 4, 16, 64, 256, 1024 */
  size_t num_sizes;
  int repeats; /* convergence; 0 selects 20 */
  int threads; /* 0 selects the default worker count */
  const char* log_path; /* plot */
} mp_command_options;

MP_API const char* mp_version(void);
MP_API const char* mp_last_error(void);
MP_API const char* mp_status_name(mp_status status);

MP_API mp_status mp_planner_parse(const char* name, mp_planner* out);
MP_API const char* mp_planner_name(mp_planner planner);

/* Configs. Text output follows the snprintf convention: `needed` receives
 * the length without the terminator and MP_ERR_BUFFER_TOO_SMALL is returned
 * when it does not fit; a NULL buffer with capacity 0 only queries. */
MP_API mp_status mp_config_default(mp_config** out);
MP_API mp_status mp_config_load(const char* path, mp_config** out);
MP_API mp_status mp_config_parse(const char* text, mp_config** out);
MP_API mp_status mp_config_clone(const mp_config* config, mp_config** out);
MP_API void mp_config_free(mp_config* config);
MP_API mp_status mp_config_set(mp_config* config, const char* key, const char* value);
MP_API mp_status mp_config_get(const mp_config* config, const char* key, char* buffer,
                               size_t capacity, size_t* needed);
MP_API mp_status mp_config_serialize(const mp_config* config, char* buffer, size_t capacity,
                                     size_t* needed);
MP_API mp_status mp_config_validate(const mp_config* config);
/* 1 when both configs hold identical values, 0 otherwise. */
MP_API int mp_config_equal(const mp_config* a, const mp_config* b);

/* Episodes, advanced one tick at a time. */
MP_API mp_status mp_episode_create(const mp_config* config, mp_planner planner, uint64_t seed,
                                   mp_episode** out);
MP_API void mp_episode_free(mp_episode* episode);
MP_API int mp_episode_done(const mp_episode* episode);
MP_API mp_status mp_episode_step(mp_episode* episode, mp_step_record* out);
/* Metrics of the ticks so far; final once mp_episode_done() returns 1. */
MP_API mp_status mp_episode_get_metrics(const mp_episode* episode, mp_episode_metrics* out);
MP_API size_t mp_episode_num_records(const mp_episode* episode);
MP_API mp_status mp_episode_record(const mp_episode* episode, size_t index, mp_step_record* out);

/* Runs a whole episode in one call. */
MP_API mp_status mp_run_episode(const mp_config* config, mp_planner planner, uint64_t seed,
                                mp_episode_metrics* out);

MP_API mp_status mp_monte_carlo(const mp_config* config, mp_planner planner, int episodes,
                                uint64_t base_seed, int threads, mp_batch_summary* out);

/* Commands. On MP_OK, *exit_code is 0 on success, 2 when an episode ended in
 * a collision and 3 on a solver failure cascade. Files are written only when
 * the whole command succeeds. */
MP_API mp_status mp_cmd_run(const mp_config* config, const mp_command_options* options,
                            int* exit_code);
MP_API mp_status mp_cmd_monte_carlo(const mp_config* config, const mp_command_options* options,
                                    int* exit_code);
MP_API mp_status mp_cmd_convergence(const mp_config* config, const mp_command_options* options,
                                    int* exit_code);
MP_API mp_status mp_cmd_plot(const mp_config* config, const mp_command_options* options,
                             int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* MERGEPLAN_MERGEPLAN_H_ */
