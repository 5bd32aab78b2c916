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

///////////////////////////////////////////////////////////////////////////////
//
// Closed-loop forced-merging simulator.
//
// One tick observes the SVs' previous accelerations, predicts occupancies
// under the planner's input set, decides a maneuver, solves the MPC and
// advances every vehicle. Episodes are deterministic functions of
// (config, planner kind, seed); Monte-Carlo batches fan episodes out over
// worker threads and aggregate in episode order.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "mergeplan/decision.hpp"
#include "mergeplan/estimator.hpp"
#include "mergeplan/models.hpp"
#include "mergeplan/planner.hpp"

namespace mergeplan {

// Gaussian restricted to [lower, upper] by rejection.
struct TruncatedGaussian {
  double mean = 0.0;
  double std = 0.0;
  double lower = -6.958;
  double upper = 6.958;

  void Validate(std::string_view what, double limit) const;
  bool operator==(const TruncatedGaussian&) const = default;
};

double SampleTruncatedGaussian(const TruncatedGaussian& d, std::mt19937_64& rng);

enum class BehaviorKind { kNominal, kSuddenAccelNearTerminal };
std::string_view BehaviorKindName(BehaviorKind k);
std::optional<BehaviorKind> ParseBehaviorKind(std::string_view name);

struct BehaviorProfile {
  BehaviorKind kind = BehaviorKind::kNominal;
  TruncatedGaussian nominal{0.0, 0.3};
  TruncatedGaussian burst{2.0, 0.3};
  // The burst fires while the EV straddles the lane divider, is within
  // trigger_window of this SV and within terminal_range of p_x_ter.
  double trigger_window = 30.0;
  double terminal_range = 250.0;

  void Validate(std::string_view what, double accel_limit) const;
  bool operator==(const BehaviorProfile&) const = default;
};

struct SvConfig {
  double p_x = 0.0;
  double v = 30.0;
  double lane_center = 6.0;
  BehaviorProfile profile;

  bool operator==(const SvConfig&) const = default;
};

struct ScenarioConfig {
  EvState ev{822.5, 2.0, 0.0, 30.0, 0.0};
  // SV0 is the lead vehicle in lane 2, SV1 follows it.
  SvConfig sv0{812.5, 30.0, 6.0, {}};
  SvConfig sv1{772.5, 30.0, 6.0, {}};

  double w_lane = 4.0;
  double p_x_ter = 1000.0;
  VehicleGeometry geometry;

  double T = 0.25;
  double mu = 0.71;
  double g = 9.8;
  double v_adm = 50.0;
  Eigen::Vector3d k_lon = Eigen::Vector3d(0.0, 0.3847, 0.8663);
  Eigen::Vector3d k_lat = Eigen::Vector3d(0.5681, 1.4003, 1.7260);

  int N = 20;
  double d_min_decision = 0.5;
  double W_x = 0.1;
  double W_y = 0.1;
  double W_v = 0.7;
  double W_l = 0.1;

  int n_p = 10;
  double d_min = 0.1;
  double q1 = 100.0;
  double q2 = 0.001;
  Eigen::Vector2d q3 = Eigen::Vector2d(1.0, 1.0);
  Eigen::Vector3d u_lower = Eigen::Vector3d(0.0, -5.0, -0.1);
  Eigen::Vector3d u_upper = Eigen::Vector3d(50.0, 2.5, 0.1);
  SqpSettings sqp;

  // 0 seeds every information set with {0}; k > 0 draws k samples from each
  // SV's nominal distribution.
  int initial_samples = 0;

  int max_steps = 400;
  int settle_steps = 20;
  int stop_steps = 8;
  double stop_speed = 0.1;
  // Consecutive fallback ticks that count as a solver failure cascade.
  int cascade_steps = 10;
  std::uint64_t seed = 1;

  // Wall-clock planning times are nondeterministic and stay 0 unless enabled.
  bool record_timing = false;

  // Throws InvalidArgument naming the offending field.
  void Validate() const;

  double accel_limit() const { return mu * g; }
  FeedbackGains Gains() const;
  DecisionParams MakeDecisionParams() const;
  PlannerParams MakePlannerParams() const;

  bool operator==(const ScenarioConfig&) const = default;
};

// Effective acceleration after clipping the next speed to [0, v_adm]; it lies
// between 0 and the requested value.
double ClipSvAcceleration(const SvState& sv, double a, double v_adm, double T);

// Whether the sudden-acceleration burst of `profile` is active.
bool BurstActive(const BehaviorProfile& profile, const SvState& sv, const EvState& ev,
                 const ScenarioConfig& config);

// Draws both the nominal and burst samples every call so the random stream
// does not depend on the trigger, and returns the active one.
double SampleSvAccel(const BehaviorProfile& profile, const SvState& sv, const EvState& ev,
                     const ScenarioConfig& config, std::mt19937_64& rng);

// Axis-aligned footprint overlap with any SV or lateral exit from the road.
// At episode end, a moving EV whose footprint reaches past p_x_ter while
// still in lane 1 also counts.
bool CheckCollision(const EvState& ev, const std::vector<SvState>& svs,
                    const std::vector<double>& lane_centers, const ScenarioConfig& config,
                    bool episode_end = false);

// Footprint distance between the EV and an SV centered at (sv.p_x, lane_center).
double FootprintDistance(const EvState& ev, const SvState& sv, double lane_center,
                         const VehicleGeometry& geom);

struct SvRecord {
  SvState state;
  double a_applied = 0.0;
  AccelBounds bounds;
  double distance = 0.0;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  EvState ev;
  EvControl control;
  Reference reference;
  std::vector<SvRecord> svs;
  SolverStatus status = SolverStatus::kOptimal;
  bool fallback = false;
  double solve_time = 0.0;
  bool collision = false;
};

struct EpisodeLog {
  double T = 0.25;
  std::vector<StepRecord> records;
};

enum class MergeClass { kAhead, kBetween, kAfter, kNoMerge };
std::string_view MergeClassName(MergeClass c);

enum class EpisodeOutcome { kMerged, kStopped, kCollision, kStepLimit };
std::string_view EpisodeOutcomeName(EpisodeOutcome o);

struct EpisodeMetrics {
  bool success = false;
  EpisodeOutcome outcome = EpisodeOutcome::kStepLimit;
  MergeClass merge_class = MergeClass::kNoMerge;
  // NaN when the EV never had its center in lane 2.
  double min_d_sv0 = 0.0;
  double min_d_sv1 = 0.0;
  double max_abs_accel = 0.0;
  int steps = 0;
  int fallback_steps = 0;
  bool solver_cascade = false;
};

MergeClass ClassifyMerge(const EpisodeLog& log, const ScenarioConfig& config);

struct EpisodeResult {
  EpisodeLog log;
  EpisodeMetrics metrics;
};

// One closed-loop episode, advanced tick by tick.
class Episode {
 public:
  Episode(const ScenarioConfig& config, PlannerKind kind, std::uint64_t seed);

  bool done() const { return done_; }
  // Runs one tick and returns its record. Throws InvalidArgument when done.
  const StepRecord& Step();
  const EpisodeLog& log() const { return log_; }
  EpisodeOutcome outcome() const { return outcome_; }
  bool solver_cascade() const { return cascade_; }
  EpisodeResult Finish() &&;

 private:
  ScenarioConfig config_;
  PlannerKind kind_;
  DecisionParams decision_;
  MpcPlanner planner_;
  AccelBounds worst_case_;
  std::vector<double> lane_centers_;
  std::vector<BoundsEstimator> estimators_;
  std::vector<std::mt19937_64> rngs_;

  EvState ev_;
  std::vector<SvState> svs_;
  std::vector<double> last_applied_;
  EpisodeLog log_;
  bool done_ = false;
  EpisodeOutcome outcome_ = EpisodeOutcome::kStepLimit;
  int merge_step_ = -1;
  int stopped_run_ = 0;
  int fallback_run_ = 0;
  bool cascade_ = false;
};

// Initial information set for one SV (index 0 or 1) and seed.
InformationSet InitialInformation(const ScenarioConfig& config, int sv_index,
                                  std::uint64_t seed);

EpisodeMetrics ComputeMetrics(const EpisodeLog& log, EpisodeOutcome outcome,
                              const ScenarioConfig& config);

EpisodeResult RunEpisode(const ScenarioConfig& config, PlannerKind kind, std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  int count = 0;     // finite samples used
};

// NaN mean and std when no finite values are present.
MeanStd ComputeMeanStd(const std::vector<double>& values);

struct BatchSummary {
  int episodes = 0;
  double success_rate = 0.0;
  int merge_ahead = 0;
  int merge_between = 0;
  int merge_after = 0;
  int merge_none = 0;
  int collisions = 0;
  int solver_cascades = 0;
  // Over every episode with a finite value.
  MeanStd min_d_sv0;
  MeanStd min_d_sv1;
  MeanStd max_abs_accel;
};

BatchSummary Summarize(const std::vector<EpisodeMetrics>& episodes);

struct BatchResult {
  BatchSummary summary;
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeMetrics> episodes;
};

// Worker count: MERGE_PLANNER_THREADS when set to a positive integer, capped
// by the hardware concurrency and the number of jobs.
int BatchThreads(int jobs);

// Runs `episodes` episodes with seeds base_seed, base_seed + 1, ....
// threads <= 0 selects BatchThreads.
BatchResult RunMonteCarlo(const ScenarioConfig& config, PlannerKind kind, int episodes,
                          std::uint64_t base_seed, int threads = 0);

struct ConvergenceRow {
  int size = 0;
  BatchSummary summary;
};

// For every information-set size, `repeats` Proposed episodes with shared
// seeds base_seed, base_seed + 1, ....
std::vector<ConvergenceRow> ConvergenceStudy(const ScenarioConfig& config,
                                             const std::vector<int>& sizes, int repeats,
                                             std::uint64_t base_seed, int threads = 0);

}  // namespace mergeplan
