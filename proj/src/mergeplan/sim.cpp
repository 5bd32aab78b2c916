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

#include "mergeplan/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "mergeplan/error.hpp"

namespace mergeplan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent streams per (seed, SV, purpose).
enum class Stream : std::uint32_t { kBehavior = 0, kInformation = 1 };

std::mt19937_64 MakeRng(std::uint64_t seed, int sv_index, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(sv_index),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("scenario config: " + what);
}

bool PositiveFinite(double v) { return std::isfinite(v) && v > 0.0; }

Polytope2 Footprint(double x, double y, const VehicleGeometry& g) {
  return Polytope2::FromBox(Vec2(x, y), Vec2(0.5 * g.l_veh, 0.5 * g.w_veh));
}

bool FullyInLane2(const EvState& ev, const ScenarioConfig& c) {
  return ev.p_y - 0.5 * c.geometry.w_veh >= c.w_lane;
}

}  // namespace

void TruncatedGaussian::Validate(std::string_view what, double limit) const {
  const std::string w(what);
  Require(std::isfinite(mean) && std::isfinite(std) && std >= 0.0, w + ": std must be >= 0");
  Require(lower <= upper, w + ": empty support");
  Require(lower >= -limit - 1e-12 && upper <= limit + 1e-12,
          w + ": support must lie within the worst-case input set");
  Require(mean >= lower && mean <= upper, w + ": mean must lie in the support");
}

double SampleTruncatedGaussian(const TruncatedGaussian& d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(d.mean, d.std);
  if (d.std == 0.0) {
    (void)n(rng);
    return d.mean;
  }
  // The mean lies in the support, so acceptance is at least 1/2 per side.
  for (;;) {
    const double a = n(rng);
    if (a >= d.lower && a <= d.upper) return a;
  }
}

std::string_view BehaviorKindName(BehaviorKind k) {
  switch (k) {
    case BehaviorKind::kNominal: return "nominal";
    case BehaviorKind::kSuddenAccelNearTerminal: return "sudden_accel_near_terminal";
  }
  return "?";
}

std::optional<BehaviorKind> ParseBehaviorKind(std::string_view name) {
  if (name == "nominal") return BehaviorKind::kNominal;
  if (name == "sudden_accel_near_terminal") return BehaviorKind::kSuddenAccelNearTerminal;
  return std::nullopt;
}

void BehaviorProfile::Validate(std::string_view what, double accel_limit) const {
  const std::string w(what);
  nominal.Validate(w + ".nominal", accel_limit);
  burst.Validate(w + ".burst", accel_limit);
  Require(trigger_window >= 0.0 && std::isfinite(trigger_window), w + ".trigger_window must be >= 0");
  Require(terminal_range >= 0.0 && std::isfinite(terminal_range), w + ".terminal_range must be >= 0");
}

void ScenarioConfig::Validate() const {
  Require(ev.AsVector().allFinite(), "ev state must be finite");
  Require(std::isfinite(sv0.p_x) && std::isfinite(sv1.p_x), "sv positions must be finite");
  Require(sv1.p_x <= sv0.p_x, "sv1 must start behind sv0");
  Require(PositiveFinite(w_lane), "w_lane must be > 0");
  Require(PositiveFinite(p_x_ter), "p_x_ter must be > 0");
  geometry.Validate();
  Require(PositiveFinite(T), "T must be > 0");
  Require(PositiveFinite(mu) && PositiveFinite(g), "mu and g must be > 0");
  Require(PositiveFinite(v_adm), "v_adm must be > 0");
  Require(sv0.v >= 0.0 && sv0.v <= v_adm && sv1.v >= 0.0 && sv1.v <= v_adm,
          "sv speeds must lie in [0, v_adm]");
  Require(N >= 1, "N must be >= 1");
  Require(n_p >= 1 && n_p <= N, "n_p must lie in [1, N]");
  Require(d_min_decision >= 0.0 && d_min >= 0.0, "d_min must be >= 0");
  Require(W_x >= 0 && W_y >= 0 && W_v >= 0 && W_l >= 0, "maneuver weights must be >= 0");
  sv0.profile.Validate("sv0.profile", accel_limit());
  sv1.profile.Validate("sv1.profile", accel_limit());
  Require(initial_samples >= 0, "initial_samples must be >= 0");
  Require(max_steps >= 1, "max_steps must be >= 1");
  Require(settle_steps >= 0 && stop_steps >= 1 && cascade_steps >= 1,
          "episode step counts must be positive");
  Require(stop_speed >= 0.0, "stop_speed must be >= 0");
  MakeDecisionParams().Validate();
  MakePlannerParams().Validate();
}

FeedbackGains ScenarioConfig::Gains() const { return FeedbackGains(k_lon, k_lat, T); }

DecisionParams ScenarioConfig::MakeDecisionParams() const {
  DecisionParams p;
  p.d_min_qp = d_min_decision + geometry.l_veh;
  p.W_x = W_x;
  p.W_y = W_y;
  p.W_v = W_v;
  p.W_l = W_l;
  p.gains = Gains();
  p.N = N;
  p.w_lane = w_lane;
  p.p_x_ter = p_x_ter;
  p.v_adm = v_adm;
  return p;
}

PlannerParams ScenarioConfig::MakePlannerParams() const {
  PlannerParams p;
  p.n_p = n_p;
  p.T = T;
  p.q1 = q1;
  p.q2 = q2;
  p.q3 = q3;
  p.u_lower = u_lower;
  p.u_upper = u_upper;
  p.d_min = d_min;
  p.w_lane = w_lane;
  p.p_x_ter = p_x_ter;
  p.geometry = geometry;
  p.sqp = sqp;
  return p;
}

double ClipSvAcceleration(const SvState& sv, double a, double v_adm, double T) {
  const double v_next = sv.v_x + a * T;
  if (v_next < 0.0) return -sv.v_x / T;
  if (v_next > v_adm) return (v_adm - sv.v_x) / T;
  return a;
}

bool BurstActive(const BehaviorProfile& profile, const SvState& sv, const EvState& ev,
                 const ScenarioConfig& config) {
  if (profile.kind != BehaviorKind::kSuddenAccelNearTerminal) return false;
  const double half_w = 0.5 * config.geometry.w_veh;
  const bool straddling =
      ev.p_y - half_w < config.w_lane && ev.p_y + half_w > config.w_lane;
  return straddling && std::abs(ev.p_x - sv.p_x) < profile.trigger_window &&
         std::abs(config.p_x_ter - ev.p_x) <= profile.terminal_range;
}

double SampleSvAccel(const BehaviorProfile& profile, const SvState& sv, const EvState& ev,
                     const ScenarioConfig& config, std::mt19937_64& rng) {
  const double nominal = SampleTruncatedGaussian(profile.nominal, rng);
  const double burst = SampleTruncatedGaussian(profile.burst, rng);
  return BurstActive(profile, sv, ev, config) ? burst : nominal;
}

bool CheckCollision(const EvState& ev, const std::vector<SvState>& svs,
                    const std::vector<double>& lane_centers, const ScenarioConfig& config,
                    bool episode_end) {
  if (lane_centers.size() != svs.size()) {
    throw InvalidArgument("check_collision: one lane center per SV required");
  }
  const VehicleGeometry& g = config.geometry;
  for (std::size_t s = 0; s < svs.size(); ++s) {
    if (std::abs(ev.p_x - svs[s].p_x) < g.l_veh && std::abs(ev.p_y - lane_centers[s]) < g.w_veh) {
      return true;
    }
  }
  const double half_w = 0.5 * g.w_veh;
  if (ev.p_y - half_w < 0.0 || ev.p_y + half_w > 2.0 * config.w_lane) return true;
  if (!episode_end) return false;
  const bool in_lane1 = ev.p_y - half_w < config.w_lane;
  return in_lane1 && ev.p_x + 0.5 * g.l_veh > config.p_x_ter && ev.v > 0.0;
}

double FootprintDistance(const EvState& ev, const SvState& sv, double lane_center,
                         const VehicleGeometry& geom) {
  return DistancePolytopes(Footprint(ev.p_x, ev.p_y, geom), Footprint(sv.p_x, lane_center, geom));
}

std::string_view MergeClassName(MergeClass c) {
  switch (c) {
    case MergeClass::kAhead: return "ahead";
    case MergeClass::kBetween: return "between";
    case MergeClass::kAfter: return "after";
    case MergeClass::kNoMerge: return "no_merge";
  }
  return "?";
}

std::string_view EpisodeOutcomeName(EpisodeOutcome o) {
  switch (o) {
    case EpisodeOutcome::kMerged: return "merged";
    case EpisodeOutcome::kStopped: return "stopped";
    case EpisodeOutcome::kCollision: return "collision";
    case EpisodeOutcome::kStepLimit: return "step_limit";
  }
  return "?";
}

MergeClass ClassifyMerge(const EpisodeLog& log, const ScenarioConfig& config) {
  for (const StepRecord& r : log.records) {
    if (!FullyInLane2(r.ev, config)) continue;
    if (r.svs.size() < 2) throw InvalidArgument("classify_merge: two SVs required");
    if (r.ev.p_x > r.svs[0].state.p_x) return MergeClass::kAhead;
    if (r.ev.p_x > r.svs[1].state.p_x) return MergeClass::kBetween;
    return MergeClass::kAfter;
  }
  return MergeClass::kNoMerge;
}

InformationSet InitialInformation(const ScenarioConfig& config, int sv_index,
                                  std::uint64_t seed) {
  if (config.initial_samples == 0) return InformationSet({0.0});
  const BehaviorProfile& p = sv_index == 0 ? config.sv0.profile : config.sv1.profile;
  std::mt19937_64 rng = MakeRng(seed, sv_index, Stream::kInformation);
  std::vector<double> samples(static_cast<std::size_t>(config.initial_samples));
  for (double& a : samples) a = SampleTruncatedGaussian(p.nominal, rng);
  return InformationSet(std::move(samples));
}

Episode::Episode(const ScenarioConfig& config, PlannerKind kind, std::uint64_t seed)
    : config_(config),
      kind_(kind),
      decision_((config.Validate(), config.MakeDecisionParams())),
      planner_(config.MakePlannerParams()),
      worst_case_(WorstCaseBounds(config.mu, config.g)),
      lane_centers_{config.sv0.lane_center, config.sv1.lane_center},
      ev_(config.ev),
      svs_{{config.sv0.p_x, config.sv0.v}, {config.sv1.p_x, config.sv1.v}},
      last_applied_(2, 0.0) {
  log_.T = config.T;
  for (int s = 0; s < 2; ++s) {
    estimators_.emplace_back(InitialInformation(config_, s, seed));
    rngs_.push_back(MakeRng(seed, s, Stream::kBehavior));
  }
}

const StepRecord& Episode::Step() {
  if (done_) throw InvalidArgument("step_episode: episode already terminated");
  using Clock = std::chrono::steady_clock;
  const int k = static_cast<int>(log_.records.size());
  const auto start = Clock::now();

  if (k > 0) {
    for (std::size_t s = 0; s < svs_.size(); ++s) estimators_[s].Observe(last_applied_[s]);
  }
  std::vector<AccelBounds> bounds;
  for (const BoundsEstimator& e : estimators_) bounds.push_back(e.bounds());
  const std::vector<OccupancyPrediction> occ =
      OccupancyForPlanner(kind_, svs_, bounds, worst_case_, config_.N, config_.v_adm, config_.T,
                          config_.geometry, lane_centers_);
  const Decision decision = Decide(ev_, svs_[0], svs_[1], occ[0].steps, occ[1].steps, decision_);

  ObstacleSet obstacles(occ.size());
  for (std::size_t s = 0; s < occ.size(); ++s) {
    obstacles[s].reserve(static_cast<std::size_t>(config_.n_p));
    for (int i = 0; i < config_.n_p; ++i) {
      obstacles[s].push_back(InflateObstacle(occ[s].steps[i], config_.geometry));
    }
  }
  const MpcSolution sol = planner_.Plan(ev_, decision.reference, obstacles);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  StepRecord rec;
  rec.step = k;
  rec.t = k * config_.T;
  rec.ev = ev_;
  rec.reference = decision.reference;
  rec.status = sol.status;
  rec.fallback = sol.status == SolverStatus::kInfeasibleRelaxed;
  rec.control = rec.fallback ? FallbackControl(ev_, planner_.params()) : sol.controls.front();
  if (rec.fallback) planner_.Reset();
  rec.solve_time = config_.record_timing ? elapsed : 0.0;
  rec.collision = CheckCollision(ev_, svs_, lane_centers_, config_);
  for (std::size_t s = 0; s < svs_.size(); ++s) {
    const BehaviorProfile& profile = s == 0 ? config_.sv0.profile : config_.sv1.profile;
    const double a = SampleSvAccel(profile, svs_[s], ev_, config_, rngs_[s]);
    last_applied_[s] = ClipSvAcceleration(svs_[s], a, config_.v_adm, config_.T);
    rec.svs.push_back({svs_[s], last_applied_[s], bounds[s],
                       FootprintDistance(ev_, svs_[s], lane_centers_[s], config_.geometry)});
  }
  log_.records.push_back(std::move(rec));
  const StepRecord& r = log_.records.back();

  fallback_run_ = r.fallback ? fallback_run_ + 1 : 0;
  if (fallback_run_ >= config_.cascade_steps) cascade_ = true;
  if (merge_step_ < 0 && FullyInLane2(ev_, config_)) merge_step_ = k;
  const bool in_lane1 = ev_.p_y - 0.5 * config_.geometry.w_veh < config_.w_lane;
  stopped_run_ = (in_lane1 && ev_.v <= config_.stop_speed) ? stopped_run_ + 1 : 0;

  if (r.collision) {
    done_ = true;
    outcome_ = EpisodeOutcome::kCollision;
  } else if (merge_step_ >= 0 && k - merge_step_ >= config_.settle_steps) {
    done_ = true;
    outcome_ = EpisodeOutcome::kMerged;
  } else if (stopped_run_ >= config_.stop_steps) {
    done_ = true;
    outcome_ = EpisodeOutcome::kStopped;
  } else if (k + 1 >= config_.max_steps) {
    done_ = true;
    outcome_ = EpisodeOutcome::kStepLimit;
  }
  if (done_ && !r.collision && CheckCollision(ev_, svs_, lane_centers_, config_, true)) {
    log_.records.back().collision = true;
    outcome_ = EpisodeOutcome::kCollision;
  }
  if (done_) return r;

  ev_ = EvStepRk4(ev_, r.control, config_.geometry, config_.T);
  for (std::size_t s = 0; s < svs_.size(); ++s) {
    svs_[s] = SvStep(svs_[s], last_applied_[s], config_.T);
    svs_[s].v_x = std::clamp(svs_[s].v_x, 0.0, config_.v_adm);
  }
  return r;
}

EpisodeResult Episode::Finish() && {
  EpisodeResult res;
  res.metrics = ComputeMetrics(log_, outcome_, config_);
  res.metrics.solver_cascade = cascade_;
  res.log = std::move(log_);
  return res;
}

EpisodeMetrics ComputeMetrics(const EpisodeLog& log, EpisodeOutcome outcome,
                              const ScenarioConfig& config) {
  EpisodeMetrics m;
  m.outcome = outcome;
  m.steps = static_cast<int>(log.records.size());
  m.merge_class = ClassifyMerge(log, config);
  m.min_d_sv0 = kNaN;
  m.min_d_sv1 = kNaN;
  bool collided = false;
  for (const StepRecord& r : log.records) {
    collided = collided || r.collision;
    m.max_abs_accel = std::max(m.max_abs_accel, std::abs(r.ev.a));
    if (r.fallback) ++m.fallback_steps;
    if (r.ev.p_y >= config.w_lane && r.svs.size() >= 2) {
      m.min_d_sv0 = std::isnan(m.min_d_sv0) ? r.svs[0].distance : std::min(m.min_d_sv0, r.svs[0].distance);
      m.min_d_sv1 = std::isnan(m.min_d_sv1) ? r.svs[1].distance : std::min(m.min_d_sv1, r.svs[1].distance);
    }
  }
  bool safe_stop = false;
  if (outcome == EpisodeOutcome::kStopped && !log.records.empty()) {
    const EvState& ev = log.records.back().ev;
    safe_stop = ev.v <= config.stop_speed &&
                ev.p_x + 0.5 * config.geometry.l_veh <= config.p_x_ter;
  }
  m.success = !collided && (outcome == EpisodeOutcome::kMerged || safe_stop);
  return m;
}

EpisodeResult RunEpisode(const ScenarioConfig& config, PlannerKind kind, std::uint64_t seed) {
  Episode ep(config, kind, seed);
  while (!ep.done()) ep.Step();
  return std::move(ep).Finish();
}

MeanStd ComputeMeanStd(const std::vector<double>& values) {
  MeanStd r;
  double sum = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++r.count;
    }
  }
  if (r.count == 0) {
    r.mean = r.std = kNaN;
    return r;
  }
  r.mean = sum / r.count;
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - r.mean) * (v - r.mean);
  }
  r.std = std::sqrt(ss / r.count);
  return r;
}

BatchSummary Summarize(const std::vector<EpisodeMetrics>& episodes) {
  BatchSummary s;
  s.episodes = static_cast<int>(episodes.size());
  std::vector<double> d0, d1, acc;
  int successes = 0;
  for (const EpisodeMetrics& m : episodes) {
    switch (m.merge_class) {
      case MergeClass::kAhead: ++s.merge_ahead; break;
      case MergeClass::kBetween: ++s.merge_between; break;
      case MergeClass::kAfter: ++s.merge_after; break;
      case MergeClass::kNoMerge: ++s.merge_none; break;
    }
    if (m.outcome == EpisodeOutcome::kCollision) ++s.collisions;
    if (m.solver_cascade) ++s.solver_cascades;
    if (m.success) ++successes;
    d0.push_back(m.min_d_sv0);
    d1.push_back(m.min_d_sv1);
    acc.push_back(m.max_abs_accel);
  }
  s.success_rate = s.episodes > 0 ? static_cast<double>(successes) / s.episodes : 0.0;
  s.min_d_sv0 = ComputeMeanStd(d0);
  s.min_d_sv1 = ComputeMeanStd(d1);
  s.max_abs_accel = ComputeMeanStd(acc);
  return s;
}

int BatchThreads(int jobs) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MERGE_PLANNER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<int>(std::min<long>(v, n));
  }
  return std::max(1, std::min(n, jobs));
}

namespace {

// Runs job(i) for i in [0, jobs) on `threads` workers; rethrows the first
// failure after all workers stop.
template <typename F>
void ParallelFor(int jobs, int threads, F&& job) {
  if (threads <= 1 || jobs <= 1) {
    for (int i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (int i = next++; i < jobs; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = jobs;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

BatchResult RunMonteCarlo(const ScenarioConfig& config, PlannerKind kind, int episodes,
                          std::uint64_t base_seed, int threads) {
  if (episodes < 1) throw InvalidArgument("run_monte_carlo: episodes must be >= 1");
  config.Validate();
  BatchResult res;
  res.episodes.resize(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) res.seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
  ParallelFor(episodes, threads > 0 ? std::min(threads, episodes) : BatchThreads(episodes),
              [&](int i) { res.episodes[i] = RunEpisode(config, kind, res.seeds[i]).metrics; });
  res.summary = Summarize(res.episodes);
  return res;
}

std::vector<ConvergenceRow> ConvergenceStudy(const ScenarioConfig& config,
                                             const std::vector<int>& sizes, int repeats,
                                             std::uint64_t base_seed, int threads) {
  if (sizes.empty()) throw InvalidArgument("convergence_study: sizes must be nonempty");
  if (repeats < 1) throw InvalidArgument("convergence_study: repeats must be >= 1");
  for (int s : sizes) {
    if (s < 1) throw InvalidArgument("convergence_study: sizes must be >= 1");
  }
  std::vector<ConvergenceRow> rows;
  for (int size : sizes) {
    ScenarioConfig c = config;
    c.initial_samples = size;
    rows.push_back({size, RunMonteCarlo(c, PlannerKind::kProposed, repeats, base_seed, threads).summary});
  }
  return rows;
}

}  // namespace mergeplan
