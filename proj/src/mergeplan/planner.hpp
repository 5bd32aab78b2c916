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
// Nonlinear MPC for the ego vehicle.
//
// Decision variables are the jerk/steering-rate controls over the horizon and,
// per obstacle and step, the dual multipliers lambda of the point-to-polytope
// distance. A collision-free step needs (H p - h)' lambda >= d_min with
// |H' lambda| <= 1 and lambda >= 0; any such lambda certifies that the
// Euclidean distance from p to {x : H x <= h} is at least d_min.
//
// The problem is solved by SQP over the condensed (single-shooting)
// formulation with a Gauss-Newton Hessian, l1 exact-penalty slacks on state
// and collision constraints, and a backtracking line search on the l1 merit.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mergeplan/decision.hpp"
#include "mergeplan/estimator.hpp"
#include "mergeplan/models.hpp"
#include "mergeplan/polytope.hpp"

namespace mergeplan {

struct SqpSettings {
  int max_iterations = 40;
  double kkt_tolerance = 1e-6;
  double merit_penalty = 10.0;  // initial l1 merit weight; only ever raised
  double backtracking = 0.5;
  double slack_penalty = 1e4;
  bool warm_start = true;

  void Validate() const;
  bool operator==(const SqpSettings&) const = default;
};

struct PlannerParams {
  int n_p = 10;
  double T = 0.25;
  double q1 = 100.0;
  double q2 = 0.001;
  Eigen::Vector2d q3 = Eigen::Vector2d(1.0, 1.0);  // (p_y, v) terminal weights
  Eigen::Vector3d u_lower = Eigen::Vector3d(0.0, -5.0, -0.1);  // v, a, delta
  Eigen::Vector3d u_upper = Eigen::Vector3d(50.0, 2.5, 0.1);
  double d_min = 0.1;
  double w_lane = 4.0;
  double p_x_ter = 1000.0;
  VehicleGeometry geometry;
  SqpSettings sqp;

  void Validate() const;
};

// Normalized H-representation of an inflated obstacle.
struct ObstacleStep {
  HalfspaceRep hrep;
};

// occ (+) ego footprint box, as unit-normal halfspaces.
ObstacleStep InflateObstacle(const Polytope2& occ, const VehicleGeometry& geom);

struct DualDistanceResult {
  double value = 0.0;
  Eigen::VectorXd lambda;
};

// max (H p - h)' lambda s.t. lambda >= 0, |H' lambda| <= 1. Equals the
// Euclidean distance from p to the obstacle when p is outside, else 0.
DualDistanceResult DualDistanceWithMultiplier(const Eigen::Vector2d& p,
                                              const ObstacleStep& obs);
double DualDistance(const Eigen::Vector2d& p, const ObstacleStep& obs);

enum class SolverStatus { kOptimal, kMaxIter, kInfeasibleRelaxed };

std::string_view SolverStatusName(SolverStatus s);

// Per-obstacle sequences, one ObstacleStep per horizon step.
using ObstacleSet = std::vector<std::vector<ObstacleStep>>;

struct MpcSolution {
  std::vector<EvControl> controls;
  std::vector<EvState> states;  // x_1 .. x_{n_p}
  // duals[s][i] is the multiplier for obstacle s at step i + 1.
  std::vector<std::vector<Eigen::VectorXd>> duals;
  SolverStatus status = SolverStatus::kMaxIter;
  double objective = 0.0;
  double solve_time = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  double max_slack = 0.0;
  // Merit values (before, after) of every accepted step, at a common penalty.
  std::vector<std::pair<double, double>> merit_history;
};

// Solves the MPC from x0. A supplied initial guess is used as-is (no shift).
MpcSolution SolveMpc(const EvState& x0, const Reference& ref,
                     const ObstacleSet& obstacles, const PlannerParams& params,
                     const MpcSolution* initial_guess = nullptr);

struct VerificationReport {
  double dynamics = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double steering = 0.0;
  double drivable_area = 0.0;
  double collision = 0.0;
  double duals = 0.0;

  double worst() const;
};

// Independent check of a solution against every constraint family. Values
// are worst-case violations (<= 0 entries clamp to 0).
VerificationReport VerifySolution(const MpcSolution& sol, const EvState& x0,
                                  const Reference& ref,
                                  const ObstacleSet& obstacles,
                                  const PlannerParams& params);

// One step of the shifted warm start: drop the first control/dual, repeat the
// last one, and re-simulate the states from x0.
MpcSolution ShiftSolution(const MpcSolution& sol, const EvState& x0,
                          const PlannerParams& params);

// Holds warm-start state for one episode. Not safe for concurrent use.
class MpcPlanner {
 public:
  explicit MpcPlanner(PlannerParams params);

  MpcSolution Plan(const EvState& x0, const Reference& ref,
                   const ObstacleSet& obstacles);
  void Reset() { last_.reset(); }
  const PlannerParams& params() const { return params_; }

 private:
  PlannerParams params_;
  std::optional<MpcSolution> last_;
};

// Braking command used when the planner reports infeasible_relaxed: steer
// rate zero and the largest deceleration that keeps v_1 >= 0.
EvControl FallbackControl(const EvState& x, const PlannerParams& params);

enum class PlannerKind { kProposed, kRmpc, kDmpc };

std::string_view PlannerKindName(PlannerKind k);
std::optional<PlannerKind> ParsePlannerKind(std::string_view name);

// Input set used for occupancy prediction by each planner.
AccelBounds PlannerInputSet(PlannerKind kind, const AccelBounds& estimated,
                            const AccelBounds& worst_case);

// Occupancy sequences (length n) for every SV under the planner's input set.
std::vector<OccupancyPrediction> OccupancyForPlanner(
    PlannerKind kind, const std::vector<SvState>& svs,
    const std::vector<AccelBounds>& estimated, const AccelBounds& worst_case,
    int n, double v_adm, double T, const VehicleGeometry& geom,
    const std::vector<double>& lateral_centers);

}  // namespace mergeplan
