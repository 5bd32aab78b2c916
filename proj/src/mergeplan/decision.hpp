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
// Rule-based lane/velocity decision for the two-lane merge.
//
// Each maneuver (keep lane 1, merge into lane 2) gets a safe reference speed
// from a one-dimensional QP over the closed-loop point-mass prediction, with
// longitudinal corridors built from the surrounding vehicles' predicted
// occupancies. The maneuver with the lowest cost (highest 1/sqrt(J) weight)
// becomes the moving-target reference for the planner.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mergeplan/models.hpp"
#include "mergeplan/polytope.hpp"

namespace mergeplan {

enum class Maneuver { kVT1, kVT2 };

std::string_view ManeuverName(Maneuver m);

struct Reference {
  double v_x_ref = 0.0;
  double p_y_ref = 0.0;
  Maneuver maneuver = Maneuver::kVT1;
};

// Per-step longitudinal position bounds; entries may be +-infinity.
struct CorridorBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static CorridorBounds Unbounded(int n);
  std::size_t size() const { return lower.size(); }
};

struct DecisionParams {
  double d_min_qp = 4.8;  // d_min + l_veh
  double W_x = 0.1;
  double W_y = 0.1;
  double W_v = 0.7;
  double W_l = 0.1;
  FeedbackGains gains = DefaultFeedbackGains();
  int N = 20;
  double w_lane = 4.0;
  double p_x_ter = 1000.0;
  double v_adm = 50.0;

  double T() const { return gains.T(); }
  void Validate() const;
};

// Additive cost for a maneuver whose reference QP was infeasible.
inline constexpr double kInfeasibleManeuverPenalty = 1e6;

struct OccupancyExtremes {
  std::vector<double> lower;
  std::vector<double> upper;
};

// Per-step longitudinal min/max of each occupancy.
OccupancyExtremes ComputeOccupancyExtremes(std::span<const Polytope2> occ);

struct VelocityQpResult {
  bool feasible = false;
  double v_ref = 0.0;
  double objective = 0.0;
  // Feasible interval for v_ref after intersecting with [0, v_adm].
  double lower = 0.0;
  double upper = 0.0;
};

// Sum over the horizon of (v_x,i - v_ref)^2 for the closed-loop rollout.
double VelocityQpObjective(const PointMassState& z0, double v_ref,
                           double p_y_ref, const DecisionParams& params);

// Exact minimizer of the univariate reference-speed QP.
VelocityQpResult RefVelocityQp(const PointMassState& z0,
                               const CorridorBounds& corridor, double p_y_ref,
                               const DecisionParams& params);

enum class Vt2Branch { kAheadOfSv0, kBetween, kBehindSv1 };

std::string_view Vt2BranchName(Vt2Branch b);

struct ReferenceVelocities {
  double v_vt1 = 0.0;
  double v_vt2 = 0.0;
  bool vt1_feasible = false;
  bool vt2_feasible = false;
  Vt2Branch branch = Vt2Branch::kAheadOfSv0;
  // The between-vehicles gap check fired and forced v_vt2 = 0.
  bool gap_too_small = false;
  CorridorBounds vt1_corridor;
  CorridorBounds vt2_corridor;
};

// z0 assembled from the measured ego state (no lateral velocity/acceleration).
PointMassState DecisionInitialState(const EvState& ev);

// Reference speeds for both maneuvers. Infeasible QPs yield speed 0 with the
// feasibility flag cleared.
ReferenceVelocities ComputeReferenceVelocities(
    const EvState& ev, const SvState& sv0, const SvState& sv1,
    std::span<const Polytope2> occ0, std::span<const Polytope2> occ1,
    const DecisionParams& params);

double ManeuverCost(const PointMassState& z0, double v_m, double p_y_m,
                    const DecisionParams& params);

struct ManeuverProbabilities {
  double vt1 = 0.5;
  double vt2 = 0.5;
};

// P(m) proportional to 1/sqrt(J_m); J floored at 1e-12.
ManeuverProbabilities ComputeManeuverProbabilities(double j_vt1, double j_vt2);

// Higher probability wins; ties go to VT2.
Reference SelectManeuver(double j_vt1, double j_vt2, const Reference& vt1,
                         const Reference& vt2);

struct Decision {
  Reference reference;
  ReferenceVelocities velocities;
  double j_vt1 = 0.0;
  double j_vt2 = 0.0;
  ManeuverProbabilities probabilities;
};

Decision Decide(const EvState& ev, const SvState& sv0, const SvState& sv1,
                std::span<const Polytope2> occ0, std::span<const Polytope2> occ1,
                const DecisionParams& params);

}  // namespace mergeplan
