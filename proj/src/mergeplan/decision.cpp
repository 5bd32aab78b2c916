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

#include "mergeplan/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mergeplan/error.hpp"

namespace mergeplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// z_i = alpha_i + beta_i * v_ref for the closed-loop rollout.
struct AffineRollout {
  std::vector<PointMassState> alpha;
  std::vector<PointMassState> beta;
};

AffineRollout RolloutInReference(const PointMassState& z0, double p_y_ref,
                                 const DecisionParams& params) {
  const FeedbackGains& g = params.gains;
  const PointMassState lateral_drive =
      g.B() * (g.K() * MakePointMassState(0, 0, 0, p_y_ref, 0, 0));
  const PointMassState speed_drive = g.B() * (g.K() * MakePointMassState(0, 1, 0, 0, 0, 0));
  AffineRollout r;
  r.alpha.reserve(params.N);
  r.beta.reserve(params.N);
  PointMassState a = z0;
  PointMassState b = PointMassState::Zero();
  for (int i = 0; i < params.N; ++i) {
    a = g.Phi() * a + lateral_drive;
    b = g.Phi() * b + speed_drive;
    r.alpha.push_back(a);
    r.beta.push_back(b);
  }
  return r;
}

}  // namespace

std::string_view ManeuverName(Maneuver m) {
  return m == Maneuver::kVT1 ? "VT1" : "VT2";
}

std::string_view Vt2BranchName(Vt2Branch b) {
  switch (b) {
    case Vt2Branch::kAheadOfSv0: return "ahead";
    case Vt2Branch::kBetween: return "between";
    case Vt2Branch::kBehindSv1: return "behind";
  }
  return "?";
}

CorridorBounds CorridorBounds::Unbounded(int n) {
  return {std::vector<double>(n, -kInf), std::vector<double>(n, kInf)};
}

void DecisionParams::Validate() const {
  if (!(d_min_qp > 0)) throw InvalidArgument("decision: d_min_qp must be positive");
  if (N < 1) throw InvalidArgument("decision: N must be >= 1");
  if (W_x < 0 || W_y < 0 || W_v < 0 || W_l < 0) {
    throw InvalidArgument("decision: weights must be nonnegative");
  }
}

OccupancyExtremes ComputeOccupancyExtremes(std::span<const Polytope2> occ) {
  OccupancyExtremes ex;
  ex.lower.reserve(occ.size());
  ex.upper.reserve(occ.size());
  for (const Polytope2& o : occ) {
    const Interval iv = ProjectAxis(o, 0);
    ex.lower.push_back(iv.lower);
    ex.upper.push_back(iv.upper);
  }
  return ex;
}

double VelocityQpObjective(const PointMassState& z0, double v_ref,
                           double p_y_ref, const DecisionParams& params) {
  const auto traj = PointMassRollout(
      z0, MakePointMassState(0, v_ref, 0, p_y_ref, 0, 0), params.gains, params.N);
  double sum = 0.0;
  for (const auto& z : traj) sum += (z[1] - v_ref) * (z[1] - v_ref);
  return sum;
}

VelocityQpResult RefVelocityQp(const PointMassState& z0,
                               const CorridorBounds& corridor, double p_y_ref,
                               const DecisionParams& params) {
  if (corridor.lower.size() != static_cast<std::size_t>(params.N) ||
      corridor.upper.size() != static_cast<std::size_t>(params.N)) {
    throw InvalidArgument("ref_velocity_qp: corridor length must equal N");
  }
  const AffineRollout roll = RolloutInReference(z0, p_y_ref, params);

  // Objective sum_i (alpha_i[v] + (beta_i[v] - 1) v)^2 = qa v^2 + qb v + qc.
  double qa = 0.0, qb = 0.0, qc = 0.0;
  for (int i = 0; i < params.N; ++i) {
    const double c = roll.alpha[i][1];
    const double s = roll.beta[i][1] - 1.0;
    qa += s * s;
    qb += 2.0 * c * s;
    qc += c * c;
  }

  VelocityQpResult res;
  double lb = 0.0;
  double ub = params.v_adm;
  bool feasible = true;
  auto require_at_least = [&](double coef, double rhs_minus_const) {
    // coef * v >= rhs_minus_const
    if (std::abs(coef) <= 1e-12) {
      if (rhs_minus_const > 1e-9) feasible = false;
    } else if (coef > 0) {
      lb = std::max(lb, rhs_minus_const / coef);
    } else {
      ub = std::min(ub, rhs_minus_const / coef);
    }
  };
  for (int i = 0; i < params.N; ++i) {
    const double a = roll.alpha[i][0];
    const double b = roll.beta[i][0];
    if (std::isfinite(corridor.lower[i])) {
      require_at_least(b, corridor.lower[i] + params.d_min_qp - a);
    }
    if (std::isfinite(corridor.upper[i])) {
      require_at_least(-b, -(corridor.upper[i] - params.d_min_qp - a));
    }
  }
  res.lower = lb;
  res.upper = ub;
  if (!feasible || lb > ub) return res;

  // qa > 0 unless the closed loop tracks the reference exactly at every step;
  // then every v is optimal and the current speed is kept.
  const double unconstrained = qa > 1e-15 ? -qb / (2.0 * qa) : z0[1];
  res.feasible = true;
  res.v_ref = std::clamp(unconstrained, lb, ub);
  res.objective = std::max(0.0, qa * res.v_ref * res.v_ref + qb * res.v_ref + qc);
  return res;
}

PointMassState DecisionInitialState(const EvState& ev) {
  return MakePointMassState(ev.p_x, ev.v, ev.a, ev.p_y, 0.0, 0.0);
}

ReferenceVelocities ComputeReferenceVelocities(
    const EvState& ev, const SvState& sv0, const SvState& sv1,
    std::span<const Polytope2> occ0, std::span<const Polytope2> occ1,
    const DecisionParams& params) {
  const auto N = static_cast<std::size_t>(params.N);
  if (occ0.size() != N || occ1.size() != N) {
    throw InvalidArgument("algorithm1: occupancy length must equal N");
  }
  const PointMassState z0 = DecisionInitialState(ev);
  ReferenceVelocities out;

  out.vt1_corridor = CorridorBounds::Unbounded(params.N);
  std::fill(out.vt1_corridor.upper.begin(), out.vt1_corridor.upper.end(),
            params.p_x_ter);
  const VelocityQpResult vt1 =
      RefVelocityQp(z0, out.vt1_corridor, 0.5 * params.w_lane, params);
  out.vt1_feasible = vt1.feasible;
  out.v_vt1 = vt1.feasible ? vt1.v_ref : 0.0;

  const OccupancyExtremes ex0 = ComputeOccupancyExtremes(occ0);
  const OccupancyExtremes ex1 = ComputeOccupancyExtremes(occ1);
  CorridorBounds& c = out.vt2_corridor;
  c = CorridorBounds::Unbounded(params.N);

  if (sv0.p_x <= ev.p_x) {
    out.branch = Vt2Branch::kAheadOfSv0;
    c.lower = ex0.upper;
  } else if (sv1.p_x <= ev.p_x) {
    out.branch = Vt2Branch::kBetween;
    c.lower = ex1.upper;
    c.upper = ex0.lower;
    double min_gap = kInf;
    for (std::size_t i = 0; i < N; ++i) min_gap = std::min(min_gap, c.upper[i] - c.lower[i]);
    out.gap_too_small = min_gap <= 2.0 * params.d_min_qp;
  } else {
    out.branch = Vt2Branch::kBehindSv1;
    c.upper = ex1.lower;
  }

  if (out.gap_too_small) {
    out.vt2_feasible = true;
    out.v_vt2 = 0.0;
  } else {
    const VelocityQpResult vt2 = RefVelocityQp(z0, c, 1.5 * params.w_lane, params);
    out.vt2_feasible = vt2.feasible;
    out.v_vt2 = vt2.feasible ? vt2.v_ref : 0.0;
  }
  return out;
}

double ManeuverCost(const PointMassState& z0, double v_m, double p_y_m,
                    const DecisionParams& params) {
  const auto traj = PointMassRollout(
      z0, MakePointMassState(0, v_m, 0, p_y_m, 0, 0), params.gains, params.N);
  double j = 0.0;
  for (const auto& z : traj) j += params.W_x * z[2] * z[2] + params.W_y * z[5] * z[5];
  j += params.W_v * (z0[1] - v_m) * (z0[1] - v_m);
  j += params.W_l * (z0[3] - p_y_m) * (z0[3] - p_y_m);
  return j;
}

ManeuverProbabilities ComputeManeuverProbabilities(double j_vt1, double j_vt2) {
  const double w1 = 1.0 / std::sqrt(std::max(j_vt1, 1e-12));
  const double w2 = 1.0 / std::sqrt(std::max(j_vt2, 1e-12));
  return {w1 / (w1 + w2), w2 / (w1 + w2)};
}

Reference SelectManeuver(double j_vt1, double j_vt2, const Reference& vt1,
                         const Reference& vt2) {
  const ManeuverProbabilities p = ComputeManeuverProbabilities(j_vt1, j_vt2);
  return p.vt1 > p.vt2 ? vt1 : vt2;
}

Decision Decide(const EvState& ev, const SvState& sv0, const SvState& sv1,
                std::span<const Polytope2> occ0, std::span<const Polytope2> occ1,
                const DecisionParams& params) {
  Decision d;
  d.velocities = ComputeReferenceVelocities(ev, sv0, sv1, occ0, occ1, params);
  const PointMassState z0 = DecisionInitialState(ev);
  const Reference vt1{d.velocities.v_vt1, 0.5 * params.w_lane, Maneuver::kVT1};
  const Reference vt2{d.velocities.v_vt2, 1.5 * params.w_lane, Maneuver::kVT2};
  d.j_vt1 = ManeuverCost(z0, vt1.v_x_ref, vt1.p_y_ref, params);
  d.j_vt2 = ManeuverCost(z0, vt2.v_x_ref, vt2.p_y_ref, params);
  if (!d.velocities.vt1_feasible) d.j_vt1 += kInfeasibleManeuverPenalty;
  if (!d.velocities.vt2_feasible) d.j_vt2 += kInfeasibleManeuverPenalty;
  d.probabilities = ComputeManeuverProbabilities(d.j_vt1, d.j_vt2);
  d.reference = SelectManeuver(d.j_vt1, d.j_vt2, vt1, vt2);
  return d;
}

}  // namespace mergeplan
