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

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mergeplan/decision.hpp"
#include "mergeplan/error.hpp"
#include "mergeplan/estimator.hpp"
#include "oracles.hpp"

using namespace mergeplan;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

oracle::Vec6 ToOracle(const PointMassState& z) {
  return {z[0], z[1], z[2], z[3], z[4], z[5]};
}

std::vector<Polytope2> PointOccupancies(double x, double v, int n, double center) {
  return PredictOccupancy(PredictReachable({x, v}, {0, 0}, n, 50, 0.25), VehicleGeometry{},
                          center);
}

}  // namespace

TEST_CASE("occupancy extremes") {
  const Polytope2 box = Polytope2::FromBox(Vec2(7.5, 6.0), Vec2(2.18, 0.9));
  const std::vector<Polytope2> occ(20, box);
  const OccupancyExtremes ex = ComputeOccupancyExtremes(occ);
  for (int i = 0; i < 20; ++i) {
    CHECK(ex.lower[i] == doctest::Approx(5.32));
    CHECK(ex.upper[i] == doctest::Approx(9.68));
  }
  const std::vector<Polytope2> pts(3, Polytope2::Point(Vec2(100, 6)));
  const OccupancyExtremes ep = ComputeOccupancyExtremes(pts);
  for (int i = 0; i < 3; ++i) CHECK((ep.lower[i] == 100.0 && ep.upper[i] == 100.0));

  const auto grow = PredictOccupancy(PredictReachable({0, 30}, {-1, 1}, 20, 50, 0.25),
                                     VehicleGeometry{}, 6.0);
  const OccupancyExtremes eg = ComputeOccupancyExtremes(grow);
  for (int i = 1; i < 20; ++i) {
    CHECK(eg.upper[i] - eg.lower[i] > eg.upper[i - 1] - eg.lower[i - 1]);
  }
}

TEST_CASE("ref_velocity_qp examples") {
  const DecisionParams p;
  const PointMassState z = MakePointMassState(0, 30, 0, 6, 0, 0);
  VelocityQpResult r = RefVelocityQp(z, CorridorBounds::Unbounded(20), 6.0, p);
  CHECK(r.feasible);
  CHECK(r.v_ref == doctest::Approx(30.0));
  CHECK(r.objective < 1e-18);

  CorridorBounds tight = CorridorBounds::Unbounded(20);
  std::fill(tight.upper.begin(), tight.upper.end(), 20.0);
  const PointMassState z2 = MakePointMassState(0, 30, 0, 2, 0, 0);
  r = RefVelocityQp(z2, tight, 6.0, p);
  const oracle::GridResult g =
      oracle::GridSearchVelocity(ToOracle(z2), tight.lower, tight.upper, 6.0, p.d_min_qp, 50, 1e-3);
  // With an upper corridor of 20 m and 30 m/s initial speed the constraint
  // binds within the horizon for every v_ref; the grid confirms infeasibility.
  CHECK(r.feasible == g.feasible);
  if (g.feasible) {
    CHECK(r.v_ref < 30.0);
    CHECK(std::abs(r.objective - g.objective) <= 1e-3);
  }

  CorridorBounds cross = CorridorBounds::Unbounded(20);
  std::fill(cross.lower.begin(), cross.lower.end(), 50.0);
  std::fill(cross.upper.begin(), cross.upper.end(), 55.0);
  CHECK_FALSE(RefVelocityQp(z2, cross, 6.0, p).feasible);

  CHECK_THROWS_AS(RefVelocityQp(z2, CorridorBounds::Unbounded(5), 6.0, p), InvalidArgument);
}

TEST_CASE("ref_velocity_qp with a reachable tight corridor matches grid search") {
  const DecisionParams p;
  const PointMassState z = MakePointMassState(0, 30, 0, 2, 0, 0);
  CorridorBounds c = CorridorBounds::Unbounded(20);
  for (int i = 0; i < 20; ++i) c.upper[i] = 40.0 + 5.0 * i;
  const VelocityQpResult r = RefVelocityQp(z, c, 6.0, p);
  const oracle::GridResult g =
      oracle::GridSearchVelocity(ToOracle(z), c.lower, c.upper, 6.0, p.d_min_qp, 50, 1e-3);
  REQUIRE(g.feasible);
  REQUIRE(r.feasible);
  CHECK(r.v_ref < 30.0);
  CHECK(r.objective <= g.objective + 1e-3);
  CHECK(std::abs(r.objective - VelocityQpObjective(z, r.v_ref, 6.0, p)) < 1e-9);
}

TEST_CASE("ref_velocity_qp optimality and feasibility on random corridors") {
  const DecisionParams p;
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> v0(0, 40), a0(-3, 2), y0(1, 7), lo(-120, 40),
      width(10, 200), slope(-2, 12);
  std::bernoulli_distribution has_lo(0.6), has_hi(0.7);
  for (int trial = 0; trial < 40; ++trial) {
    const PointMassState z = MakePointMassState(0, v0(rng), a0(rng), y0(rng), 0, 0);
    CorridorBounds c = CorridorBounds::Unbounded(20);
    const bool l = has_lo(rng), h = has_hi(rng);
    const double base = lo(rng), w = width(rng), s = slope(rng);
    for (int i = 0; i < 20; ++i) {
      if (l) c.lower[i] = base + s * i;
      if (h) c.upper[i] = base + w + (s + 2) * i;
    }
    const VelocityQpResult r = RefVelocityQp(z, c, 6.0, p);
    const oracle::GridResult g =
        oracle::GridSearchVelocity(ToOracle(z), c.lower, c.upper, 6.0, p.d_min_qp, 50, 1e-3);
    if (g.feasible) {
      REQUIRE(r.feasible);
      CHECK(r.objective <= g.objective + 1e-3);
    }
    if (r.feasible) {
      const auto traj = oracle::Rollout(ToOracle(z), {0, r.v_ref, 0, 6.0, 0, 0}, 20);
      for (int i = 0; i < 20; ++i) {
        CHECK(traj[i][0] - (c.lower[i] + p.d_min_qp) >= -1e-6);
        CHECK((c.upper[i] - p.d_min_qp) - traj[i][0] >= -1e-6);
      }
      CHECK(r.v_ref >= 0.0);
      CHECK(r.v_ref <= p.v_adm);
    }
  }
}

TEST_CASE("algorithm branch selection") {
  const DecisionParams p;
  const EvState ev{822.5, 2, 0, 30, 0};
  const SvState sv0{812.5, 30}, sv1{772.5, 30};
  const auto o0 = PointOccupancies(sv0.p_x, sv0.v_x, 20, 6.0);
  const auto o1 = PointOccupancies(sv1.p_x, sv1.v_x, 20, 6.0);
  ReferenceVelocities r = ComputeReferenceVelocities(ev, sv0, sv1, o0, o1, p);
  CHECK(r.branch == Vt2Branch::kAheadOfSv0);
  const OccupancyExtremes e0 = ComputeOccupancyExtremes(o0);
  for (int i = 0; i < 20; ++i) {
    CHECK(r.vt2_corridor.lower[i] == e0.upper[i]);
    CHECK(r.vt2_corridor.upper[i] == kInf);
    CHECK(r.vt1_corridor.upper[i] == p.p_x_ter);
  }

  // Between the SVs with a gap narrower than 2 d_min_qp.
  const SvState a{806, 30}, b{798, 30};
  const EvState mid{802, 2, 0, 30, 0};
  r = ComputeReferenceVelocities(mid, a, b, PointOccupancies(a.p_x, 30, 20, 6.0),
                                 PointOccupancies(b.p_x, 30, 20, 6.0), p);
  CHECK(r.branch == Vt2Branch::kBetween);
  CHECK(r.gap_too_small);
  CHECK(r.v_vt2 == 0.0);

  // Far behind SV1.
  const EvState back{600, 2, 0, 30, 0};
  r = ComputeReferenceVelocities(back, sv0, sv1, o0, o1, p);
  CHECK(r.branch == Vt2Branch::kBehindSv1);
  const OccupancyExtremes e1 = ComputeOccupancyExtremes(o1);
  for (int i = 0; i < 20; ++i) CHECK(r.vt2_corridor.upper[i] == e1.lower[i]);
}

TEST_CASE("gap-check dominance and branch totality") {
  const DecisionParams p;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> x(500, 950), gap(0, 80), v(0, 40);
  for (int k = 0; k < 300; ++k) {
    const SvState sv0{x(rng), v(rng)};
    const SvState sv1{sv0.p_x - gap(rng), v(rng)};
    const EvState ev{x(rng), 2, 0, v(rng), 0};
    const auto o0 = PointOccupancies(sv0.p_x, sv0.v_x, 20, 6.0);
    const auto o1 = PointOccupancies(sv1.p_x, sv1.v_x, 20, 6.0);
    const ReferenceVelocities r = ComputeReferenceVelocities(ev, sv0, sv1, o0, o1, p);
    const int fired = (sv0.p_x <= ev.p_x) + (sv0.p_x > ev.p_x && sv1.p_x <= ev.p_x) +
                      (sv1.p_x > ev.p_x);
    CHECK(fired == 1);
    if (r.branch == Vt2Branch::kBetween) {
      const OccupancyExtremes e0 = ComputeOccupancyExtremes(o0), e1 = ComputeOccupancyExtremes(o1);
      double m = kInf;
      for (int i = 0; i < 20; ++i) m = std::min(m, e0.lower[i] - e1.upper[i]);
      CHECK(r.gap_too_small == (m <= 2 * p.d_min_qp));
      if (r.gap_too_small) CHECK(r.v_vt2 == 0.0);
    }
    if (!r.vt1_feasible) CHECK(r.v_vt1 == 0.0);
    if (!r.vt2_feasible) CHECK(r.v_vt2 == 0.0);
  }
}

TEST_CASE("maneuver cost") {
  const DecisionParams p;
  CHECK(std::abs(ManeuverCost(MakePointMassState(0, 30, 0, 6, 0, 0), 30, 6, p)) < 1e-20);

  const PointMassState z = MakePointMassState(0, 30, 0, 2, 0, 0);
  const double j = ManeuverCost(z, 30, 6, p);
  const auto traj = oracle::Rollout(ToOracle(z), {0, 30, 0, 6, 0, 0}, 20);
  double expect = p.W_l * 16.0;
  for (const auto& s : traj) expect += p.W_x * s[2] * s[2] + p.W_y * s[5] * s[5];
  CHECK(std::abs(j - expect) < 1e-9);

  const PointMassState zv = MakePointMassState(0, 25, 0, 2, 0, 0);
  DecisionParams p2 = p;
  p2.W_v *= 2;
  const double base = ManeuverCost(zv, 30, 6, p);
  const double doubled = ManeuverCost(zv, 30, 6, p2);
  CHECK(doubled - base == doctest::Approx(p.W_v * 25.0));
}

TEST_CASE("maneuver selection") {
  const Reference r1{30, 2, Maneuver::kVT1}, r2{28, 6, Maneuver::kVT2};
  ManeuverProbabilities pr = ComputeManeuverProbabilities(3, 3);
  CHECK(pr.vt1 == doctest::Approx(0.5));
  CHECK(SelectManeuver(3, 3, r1, r2).maneuver == Maneuver::kVT2);

  pr = ComputeManeuverProbabilities(1, 4);
  CHECK(pr.vt1 == doctest::Approx(2.0 / 3.0));
  CHECK(SelectManeuver(1, 4, r1, r2).maneuver == Maneuver::kVT1);

  pr = ComputeManeuverProbabilities(2, 0);
  CHECK(pr.vt2 == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(SelectManeuver(2, 0, r1, r2).maneuver == Maneuver::kVT2);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(1e-6, 1e3), s(1e-3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng), b = u(rng), c = s(rng);
    CHECK(SelectManeuver(a, b, r1, r2).maneuver == SelectManeuver(c * a, c * b, r1, r2).maneuver);
    const ManeuverProbabilities q = ComputeManeuverProbabilities(a, b);
    CHECK(std::abs(q.vt1 + q.vt2 - 1.0) <= 1e-12);
    CHECK(q.vt1 >= 0.0);
    CHECK(q.vt2 >= 0.0);
  }
}

TEST_CASE("decide applies the infeasibility penalty") {
  const DecisionParams p;
  // Ego already at the terminal position: VT1 cannot keep p_x <= p_x_ter - d.
  const EvState ev{999, 2, 0, 30, 0};
  const SvState sv0{700, 30}, sv1{650, 30};
  const Decision d = Decide(ev, sv0, sv1, PointOccupancies(sv0.p_x, 30, 20, 6.0),
                            PointOccupancies(sv1.p_x, 30, 20, 6.0), p);
  CHECK_FALSE(d.velocities.vt1_feasible);
  CHECK(d.j_vt1 >= kInfeasibleManeuverPenalty);
  CHECK(d.reference.maneuver == Maneuver::kVT2);
}
