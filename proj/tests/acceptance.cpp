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

// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
// Exit status is 0 when the set of failing criteria equals --expect-fail
// exactly, so a known failure stays visible without breaking ctest and an
// unexpected pass or failure does.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mergeplan/commands.hpp"
#include "mergeplan/config.hpp"
#include "mergeplan/decision.hpp"
#include "mergeplan/estimator.hpp"
#include "mergeplan/models.hpp"
#include "mergeplan/planner.hpp"
#include "mergeplan/sim.hpp"
#include "oracles.hpp"

using namespace mergeplan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string MeanStdText(const MeanStd& m) { return Fmt("%.3f±%.3f", m.mean, m.std); }

// Planner comparison under a sudden SV0 acceleration near the lane end.
Outcome PlannerComparison() {
  const ScenarioConfig c = LoadConfig(MERGEPLAN_CONFIG_DIR "/sudden_accel_sv0.cfg");
  const int n = 50;
  const std::uint64_t base_seed = 1000;
  const BatchSummary p = RunMonteCarlo(c, PlannerKind::kProposed, n, base_seed).summary;
  const BatchSummary r = RunMonteCarlo(c, PlannerKind::kRmpc, n, base_seed).summary;
  const BatchSummary d = RunMonteCarlo(c, PlannerKind::kDmpc, n, base_seed).summary;

  const bool a = p.success_rate == 1.0 && p.merge_ahead >= 0.9 * n;
  const bool b = r.success_rate == 1.0 && r.merge_after >= 0.9 * n;
  const bool cc = d.min_d_sv0.mean < p.min_d_sv0.mean && r.min_d_sv1.mean < r.min_d_sv0.mean;
  const bool dd = p.max_abs_accel.mean < d.max_abs_accel.mean &&
                  p.max_abs_accel.mean < r.max_abs_accel.mean;
  std::string detail;
  for (const auto& [name, s] : {std::pair{"proposed", p}, {"rmpc", r}, {"dmpc", d}}) {
    detail += Fmt("\n    %-8s success %.2f ahead/between/after/none %d/%d/%d/%d d_sv0 %s d_sv1 %s "
                  "max|a| %s collisions %d",
                  name, s.success_rate, s.merge_ahead, s.merge_between, s.merge_after,
                  s.merge_none, MeanStdText(s.min_d_sv0).c_str(),
                  MeanStdText(s.min_d_sv1).c_str(), MeanStdText(s.max_abs_accel).c_str(),
                  s.collisions);
  }
  detail = Fmt("(a) %s (b) %s (c) %s (d) %s", a ? "ok" : "FAIL", b ? "ok" : "FAIL",
               cc ? "ok" : "FAIL", dd ? "ok" : "FAIL") +
           detail;
  return {a && b && cc && dd, detail};
}

Outcome EstimatorSoundness() {
  const VehicleGeometry g;
  const double T = 0.25, v_adm = 50.0;
  const int n = 20;
  const AccelBounds worst = WorstCaseBounds(0.71, 9.8);
  struct Case {
    SvState x;
    AccelBounds b;
  };
  const Case cases[] = {{{812.5, 30}, {-0.9, 0.9}}, {{772.5, 30}, {-0.9, 2.8}},
                        {{812.5, 30}, worst},       {{0, 0.5}, {-3, 0.5}},
                        {{0, 49}, {-0.5, 4}},       {{500, 20}, {0, 0}}};
  std::mt19937_64 rng(2026);
  long violations = 0, checks = 0;
  for (const Case& c : cases) {
    const OccupancyPrediction pred = PredictForwardOccupancy(c.x, c.b, n, v_adm, T, g, 6.0);
    std::uniform_real_distribution<double> u(c.b.a_min, c.b.a_max);
    std::bernoulli_distribution edge(0.2);
    for (int k = 0; k < 1000; ++k) {
      SvState s = c.x;
      for (int i = 0; i < n; ++i) {
        double a = u(rng);
        if (edge(rng)) a = rng() % 2 ? c.b.a_min : c.b.a_max;
        const double v1 = std::clamp(s.v_x + T * a, 0.0, v_adm);
        s = SvStep(s, (v1 - s.v_x) / T, T);
        const Polytope2 fp =
            Polytope2::FromBox(Vec2(s.p_x, 6.0), Vec2(0.5 * g.l_veh, 0.5 * g.w_veh));
        violations += !pred.reachable[i].Contains(Vec2(s.p_x, s.v_x), 1e-9);
        violations += !pred.steps[i].Contains(fp, 1e-9);
        checks += 2;
      }
    }
  }

  long stream_violations = 0;
  std::uniform_real_distribution<double> obs(worst.a_min, worst.a_max);
  std::uniform_int_distribution<int> len(1, 40);
  const int streams = 100000;
  for (int k = 0; k < streams; ++k) {
    BoundsEstimator est(InformationSet({0.0}));
    AccelBounds prev = est.bounds();
    for (int i = len(rng); i > 0; --i) {
      const double a = obs(rng);
      est.Observe(a);
      const AccelBounds& b = est.bounds();
      stream_violations += !prev.Within(b) || !b.Within(worst) || !b.Contains(a);
      prev = b;
    }
  }
  return {violations == 0 && stream_violations == 0,
          Fmt("%ld/%ld rollout containment violations over %zu configurations x 1000 rollouts; "
              "%ld violations over %d observation streams",
              violations, checks, std::size(cases), stream_violations, streams)};
}

Outcome DualDistanceEquivalence() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> c(-50, 50), hw(0.1, 10), off(-30, 30), unit(-1, 1);
  double worst_exterior = 0.0, worst_interior = 0.0;
  int exterior = 0, interior = 0;
  while (exterior < 1000 || interior < 1000) {
    const double cx = c(rng), cy = c(rng), wx = hw(rng), wy = hw(rng);
    const ObstacleStep o{Polytope2::FromBox(Vec2(cx, cy), Vec2(wx, wy)).Halfspaces()};
    if (exterior < 1000) {
      const Vec2 p(cx + off(rng), cy + off(rng));
      const double ref = oracle::RectDistance(p.x(), p.y(), cx - wx, cx + wx, cy - wy, cy + wy);
      if (ref > 0.0) {
        worst_exterior = std::max(worst_exterior, std::abs(DualDistance(p, o) - ref));
        ++exterior;
      }
    }
    if (interior < 1000) {
      const Vec2 p(cx + 0.999 * wx * unit(rng), cy + 0.999 * wy * unit(rng));
      worst_interior = std::max(worst_interior, std::abs(DualDistance(p, o)));
      ++interior;
    }
  }
  return {worst_exterior <= 1e-6 && worst_interior == 0.0,
          Fmt("worst exterior error %.3g over 1000 points, worst interior value %.3g over 1000 "
              "points",
              worst_exterior, worst_interior)};
}

Outcome VelocityQpOracle() {
  const DecisionParams p;
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> v0(0, 40), a0(-3, 2), y0(1, 7), lo(-120, 40),
      width(10, 200), slope(-2, 12);
  std::bernoulli_distribution has_lo(0.6), has_hi(0.7);
  // A grid point next to an active corridor bound can sit far up a steep
  // objective, so the grid only bounds the optimum from above.
  double worst_excess = 0.0, worst_gap = 0.0, worst_dv = 0.0, worst_slack = 0.0;
  int compared = 0, mismatched_feasibility = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const PointMassState z = MakePointMassState(0, v0(rng), a0(rng), y0(rng), 0, 0);
    const oracle::Vec6 zo{z[0], z[1], z[2], z[3], z[4], z[5]};
    CorridorBounds c = CorridorBounds::Unbounded(p.N);
    const bool l = has_lo(rng), h = has_hi(rng);
    const double base = lo(rng), w = width(rng), s = slope(rng);
    for (int i = 0; i < p.N; ++i) {
      if (l) c.lower[i] = base + s * i;
      if (h) c.upper[i] = base + w + (s + 2) * i;
    }
    const double p_y_ref = trial % 2 ? 6.0 : 2.0;
    const VelocityQpResult r = RefVelocityQp(z, c, p_y_ref, p);
    const oracle::GridResult g =
        oracle::GridSearchVelocity(zo, c.lower, c.upper, p_y_ref, p.d_min_qp, p.v_adm, 1e-3);
    if (g.feasible && !r.feasible) ++mismatched_feasibility;
    if (g.feasible && r.feasible) {
      worst_excess = std::max(worst_excess, r.objective - g.objective);
      worst_gap = std::max(worst_gap, std::abs(r.objective - g.objective));
      worst_dv = std::max(worst_dv, std::abs(r.v_ref - g.v_ref));
      ++compared;
    }
    if (r.feasible) {
      const auto traj = oracle::Rollout(zo, {0, r.v_ref, 0, p_y_ref, 0, 0}, p.N);
      double slack = std::min(r.v_ref, p.v_adm - r.v_ref);
      for (int i = 0; i < p.N; ++i) {
        slack = std::min(slack, traj[i][0] - (c.lower[i] + p.d_min_qp));
        slack = std::min(slack, (c.upper[i] - p.d_min_qp) - traj[i][0]);
      }
      worst_slack = std::min(worst_slack, slack);
    }
  }
  return {worst_excess <= 1e-3 && worst_dv <= 1e-3 && worst_slack >= -1e-6 &&
              mismatched_feasibility == 0,
          Fmt("over %d feasible instances: worst objective excess over grid %.3g, worst "
              "|v_ref - grid v_ref| %.3g, worst |objective - grid| %.3g; worst re-verified "
              "slack %.3g; %d instances feasible on the grid but not in the QP",
              compared, worst_excess, worst_dv, worst_gap, worst_slack,
              mismatched_feasibility)};
}

Outcome MpcFeasibility() {
  const PlannerParams p;
  const VehicleGeometry g;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> y(1.5, 6.5), v(5, 40), a(-2, 2), gap(-30, 60),
      sv_v(10, 40), spread(0, 2);
  std::uniform_int_distribution<int> count(0, 2);
  int optimal = 0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const EvState x0{700, y(rng), 0, v(rng), a(rng)};
    const bool vt2 = k % 2 == 1;
    const Reference ref{v(rng), vt2 ? 6.0 : 2.0, vt2 ? Maneuver::kVT2 : Maneuver::kVT1};
    ObstacleSet obstacles;
    for (int s = count(rng); s > 0; --s) {
      const double w = spread(rng);
      const OccupancyPrediction occ = PredictForwardOccupancy(
          {x0.p_x + gap(rng), sv_v(rng)}, {-w, w}, p.n_p, 50, p.T, g, 6.0);
      std::vector<ObstacleStep> steps;
      for (const Polytope2& o : occ.steps) steps.push_back(InflateObstacle(o, g));
      obstacles.push_back(std::move(steps));
    }
    const MpcSolution sol = SolveMpc(x0, ref, obstacles, p);
    if (sol.status != SolverStatus::kOptimal) continue;
    ++optimal;
    worst = std::max(worst, VerifySolution(sol, x0, ref, obstacles, p).worst());
  }
  const MpcSolution still = SolveMpc({800, 6, 0, 30, 0}, {30, 6, Maneuver::kVT2}, {}, p);
  const bool stationary = still.status == SolverStatus::kOptimal && still.objective < 1e-8;
  return {optimal > 0 && worst <= 1e-6 && stationary,
          Fmt("%d/100 optimal, worst violation %.3g; stationary objective %.3g", optimal, worst,
              still.objective)};
}

// Classical RK4 on the kinematic equations with `substeps` equal steps.
EvState FineRk4(EvState x, const EvControl& u, const VehicleGeometry& g, double T,
                int substeps) {
  const double L = g.l_f + g.l_r;
  auto f = [&](const std::array<double, 5>& s) {
    return std::array<double, 5>{s[3], s[3] * (s[2] + g.l_r / L * u.delta),
                                 s[3] * u.delta / L, s[4], u.eta};
  };
  std::array<double, 5> s{x.p_x, x.p_y, x.phi, x.v, x.a};
  const double h = T / substeps;
  auto axpy = [](const std::array<double, 5>& a, double c, const std::array<double, 5>& b) {
    std::array<double, 5> out;
    for (int i = 0; i < 5; ++i) out[i] = a[i] + c * b[i];
    return out;
  };
  for (int k = 0; k < substeps; ++k) {
    const auto k1 = f(s);
    const auto k2 = f(axpy(s, h / 2, k1));
    const auto k3 = f(axpy(s, h / 2, k2));
    const auto k4 = f(axpy(s, h, k3));
    for (int i = 0; i < 5; ++i) s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return {s[0], s[1], s[2], s[3], s[4]};
}

Outcome IntegratorAccuracy() {
  const VehicleGeometry g;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(-100, 100), phi(-0.1, 0.1), v(0, 50), a(-5, 2.5),
      delta(-0.1, 0.1), eta(-5, 5);
  double worst = 0.0;
  int within = 0;
  for (int k = 0; k < 100; ++k) {
    const EvState x{pos(rng), pos(rng), phi(rng), v(rng), a(rng)};
    const EvControl u{delta(rng), eta(rng)};
    const EvState rk = EvStepRk4(x, u, g, 0.25);
    const EvState fine = FineRk4(x, u, g, 0.25, 1000);
    const double err = (rk.AsVector() - fine.AsVector()).lpNorm<Eigen::Infinity>();
    worst = std::max(worst, err);
    within += err <= 1e-6;
  }
  return {worst <= 1e-6, Fmt("worst component error %.3g, %d/100 instances within 1e-6", worst,
                             within)};
}

Outcome ConvergenceCriterion() {
  const ScenarioConfig c = LoadConfig(MERGEPLAN_CONFIG_DIR "/table1_table2.cfg");
  const std::vector<int> sizes{4, 16, 64, 256, 1024};
  const std::vector<ConvergenceRow> rows = ConvergenceStudy(c, sizes, 20, 2000);
  bool all_success = true;
  std::string detail;
  for (const ConvergenceRow& r : rows) {
    all_success = all_success && r.summary.success_rate == 1.0;
    detail += Fmt("\n    |I_0| %4d success %.2f d_sv0 %s d_sv1 %s max|a| %s", r.size,
                  r.summary.success_rate, MeanStdText(r.summary.min_d_sv0).c_str(),
                  MeanStdText(r.summary.min_d_sv1).c_str(),
                  MeanStdText(r.summary.max_abs_accel).c_str());
  }
  const double first = rows.front().summary.min_d_sv0.std;
  const double last = rows.back().summary.min_d_sv0.std;
  return {all_success && last <= first,
          Fmt("std d_sv0 %.4f at |I_0| 4, %.4f at |I_0| 1024", first, last) + detail};
}

Outcome PlanningTime() {
  ScenarioConfig c = LoadConfig(MERGEPLAN_CONFIG_DIR "/table1_table2.cfg");
  c.record_timing = true;
  c.max_steps = 40;
  std::vector<double> times;
  for (int e = 0; e < 20; ++e) {
    Episode ep(c, PlannerKind::kProposed, 3000 + e);
    while (!ep.done()) times.push_back(ep.Step().solve_time);
  }
  const MeanStd m = ComputeMeanStd(times);
  return {m.mean <= 0.5, Fmt("per-step planning time %.4f ± %.4f s over %zu steps "
                             "(20 episodes, up to 40 steps)",
                             m.mean, m.std, times.size())};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Determinism() {
  const ScenarioConfig c = LoadConfig(MERGEPLAN_CONFIG_DIR "/sudden_accel_sv0.cfg");
  CommandOptions run;
  run.planners = {PlannerKind::kProposed, PlannerKind::kRmpc, PlannerKind::kDmpc};
  run.emit_csv = run.emit_json = run.emit_svg = true;
  run.snapshot_times = {0.0, 2.5, 5.0};
  run.seed = 7;
  CommandOptions mc = run;
  mc.snapshot_times.clear();
  mc.episodes = 6;

  const fs::path root = fs::temp_directory_path() / "mergeplan_acceptance";
  fs::remove_all(root);
  int files = 0, differing = 0;
  for (const auto& [name, cmd, opts] :
       {std::tuple{"run", &CmdRun, run}, {"monte_carlo", &CmdMonteCarlo, mc}}) {
    for (int pass = 0; pass < 2; ++pass) {
      WriteArtifacts((root / name / std::to_string(pass)).string(), cmd(c, opts).artifacts);
    }
    for (const auto& entry : fs::directory_iterator(root / name / "0")) {
      const fs::path other = root / name / "1" / entry.path().filename();
      ++files;
      differing += !fs::exists(other) || Slurp(entry.path()) != Slurp(other);
    }
  }
  fs::remove_all(root);
  return {files > 0 && differing == 0,
          Fmt("%d/%d files differ across two invocations", differing, files)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mergeplan acceptance suite"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"planner comparison", PlannerComparison},
      {"estimator soundness", EstimatorSoundness},
      {"dual distance equivalence", DualDistanceEquivalence},
      {"velocity QP oracle", VelocityQpOracle},
      {"MPC feasibility", MpcFeasibility},
      {"integrator accuracy", IntegratorAccuracy},
      {"convergence study", ConvergenceCriterion},
      {"planning time envelope", PlanningTime},
      {"determinism", Determinism},
  };
  std::set<int> failed;
  std::set<int> ran;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    ran.insert(id);
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) failed.insert(id);
    std::printf("criterion %d %s  %s (%.1f s): %s\n", id, o.pass ? "PASS" : "FAIL",
                criteria[i].first, secs, o.detail.c_str());
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expect_fail) {
    if (ran.count(id)) expected.insert(id);
  }
  for (int id : failed) {
    if (!expected.count(id)) std::printf("unexpected failure: criterion %d\n", id);
  }
  for (int id : expected) {
    if (!failed.count(id)) std::printf("expected failure did not occur: criterion %d\n", id);
  }
  return failed == expected ? 0 : 1;
}
