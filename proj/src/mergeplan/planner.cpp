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

#include "mergeplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "mergeplan/error.hpp"
#include "mergeplan/qp.hpp"

namespace mergeplan {

void SqpSettings::Validate() const {
  if (max_iterations < 1) throw InvalidArgument("sqp: max_iterations must be >= 1");
  if (!(kkt_tolerance > 0)) throw InvalidArgument("sqp: kkt_tolerance must be positive");
  if (!(merit_penalty > 0)) throw InvalidArgument("sqp: merit_penalty must be positive");
  if (!(backtracking > 0 && backtracking < 1)) {
    throw InvalidArgument("sqp: backtracking must lie in (0, 1)");
  }
  if (!(slack_penalty > 0)) throw InvalidArgument("sqp: slack_penalty must be positive");
}

void PlannerParams::Validate() const {
  if (n_p < 1) throw InvalidArgument("planner: n_p must be >= 1");
  if (!(T > 0)) throw InvalidArgument("planner: T must be positive");
  if (q1 < 0 || q2 < 0 || q3.minCoeff() < 0) {
    throw InvalidArgument("planner: weights must be nonnegative");
  }
  for (int k = 0; k < 3; ++k) {
    if (!(u_lower[k] < u_upper[k])) {
      throw InvalidArgument("planner: u_lower must be below u_upper");
    }
  }
  if (!(d_min >= 0)) throw InvalidArgument("planner: d_min must be nonnegative");
  if (!(w_lane > 0)) throw InvalidArgument("planner: w_lane must be positive");
  geometry.Validate();
  sqp.Validate();
}

ObstacleStep InflateObstacle(const Polytope2& occ, const VehicleGeometry& geom) {
  const Polytope2 footprint = Polytope2::FromBox(
      Vec2::Zero(), Vec2(0.5 * geom.l_veh, 0.5 * geom.w_veh));
  return {MinkowskiSum(occ, footprint).Halfspaces()};
}

DualDistanceResult DualDistanceWithMultiplier(const Eigen::Vector2d& p,
                                              const ObstacleStep& obs) {
  const HalfspaceRep& H = obs.hrep;
  const int m = static_cast<int>(H.size());
  DualDistanceResult best;
  best.lambda = Eigen::VectorXd::Zero(m);
  std::vector<double> g(m);
  for (int j = 0; j < m; ++j) g[j] = H.normals[j].dot(p) - H.offsets[j];

  for (int j = 0; j < m; ++j) {
    if (g[j] > best.value) {
      best.value = g[j];
      best.lambda.setZero();
      best.lambda[j] = 1.0;
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      Eigen::Matrix2d N;
      N.row(0) = H.normals[j].transpose();
      N.row(1) = H.normals[k].transpose();
      const double det = N.determinant();
      if (std::abs(det) < 1e-12) continue;
      const Eigen::Vector2d y = N.inverse() * Eigen::Vector2d(g[j], g[k]);
      const double value = y.norm();
      if (value <= best.value || value == 0.0) continue;
      const Eigen::Vector2d lam = N.transpose().inverse() * (y / value);
      if (lam.minCoeff() < -1e-12) continue;
      best.value = value;
      best.lambda.setZero();
      best.lambda[j] = std::max(0.0, lam[0]);
      best.lambda[k] = std::max(0.0, lam[1]);
    }
  }
  return best;
}

double DualDistance(const Eigen::Vector2d& p, const ObstacleStep& obs) {
  return DualDistanceWithMultiplier(p, obs).value;
}

std::string_view SolverStatusName(SolverStatus s) {
  switch (s) {
    case SolverStatus::kOptimal: return "optimal";
    case SolverStatus::kMaxIter: return "max_iter";
    case SolverStatus::kInfeasibleRelaxed: return "infeasible_relaxed";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kProximal = 1e-6;
constexpr double kMinDualNorm = 0.5;
constexpr double kSlackOptimal = 1e-6;
constexpr double kSlackRelaxed = 1e-4;

// Variable layout shared by the NLP iterate and the QP step:
// [u (2 n)] [state slacks per step] [lambda_{s,i}; sigma_{s,i}] per (s, i).
struct Layout {
  int n = 0;
  int nu = 0;
  int num_obstacles = 0;
  bool cap_x = false;
  int slacks_per_step = 0;
  std::vector<int> block_sizes;
  std::vector<int> block_offsets;
  int total = 0;

  int state_block(int i) const { return i; }
  int obstacle_block(int s, int i) const { return n + s * n + i; }
  int lambda_size(int s, int i) const { return block_sizes[obstacle_block(s, i)] - 1; }
  int offset(int b) const { return block_offsets[b]; }
};

Layout MakeLayout(const ObstacleSet& obstacles, const Reference& ref,
                  const PlannerParams& p) {
  Layout L;
  L.n = p.n_p;
  L.nu = 2 * p.n_p;
  L.num_obstacles = static_cast<int>(obstacles.size());
  L.cap_x = ref.maneuver == Maneuver::kVT1;
  L.slacks_per_step = L.cap_x ? 4 : 3;
  for (int i = 0; i < L.n; ++i) L.block_sizes.push_back(L.slacks_per_step);
  for (int s = 0; s < L.num_obstacles; ++s) {
    for (int i = 0; i < L.n; ++i) {
      L.block_sizes.push_back(static_cast<int>(obstacles[s][i].hrep.size()) + 1);
    }
  }
  int off = L.nu;
  for (int sz : L.block_sizes) {
    L.block_offsets.push_back(off);
    off += sz;
  }
  L.total = off;
  return L;
}

enum class RowKind { kGeneral, kLambdaLower };

// One NLP inequality c(w) <= 0 and, when requested, its gradient split into
// the head (controls) part and the part local to one block.
struct Row {
  double value = 0.0;
  Eigen::VectorXd head;  // empty when the row does not depend on u
  int block = -1;
  Eigen::VectorXd bcoef;
  int slack = -1;  // global index of the elastic slack in this row, if any
  RowKind kind = RowKind::kGeneral;
  int lambda_index = -1;  // global index, for kLambdaLower
};

struct Evaluation {
  std::vector<EvState> states;
  std::vector<Eigen::Matrix<double, 5, Eigen::Dynamic>> sens;  // d x_{i+1} / d u
  double tracking = 0.0;  // objective without slack penalty
  double f = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess_u;
  std::vector<Row> rows;
};

class MpcProblem {
 public:
  MpcProblem(const EvState& x0, const Reference& ref, const ObstacleSet& obstacles,
             const PlannerParams& params)
      : x0_(x0), ref_(ref), obstacles_(obstacles), p_(params),
        L_(MakeLayout(obstacles, ref, params)) {}

  const Layout& layout() const { return L_; }

  std::vector<EvState> Rollout(const Eigen::VectorXd& w) const {
    std::vector<EvState> xs;
    xs.reserve(L_.n);
    EvState x = x0_;
    for (int i = 0; i < L_.n; ++i) {
      x = EvStepRk4(x, {w[2 * i], w[2 * i + 1]}, p_.geometry, p_.T);
      xs.push_back(x);
    }
    return xs;
  }

  Evaluation Evaluate(const Eigen::VectorXd& w, bool derivatives) const {
    Evaluation e;
    const int n = L_.n, nu = L_.nu;
    e.states.reserve(n);
    if (derivatives) e.sens.reserve(n);
    EvState x = x0_;
    Eigen::Matrix<double, 5, Eigen::Dynamic> S = Eigen::MatrixXd::Zero(5, nu);
    for (int i = 0; i < n; ++i) {
      const EvControl u{w[2 * i], w[2 * i + 1]};
      if (derivatives) {
        EvJacobianX A;
        EvJacobianU B;
        x = EvStepRk4(x, u, p_.geometry, p_.T, &A, &B);
        S = A * S;
        S.middleCols(2 * i, 2) += B;
        e.sens.push_back(S);
      } else {
        x = EvStepRk4(x, u, p_.geometry, p_.T);
      }
      e.states.push_back(x);
    }

    // Objective.
    const EvState& xn = e.states.back();
    const double ry = xn.p_y - ref_.p_y_ref;
    const double rv = xn.v - ref_.v_x_ref;
    double tracking = p_.q3[0] * ry * ry + p_.q3[1] * rv * rv;
    for (int i = 0; i < n; ++i) {
      tracking += p_.q1 * w[2 * i] * w[2 * i] + p_.q2 * w[2 * i + 1] * w[2 * i + 1];
    }
    double slack_sum = 0.0;
    ForEachSlack([&](int idx) { slack_sum += w[idx]; });
    e.tracking = tracking;
    e.f = tracking + p_.sqp.slack_penalty * slack_sum;

    if (derivatives) {
      e.grad = Eigen::VectorXd::Zero(L_.total);
      e.hess_u = Eigen::MatrixXd::Zero(nu, nu);
      for (int i = 0; i < n; ++i) {
        e.grad[2 * i] = 2.0 * p_.q1 * w[2 * i];
        e.grad[2 * i + 1] = 2.0 * p_.q2 * w[2 * i + 1];
        e.hess_u(2 * i, 2 * i) = 2.0 * p_.q1;
        e.hess_u(2 * i + 1, 2 * i + 1) = 2.0 * p_.q2;
      }
      const Eigen::VectorXd sy = e.sens.back().row(1).transpose();
      const Eigen::VectorXd sv = e.sens.back().row(3).transpose();
      e.grad.head(nu) += 2.0 * p_.q3[0] * ry * sy + 2.0 * p_.q3[1] * rv * sv;
      e.hess_u.noalias() += 2.0 * p_.q3[0] * sy * sy.transpose();
      e.hess_u.noalias() += 2.0 * p_.q3[1] * sv * sv.transpose();
      ForEachSlack([&](int idx) { e.grad[idx] = p_.sqp.slack_penalty; });
    }

    BuildRows(w, e, derivatives);
    return e;
  }

  // Minimal slack values making every elastic row satisfied at w.
  void ResetSlacks(Eigen::VectorXd& w, bool only_decrease) const {
    Eigen::VectorXd probe = w;
    ForEachSlack([&](int idx) { probe[idx] = 0.0; });
    const Evaluation e = Evaluate(probe, false);
    Eigen::VectorXd need = Eigen::VectorXd::Zero(L_.total);
    for (const Row& r : e.rows) {
      if (r.slack >= 0) need[r.slack] = std::max(need[r.slack], r.value);
    }
    ForEachSlack([&](int idx) {
      w[idx] = only_decrease ? std::min(w[idx], need[idx]) : need[idx];
    });
  }

  double MaxSlack(const Eigen::VectorXd& w) const {
    double m = 0.0;
    ForEachSlack([&](int idx) { m = std::max(m, w[idx]); });
    return m;
  }

  template <typename F>
  void ForEachSlack(F&& f) const {
    for (int i = 0; i < L_.n; ++i) {
      const int off = L_.offset(L_.state_block(i));
      for (int k = 0; k < L_.slacks_per_step; ++k) f(off + k);
    }
    for (int s = 0; s < L_.num_obstacles; ++s) {
      for (int i = 0; i < L_.n; ++i) {
        const int b = L_.obstacle_block(s, i);
        f(L_.offset(b) + L_.block_sizes[b] - 1);
      }
    }
  }

 private:
  void BuildRows(const Eigen::VectorXd& w, Evaluation& e, bool deriv) const {
    const int n = L_.n, nu = L_.nu;
    e.rows.reserve(static_cast<std::size_t>(n) * (16 + 12 * L_.num_obstacles));
    const double y_lo = 0.5 * p_.geometry.w_veh;
    const double y_hi = 2.0 * p_.w_lane - 0.5 * p_.geometry.w_veh;
    const double x_cap = p_.p_x_ter - 0.5 * p_.geometry.l_veh;

    for (int i = 0; i < n; ++i) {
      const EvState& x = e.states[i];
      const int b = L_.state_block(i);
      const int off = L_.offset(b);
      // (state component, sign, bound, slack slot)
      struct Soft { int comp; double sign; double bound; int slot; };
      const Soft softs[] = {
          {3, +1.0, p_.u_upper[0], 0}, {3, -1.0, p_.u_lower[0], 0},
          {4, +1.0, p_.u_upper[1], 1}, {4, -1.0, p_.u_lower[1], 1},
          {1, +1.0, y_hi, 2},          {1, -1.0, y_lo, 2},
      };
      const EvState::Vector xv = x.AsVector();
      auto add_soft = [&](int comp, double sign, double bound, int slot) {
        Row r;
        r.value = sign * (xv[comp] - bound) - w[off + slot];
        r.block = b;
        r.slack = off + slot;
        if (deriv) {
          r.head = sign * e.sens[i].row(comp).transpose();
          r.bcoef = Eigen::VectorXd::Zero(L_.slacks_per_step);
          r.bcoef[slot] = -1.0;
        }
        e.rows.push_back(std::move(r));
      };
      for (const Soft& s : softs) add_soft(s.comp, s.sign, s.bound, s.slot);
      if (L_.cap_x) add_soft(0, +1.0, x_cap, 3);
      for (int k = 0; k < L_.slacks_per_step; ++k) {
        Row r;
        r.value = -w[off + k];
        r.block = b;
        if (deriv) {
          r.bcoef = Eigen::VectorXd::Zero(L_.slacks_per_step);
          r.bcoef[k] = -1.0;
        }
        e.rows.push_back(std::move(r));
      }
    }

    for (int i = 0; i < n; ++i) {
      for (double sign : {+1.0, -1.0}) {
        Row r;
        const double bound = sign > 0 ? p_.u_upper[2] : p_.u_lower[2];
        r.value = sign * (w[2 * i] - bound);
        if (deriv) {
          r.head = Eigen::VectorXd::Zero(nu);
          r.head[2 * i] = sign;
        }
        e.rows.push_back(std::move(r));
      }
    }

    for (int s = 0; s < L_.num_obstacles; ++s) {
      for (int i = 0; i < n; ++i) {
        const HalfspaceRep& H = obstacles_[s][i].hrep;
        const int m = static_cast<int>(H.size());
        const int b = L_.obstacle_block(s, i);
        const int off = L_.offset(b);
        const Eigen::VectorXd lam = w.segment(off, m);
        const double sigma = w[off + m];
        const Eigen::Vector2d p(e.states[i].p_x, e.states[i].p_y);
        Eigen::VectorXd gap(m);
        Eigen::Vector2d ht_lam = Eigen::Vector2d::Zero();
        for (int j = 0; j < m; ++j) {
          gap[j] = H.normals[j].dot(p) - H.offsets[j];
          ht_lam += lam[j] * H.normals[j];
        }

        Row col;
        col.value = p_.d_min - sigma - gap.dot(lam);
        col.block = b;
        col.slack = off + m;
        if (deriv) {
          col.head = -(ht_lam[0] * e.sens[i].row(0) + ht_lam[1] * e.sens[i].row(1)).transpose();
          col.bcoef.resize(m + 1);
          col.bcoef.head(m) = -gap;
          col.bcoef[m] = -1.0;
        }
        e.rows.push_back(std::move(col));

        Row norm;
        norm.value = ht_lam.squaredNorm() - 1.0;
        norm.block = b;
        if (deriv) {
          norm.bcoef = Eigen::VectorXd::Zero(m + 1);
          for (int j = 0; j < m; ++j) norm.bcoef[j] = 2.0 * H.normals[j].dot(ht_lam);
        }
        e.rows.push_back(std::move(norm));

        // Lower norm bound. Scaling lambda up leaves the feasible set unchanged
        // for d_min > 0, and lambda = 0 stops being a stationary point inside
        // the obstacle.
        Row norm_lo;
        norm_lo.value = kMinDualNorm - ht_lam.squaredNorm();
        norm_lo.block = b;
        if (deriv) {
          norm_lo.bcoef = Eigen::VectorXd::Zero(m + 1);
          for (int j = 0; j < m; ++j) norm_lo.bcoef[j] = -2.0 * H.normals[j].dot(ht_lam);
        }
        e.rows.push_back(std::move(norm_lo));

        for (int j = 0; j <= m; ++j) {
          Row r;
          r.value = -w[off + j];
          r.block = b;
          if (j < m) {
            r.kind = RowKind::kLambdaLower;
            r.lambda_index = off + j;
          }
          if (deriv) {
            r.bcoef = Eigen::VectorXd::Zero(m + 1);
            r.bcoef[j] = -1.0;
          }
          e.rows.push_back(std::move(r));
        }
      }
    }
  }

  EvState x0_;
  Reference ref_;
  const ObstacleSet& obstacles_;
  const PlannerParams& p_;
  Layout L_;
};

double Violation(const std::vector<Row>& rows) {
  double v = 0.0;
  for (const Row& r : rows) v += std::max(0.0, r.value);
  return v;
}

double MaxViolation(const std::vector<Row>& rows) {
  double v = 0.0;
  for (const Row& r : rows) v = std::max(v, r.value);
  return v;
}

void ValidateInputs(const EvState& x0, const ObstacleSet& obstacles,
                    const PlannerParams& params) {
  params.Validate();
  if (!x0.AsVector().allFinite()) throw InvalidArgument("solve_mpc: x0 must be finite");
  for (const auto& seq : obstacles) {
    if (seq.size() < static_cast<std::size_t>(params.n_p)) {
      throw InvalidArgument("solve_mpc: obstacle sequence shorter than n_p");
    }
    for (int i = 0; i < params.n_p; ++i) {
      if (seq[i].hrep.size() < 3) {
        throw InvalidArgument("solve_mpc: obstacle must be a bounded polytope");
      }
    }
  }
}

Eigen::VectorXd InitialIterate(const MpcProblem& prob, const EvState& x0,
                               const ObstacleSet& obstacles,
                               const PlannerParams& params,
                               const MpcSolution* guess) {
  const Layout& L = prob.layout();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(L.total);
  const bool use_controls =
      guess != nullptr && guess->controls.size() == static_cast<std::size_t>(L.n);
  if (use_controls) {
    for (int i = 0; i < L.n; ++i) {
      w[2 * i] = std::clamp(guess->controls[i].delta, params.u_lower[2], params.u_upper[2]);
      w[2 * i + 1] = guess->controls[i].eta;
    }
  }
  const std::vector<EvState> xs = prob.Rollout(w);
  (void)x0;
  for (int s = 0; s < L.num_obstacles; ++s) {
    for (int i = 0; i < L.n; ++i) {
      const int m = L.lambda_size(s, i);
      const int off = L.offset(L.obstacle_block(s, i));
      const bool have = guess != nullptr &&
                        guess->duals.size() == static_cast<std::size_t>(L.num_obstacles) &&
                        guess->duals[s].size() == static_cast<std::size_t>(L.n) &&
                        guess->duals[s][i].size() == m;
      if (have) {
        w.segment(off, m) = guess->duals[s][i].cwiseMax(0.0);
        continue;
      }
      const ObstacleStep& obs = obstacles[s][i];
      const Eigen::Vector2d p(xs[i].p_x, xs[i].p_y);
      DualDistanceResult d = DualDistanceWithMultiplier(p, obs);
      if (d.value <= 0.0) {
        // Inside: pick the least-violated face.
        int best = 0;
        double g_best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
          const double g = obs.hrep.normals[j].dot(p) - obs.hrep.offsets[j];
          if (g > g_best) {
            g_best = g;
            best = j;
          }
        }
        d.lambda = Eigen::VectorXd::Zero(m);
        d.lambda[best] = 1.0;
      }
      w.segment(off, m) = d.lambda;
    }
  }
  prob.ResetSlacks(w, false);
  return w;
}

struct QpStep {
  bool ok = false;
  Eigen::VectorXd d;
  Eigen::VectorXd mu;          // multipliers of the NLP rows (trust rows dropped)
  double max_mu = 0.0;
};

QpStep SolveSubproblem(const MpcProblem& prob, const Evaluation& e,
                       const Eigen::VectorXd& w) {
  const Layout& L = prob.layout();
  StructuredQp qp(L.nu, L.block_sizes);
  qp.head_hessian() = e.hess_u;
  qp.head_gradient() = e.grad.head(L.nu);
  for (int b = 0; b < static_cast<int>(L.block_sizes.size()); ++b) {
    qp.block_hessian(b) =
        kProximal * Eigen::MatrixXd::Identity(L.block_sizes[b], L.block_sizes[b]);
    qp.block_gradient(b) = e.grad.segment(L.offset(b), L.block_sizes[b]);
  }

  std::vector<int> nlp_row_of(e.rows.size(), -1);
  std::vector<int> qp_row_of(e.rows.size(), -1);
  const Eigen::VectorXd empty;
  for (std::size_t k = 0; k < e.rows.size(); ++k) {
    const Row& r = e.rows[k];
    double rhs = -r.value;
    bool trust = false;
    if (r.kind == RowKind::kLambdaLower) {
      // -d <= min(lambda, trust radius): lambda >= 0 merged with the step bound.
      const int b = r.block;
      const int m = L.block_sizes[b] - 1;
      const double radius =
          std::max(1.0, w.segment(L.offset(b), m).lpNorm<Eigen::Infinity>());
      if (w[r.lambda_index] > radius) {
        rhs = radius;
        trust = true;
      }
    }
    const int q = qp.AddRow(r.head.size() ? r.head : empty, r.block,
                            r.block >= 0 ? r.bcoef : empty, rhs);
    if (!trust) qp_row_of[k] = q;
  }
  // Upper trust bounds on lambda steps.
  for (int s = 0; s < L.num_obstacles; ++s) {
    for (int i = 0; i < L.n; ++i) {
      const int b = L.obstacle_block(s, i);
      const int m = L.block_sizes[b] - 1;
      const double radius =
          std::max(1.0, w.segment(L.offset(b), m).lpNorm<Eigen::Infinity>());
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 1);
        c[j] = 1.0;
        qp.AddBlockRow(b, c, radius);
      }
    }
  }

  const QpResult res = SolveStructuredQp(qp);
  QpStep step;
  if (res.status == QpStatus::kNumericalError || !res.x.allFinite()) return step;
  step.ok = true;
  step.d = res.x;
  step.mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.rows.size()));
  for (std::size_t k = 0; k < e.rows.size(); ++k) {
    if (qp_row_of[k] >= 0) step.mu[k] = res.z[qp_row_of[k]];
  }
  step.max_mu = step.mu.size() ? step.mu.lpNorm<Eigen::Infinity>() : 0.0;
  return step;
}

struct KktMeasure {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double value() const { return std::max({stationarity, feasibility, complementarity}); }
};

KktMeasure MeasureKkt(const MpcProblem& prob, const Evaluation& e,
                      const Eigen::VectorXd& mu, double slack_penalty) {
  const Layout& L = prob.layout();
  Eigen::VectorXd r = e.grad;
  double comp = 0.0;
  for (std::size_t k = 0; k < e.rows.size(); ++k) {
    const Row& row = e.rows[k];
    const double m = mu[k];
    if (m == 0.0) continue;
    if (row.head.size()) r.head(L.nu) += m * row.head;
    if (row.block >= 0) r.segment(L.offset(row.block), row.bcoef.size()) += m * row.bcoef;
    comp = std::max(comp, std::abs(m * row.value));
  }
  KktMeasure k;
  const double scale_u = 1.0 + e.grad.head(L.nu).lpNorm<Eigen::Infinity>();
  double stat = r.head(L.nu).lpNorm<Eigen::Infinity>() / scale_u;
  Eigen::VectorXd is_slack = Eigen::VectorXd::Zero(L.total);
  prob.ForEachSlack([&](int idx) { is_slack[idx] = 1.0; });
  for (int idx = L.nu; idx < L.total; ++idx) {
    const double v = std::abs(r[idx]) / (is_slack[idx] > 0 ? slack_penalty : scale_u);
    stat = std::max(stat, v);
  }
  k.stationarity = stat;
  k.feasibility = std::max(0.0, MaxViolation(e.rows));
  k.complementarity = comp / (1.0 + mu.lpNorm<Eigen::Infinity>());
  return k;
}

}  // namespace

MpcSolution SolveMpc(const EvState& x0, const Reference& ref,
                     const ObstacleSet& obstacles, const PlannerParams& params,
                     const MpcSolution* initial_guess) {
  const auto start = Clock::now();
  ValidateInputs(x0, obstacles, params);
  const MpcProblem prob(x0, ref, obstacles, params);
  const Layout& L = prob.layout();
  const SqpSettings& st = params.sqp;

  Eigen::VectorXd w = InitialIterate(prob, x0, obstacles, params, initial_guess);
  double nu = st.merit_penalty;
  bool converged = false;
  MpcSolution sol;
  KktMeasure kkt;

  Evaluation e = prob.Evaluate(w, true);
  for (int it = 1; it <= st.max_iterations; ++it) {
    sol.iterations = it;
    const QpStep step = SolveSubproblem(prob, e, w);
    if (!step.ok) break;
    kkt = MeasureKkt(prob, e, step.mu, st.slack_penalty);
    if (kkt.value() <= st.kkt_tolerance) {
      converged = true;
      break;
    }

    nu = std::max(nu, 1.5 * step.max_mu + 1.0);
    const double merit0 = e.f + nu * Violation(e.rows);
    const double slope = e.grad.dot(step.d) - nu * Violation(e.rows);
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    Evaluation et;
    while (alpha >= 1e-10) {
      trial = w + alpha * step.d;
      prob.ResetSlacks(trial, true);
      et = prob.Evaluate(trial, false);
      const double merit1 = et.f + nu * Violation(et.rows);
      if (merit1 <= merit0 + 1e-4 * alpha * std::min(slope, 0.0)) {
        sol.merit_history.emplace_back(merit0, merit1);
        accepted = true;
        break;
      }
      alpha *= st.backtracking;
    }
    if (!accepted) break;
    w = trial;
    e = prob.Evaluate(w, true);
  }

  sol.kkt_residual = kkt.value();
  sol.max_slack = prob.MaxSlack(w);
  const std::vector<EvState> xs = prob.Rollout(w);
  sol.states = xs;
  sol.controls.reserve(L.n);
  for (int i = 0; i < L.n; ++i) sol.controls.push_back({w[2 * i], w[2 * i + 1]});
  sol.duals.assign(L.num_obstacles, {});
  for (int s = 0; s < L.num_obstacles; ++s) {
    for (int i = 0; i < L.n; ++i) {
      const int m = L.lambda_size(s, i);
      sol.duals[s].push_back(w.segment(L.offset(L.obstacle_block(s, i)), m).cwiseMax(0.0));
    }
  }
  sol.objective = e.tracking;
  if (sol.max_slack > kSlackRelaxed) {
    sol.status = SolverStatus::kInfeasibleRelaxed;
  } else if (converged && sol.max_slack <= kSlackOptimal) {
    sol.status = SolverStatus::kOptimal;
  } else {
    sol.status = SolverStatus::kMaxIter;
  }
  sol.solve_time = std::chrono::duration<double>(Clock::now() - start).count();
  return sol;
}

double VerificationReport::worst() const {
  return std::max({dynamics, speed, accel, steering, drivable_area, collision, duals});
}

VerificationReport VerifySolution(const MpcSolution& sol, const EvState& x0,
                                  const Reference& ref,
                                  const ObstacleSet& obstacles,
                                  const PlannerParams& params) {
  if (params.n_p < 1 || sol.controls.empty()) {
    throw InvalidArgument("verify_solution: empty horizon");
  }
  const std::size_t n = sol.controls.size();
  if (sol.states.size() != n) {
    throw InvalidArgument("verify_solution: state/control length mismatch");
  }
  VerificationReport rep;
  const double y_lo = 0.5 * params.geometry.w_veh;
  const double y_hi = 2.0 * params.w_lane - 0.5 * params.geometry.w_veh;
  const double x_cap = params.p_x_ter - 0.5 * params.geometry.l_veh;
  EvState x = x0;
  for (std::size_t i = 0; i < n; ++i) {
    const EvControl& u = sol.controls[i];
    x = EvStepRk4(x, u, params.geometry, params.T);
    rep.dynamics = std::max(
        rep.dynamics, (x.AsVector() - sol.states[i].AsVector()).lpNorm<Eigen::Infinity>());
    rep.speed = std::max({rep.speed, x.v - params.u_upper[0], params.u_lower[0] - x.v});
    rep.accel = std::max({rep.accel, x.a - params.u_upper[1], params.u_lower[1] - x.a});
    rep.steering =
        std::max({rep.steering, u.delta - params.u_upper[2], params.u_lower[2] - u.delta});
    rep.drivable_area = std::max({rep.drivable_area, x.p_y - y_hi, y_lo - x.p_y});
    if (ref.maneuver == Maneuver::kVT1) {
      rep.drivable_area = std::max(rep.drivable_area, x.p_x - x_cap);
    }
    for (std::size_t s = 0; s < obstacles.size(); ++s) {
      if (i >= obstacles[s].size()) {
        throw InvalidArgument("verify_solution: obstacle sequence too short");
      }
      const double d = DualDistance(Eigen::Vector2d(x.p_x, x.p_y), obstacles[s][i]);
      rep.collision = std::max(rep.collision, params.d_min - d);
    }
  }
  for (std::size_t s = 0; s < sol.duals.size(); ++s) {
    for (std::size_t i = 0; i < sol.duals[s].size(); ++i) {
      const Eigen::VectorXd& lam = sol.duals[s][i];
      if (lam.size() == 0) continue;
      rep.duals = std::max(rep.duals, -lam.minCoeff());
      if (s < obstacles.size() && i < obstacles[s].size() &&
          obstacles[s][i].hrep.size() == static_cast<std::size_t>(lam.size())) {
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        for (Eigen::Index j = 0; j < lam.size(); ++j) v += lam[j] * obstacles[s][i].hrep.normals[j];
        rep.duals = std::max(rep.duals, v.norm() - 1.0);
      }
    }
  }
  return rep;
}

MpcSolution ShiftSolution(const MpcSolution& sol, const EvState& x0,
                          const PlannerParams& params) {
  MpcSolution out;
  const std::size_t n = sol.controls.size();
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) out.controls.push_back(sol.controls[std::min(i + 1, n - 1)]);
  out.duals.resize(sol.duals.size());
  for (std::size_t s = 0; s < sol.duals.size(); ++s) {
    const auto& d = sol.duals[s];
    for (std::size_t i = 0; i < d.size(); ++i) out.duals[s].push_back(d[std::min(i + 1, d.size() - 1)]);
  }
  EvState x = x0;
  for (const EvControl& u : out.controls) {
    x = EvStepRk4(x, u, params.geometry, params.T);
    out.states.push_back(x);
  }
  return out;
}

MpcPlanner::MpcPlanner(PlannerParams params) : params_(std::move(params)) {
  params_.Validate();
}

MpcSolution MpcPlanner::Plan(const EvState& x0, const Reference& ref,
                             const ObstacleSet& obstacles) {
  std::optional<MpcSolution> guess;
  if (params_.sqp.warm_start && last_) guess = ShiftSolution(*last_, x0, params_);
  MpcSolution sol = SolveMpc(x0, ref, obstacles, params_, guess ? &*guess : nullptr);
  last_ = sol;
  return sol;
}

EvControl FallbackControl(const EvState& x, const PlannerParams& params) {
  // With a linear in time over the step, v_1 = v + T (a + a_target) / 2.
  double target = std::max(params.u_lower[1], -2.0 * x.v / params.T - x.a);
  target = std::min(target, params.u_upper[1]);
  return {0.0, (target - x.a) / params.T};
}

std::string_view PlannerKindName(PlannerKind k) {
  switch (k) {
    case PlannerKind::kProposed: return "proposed";
    case PlannerKind::kRmpc: return "rmpc";
    case PlannerKind::kDmpc: return "dmpc";
  }
  return "?";
}

std::optional<PlannerKind> ParsePlannerKind(std::string_view name) {
  if (name == "proposed") return PlannerKind::kProposed;
  if (name == "rmpc") return PlannerKind::kRmpc;
  if (name == "dmpc") return PlannerKind::kDmpc;
  return std::nullopt;
}

AccelBounds PlannerInputSet(PlannerKind kind, const AccelBounds& estimated,
                            const AccelBounds& worst_case) {
  switch (kind) {
    case PlannerKind::kProposed: return estimated;
    case PlannerKind::kRmpc: return worst_case;
    case PlannerKind::kDmpc: return {0.0, 0.0};
  }
  return estimated;
}

std::vector<OccupancyPrediction> OccupancyForPlanner(
    PlannerKind kind, const std::vector<SvState>& svs,
    const std::vector<AccelBounds>& estimated, const AccelBounds& worst_case,
    int n, double v_adm, double T, const VehicleGeometry& geom,
    const std::vector<double>& lateral_centers) {
  if (estimated.size() != svs.size() || lateral_centers.size() != svs.size()) {
    throw InvalidArgument("occupancy_for_planner: per-SV inputs differ in length");
  }
  std::vector<OccupancyPrediction> out;
  out.reserve(svs.size());
  for (std::size_t s = 0; s < svs.size(); ++s) {
    out.push_back(PredictForwardOccupancy(svs[s], PlannerInputSet(kind, estimated[s], worst_case),
                                          n, v_adm, T, geom, lateral_centers[s]));
  }
  return out;
}

}  // namespace mergeplan
