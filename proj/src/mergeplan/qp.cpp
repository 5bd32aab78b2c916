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

#include "mergeplan/qp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "mergeplan/error.hpp"

namespace mergeplan {

StructuredQp::StructuredQp(int head_size, const std::vector<int>& block_sizes)
    : head_size_(head_size), block_size_(block_sizes) {
  if (head_size < 0) throw InvalidArgument("qp: negative head size");
  num_variables_ = head_size;
  block_offset_.reserve(block_sizes.size());
  for (int s : block_sizes) {
    if (s < 1) throw InvalidArgument("qp: block sizes must be positive");
    block_offset_.push_back(num_variables_);
    num_variables_ += s;
    block_hessian_.push_back(Eigen::MatrixXd::Zero(s, s));
    block_gradient_.push_back(Eigen::VectorXd::Zero(s));
  }
  head_hessian_ = Eigen::MatrixXd::Zero(head_size, head_size);
  head_gradient_ = Eigen::VectorXd::Zero(head_size);
  rows_of_block_.resize(block_sizes.size());
}

int StructuredQp::AddRow(const Eigen::VectorXd& head_coef, int block,
                         const Eigen::VectorXd& block_coef, double rhs) {
  const bool head = head_coef.size() > 0;
  if (head && head_coef.size() != head_size_) {
    throw InvalidArgument("qp: head coefficient size mismatch");
  }
  if (block >= num_blocks()) throw InvalidArgument("qp: block index out of range");
  if (block >= 0 && block_coef.size() != block_size_[block]) {
    throw InvalidArgument("qp: block coefficient size mismatch");
  }
  if (!head && block < 0) throw InvalidArgument("qp: empty row");
  const int r = num_rows();
  head_coef_.push_back(head ? head_coef : Eigen::VectorXd::Zero(head_size_));
  touches_head_.push_back(head);
  row_block_.push_back(block);
  block_coef_.push_back(block >= 0 ? block_coef : Eigen::VectorXd());
  if (block >= 0) rows_of_block_[block].push_back(r);
  rhs_.push_back(rhs);
  return r;
}

int StructuredQp::AddHeadRow(const Eigen::VectorXd& head_coef, double rhs) {
  return AddRow(head_coef, -1, Eigen::VectorXd(), rhs);
}

int StructuredQp::AddBlockRow(int block, const Eigen::VectorXd& block_coef,
                              double rhs) {
  return AddRow(Eigen::VectorXd(), block, block_coef, rhs);
}

Eigen::VectorXd StructuredQp::RowActivity(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(num_rows());
  const auto xh = x.head(head_size_);
  for (int r = 0; r < num_rows(); ++r) {
    double v = touches_head_[r] ? head_coef_[r].dot(xh) : 0.0;
    const int b = row_block_[r];
    if (b >= 0) v += block_coef_[r].dot(x.segment(block_offset_[b], block_size_[b]));
    out[r] = v;
  }
  return out;
}

Eigen::VectorXd StructuredQp::TransposeTimes(const Eigen::VectorXd& z) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_variables_);
  for (int r = 0; r < num_rows(); ++r) {
    if (touches_head_[r]) out.head(head_size_) += z[r] * head_coef_[r];
    const int b = row_block_[r];
    if (b >= 0) out.segment(block_offset_[b], block_size_[b]) += z[r] * block_coef_[r];
  }
  return out;
}

Eigen::VectorXd StructuredQp::HessianTimes(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(num_variables_);
  out.head(head_size_) = head_hessian_ * x.head(head_size_);
  for (int b = 0; b < num_blocks(); ++b) {
    out.segment(block_offset_[b], block_size_[b]) =
        block_hessian_[b] * x.segment(block_offset_[b], block_size_[b]);
  }
  return out;
}

Eigen::VectorXd StructuredQp::Gradient() const {
  Eigen::VectorXd q(num_variables_);
  q.head(head_size_) = head_gradient_;
  for (int b = 0; b < num_blocks(); ++b) {
    q.segment(block_offset_[b], block_size_[b]) = block_gradient_[b];
  }
  return q;
}

Eigen::VectorXd StructuredQp::Rhs() const {
  return Eigen::Map<const Eigen::VectorXd>(rhs_.data(), num_rows());
}

double StructuredQp::Objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(HessianTimes(x)) + Gradient().dot(x);
}

namespace {

// Solves (P + G' W G) dx = rhs by eliminating every block onto the head.
class NormalSolver {
 public:
  explicit NormalSolver(const StructuredQp& qp) : qp_(qp) {}

  // Returns false if the reduced system is numerically singular.
  bool Factor(const Eigen::VectorXd& w, const Eigen::MatrixXd& head_rows,
              const std::vector<const Eigen::VectorXd*>& block_rows,
              const std::vector<bool>& touches_head) {
    const int nh = qp_.head_size();
    const int nb = qp_.num_blocks();
    Eigen::MatrixXd schur = qp_.head_hessian();
    schur.noalias() += head_rows.transpose() * w.asDiagonal() * head_rows;

    block_factor_.assign(nb, {});
    coupling_.assign(nb, {});
    for (int b = 0; b < nb; ++b) {
      const int m = qp_.block_size(b);
      Eigen::MatrixXd mbb = qp_.block_hessian(b);
      Eigen::MatrixXd mhb = Eigen::MatrixXd::Zero(nh, m);
      bool coupled = false;
      for (int r : rows_[b]) {
        const Eigen::VectorXd& g = *block_rows[r];
        mbb.noalias() += w[r] * g * g.transpose();
        if (touches_head[r]) {
          mhb.noalias() += w[r] * head_rows.row(r).transpose() * g.transpose();
          coupled = true;
        }
      }
      block_factor_[b].compute(mbb);
      if (block_factor_[b].info() != Eigen::Success) return false;
      if (coupled) {
        coupling_[b] = mhb;
        schur.noalias() -= mhb * block_factor_[b].solve(Eigen::MatrixXd(mhb.transpose()));
      }
    }
    head_factor_.compute(schur);
    return head_factor_.info() == Eigen::Success;
  }

  void SetBlockRows(std::vector<std::vector<int>> rows) { rows_ = std::move(rows); }

  Eigen::VectorXd Solve(const Eigen::VectorXd& rhs) const {
    const int nh = qp_.head_size();
    Eigen::VectorXd rh = rhs.head(nh);
    std::vector<Eigen::VectorXd> inv_rb(qp_.num_blocks());
    for (int b = 0; b < qp_.num_blocks(); ++b) {
      inv_rb[b] = block_factor_[b].solve(rhs.segment(qp_.block_offset(b), qp_.block_size(b)));
      if (coupling_[b].size() > 0) rh.noalias() -= coupling_[b] * inv_rb[b];
    }
    Eigen::VectorXd dx(rhs.size());
    dx.head(nh) = nh > 0 ? Eigen::VectorXd(head_factor_.solve(rh)) : rh;
    for (int b = 0; b < qp_.num_blocks(); ++b) {
      Eigen::VectorXd xb = inv_rb[b];
      if (coupling_[b].size() > 0) {
        xb -= block_factor_[b].solve(Eigen::VectorXd(coupling_[b].transpose() * dx.head(nh)));
      }
      dx.segment(qp_.block_offset(b), qp_.block_size(b)) = xb;
    }
    return dx;
  }

 private:
  const StructuredQp& qp_;
  std::vector<std::vector<int>> rows_;
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> block_factor_;
  std::vector<Eigen::MatrixXd> coupling_;
  Eigen::LDLT<Eigen::MatrixXd> head_factor_;
};

double MaxStep(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

double InfNorm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

}  // namespace

QpResult SolveStructuredQp(const StructuredQp& qp, const QpSettings& settings) {
  const int n = qp.num_variables();
  const int m = qp.num_rows();
  const Eigen::VectorXd q = qp.Gradient();
  const Eigen::VectorXd h = qp.Rhs();

  Eigen::MatrixXd head_rows(m, qp.head_size());
  std::vector<const Eigen::VectorXd*> block_rows(m);
  for (int r = 0; r < m; ++r) {
    head_rows.row(r) = qp.head_coef_[r].transpose();
    block_rows[r] = &qp.block_coef_[r];
  }
  NormalSolver normal(qp);
  normal.SetBlockRows(qp.rows_of_block_);

  QpResult res;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (m == 0) {
    if (!normal.Factor(Eigen::VectorXd(), head_rows, block_rows,
                       qp.touches_head_)) {
      return res;
    }
    res.x = normal.Solve(-q);
    res.z = Eigen::VectorXd();
    res.status = QpStatus::kSolved;
    return res;
  }

  // Initial point from the W = I normal equations, then shifted interior.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  if (!normal.Factor(w, head_rows, block_rows, qp.touches_head_)) {
    return res;
  }
  x = normal.Solve(-q + qp.TransposeTimes(h));
  Eigen::VectorXd s = h - qp.RowActivity(x);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
  {
    const double shift = std::max(0.0, -s.minCoeff()) + 1.0;
    s.array() = s.array().max(0.0) + (s.array() <= 0.0).cast<double>() * shift;
    s.array() = s.array().max(1e-2);
  }

  const double h_scale = 1.0 + InfNorm(h);
  const double q_scale = 1.0 + InfNorm(q);

  for (int it = 1; it <= settings.max_iterations; ++it) {
    res.iterations = it;
    const Eigen::VectorXd rd = qp.HessianTimes(x) + q + qp.TransposeTimes(z);
    const Eigen::VectorXd rp = qp.RowActivity(x) + s - h;
    const double mu = s.dot(z) / m;

    res.primal_residual = InfNorm(rp);
    res.dual_residual = InfNorm(rd);
    res.gap = mu;
    if (res.primal_residual <= settings.feasibility_tolerance * h_scale &&
        res.dual_residual <= settings.optimality_tolerance * q_scale &&
        mu <= settings.gap_tolerance) {
      res.status = QpStatus::kSolved;
      res.x = x;
      res.z = z;
      return res;
    }

    w = z.cwiseQuotient(s);
    if (!normal.Factor(w, head_rows, block_rows, qp.touches_head_)) {
      res.status = QpStatus::kNumericalError;
      res.x = x;
      res.z = z;
      return res;
    }

    auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx,
                         Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
      const Eigen::VectorXd t = w.cwiseProduct(rp) - rc.cwiseQuotient(s);
      dx = normal.Solve(-rd - qp.TransposeTimes(t));
      const Eigen::VectorXd gdx = qp.RowActivity(dx);
      dz = w.cwiseProduct(gdx + rp) - rc.cwiseQuotient(s);
      ds = -rp - gdx;
    };

    Eigen::VectorXd dx, ds, dz;
    const Eigen::VectorXd sz = s.cwiseProduct(z);
    direction(sz, dx, ds, dz);
    const double a_aff = std::min(MaxStep(s, ds), MaxStep(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / m;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Eigen::VectorXd rc =
        sz + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(m, sigma * mu);
    direction(rc, dx, ds, dz);
    const double alpha = std::min(1.0, 0.99 * std::min(MaxStep(s, ds), MaxStep(z, dz)));

    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    if (!x.allFinite() || !s.allFinite() || !z.allFinite()) {
      res.status = QpStatus::kNumericalError;
      res.x = x;
      res.z = z;
      return res;
    }
  }
  res.status = QpStatus::kMaxIterations;
  res.x = x;
  res.z = z;
  return res;
}

}  // namespace mergeplan
