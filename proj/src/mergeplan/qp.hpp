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
// Primal-dual interior-point solver for convex QPs with arrowhead structure:
//
//   minimize    1/2 x' P x + q' x
//   subject to  G x <= h
//
// where x = [head; block_1; ...; block_B]. P is block diagonal over that
// partition, and every row of G touches the head (dense coefficients) and at
// most one block. The normal equations are reduced to the head by a Schur
// complement, so the cost per iteration is dominated by a head-sized Cholesky
// factorization regardless of how many blocks there are.
//
// Mehrotra predictor-corrector with an infeasible start.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <vector>

#include <Eigen/Core>

namespace mergeplan {

struct QpSettings;
struct QpResult;

class StructuredQp {
 public:
  StructuredQp(int head_size, const std::vector<int>& block_sizes);

  int head_size() const { return head_size_; }
  int num_blocks() const { return static_cast<int>(block_size_.size()); }
  int block_size(int b) const { return block_size_[b]; }
  int block_offset(int b) const { return block_offset_[b]; }
  int num_variables() const { return num_variables_; }
  int num_rows() const { return static_cast<int>(rhs_.size()); }

  Eigen::MatrixXd& head_hessian() { return head_hessian_; }
  Eigen::VectorXd& head_gradient() { return head_gradient_; }
  Eigen::MatrixXd& block_hessian(int b) { return block_hessian_[b]; }
  Eigen::VectorXd& block_gradient(int b) { return block_gradient_[b]; }
  const Eigen::MatrixXd& head_hessian() const { return head_hessian_; }
  const Eigen::MatrixXd& block_hessian(int b) const { return block_hessian_[b]; }

  // Appends head_coef . x_head + block_coef . x_block <= rhs and returns the
  // row index. Pass block = -1 for a head-only row; an empty head_coef means
  // the row does not touch the head.
  int AddRow(const Eigen::VectorXd& head_coef, int block,
             const Eigen::VectorXd& block_coef, double rhs);
  int AddHeadRow(const Eigen::VectorXd& head_coef, double rhs);
  int AddBlockRow(int block, const Eigen::VectorXd& block_coef, double rhs);

  // Row activity G_r x and the transposed product G' z.
  Eigen::VectorXd RowActivity(const Eigen::VectorXd& x) const;
  Eigen::VectorXd TransposeTimes(const Eigen::VectorXd& z) const;
  Eigen::VectorXd HessianTimes(const Eigen::VectorXd& x) const;
  Eigen::VectorXd Gradient() const;
  Eigen::VectorXd Rhs() const;

  double Objective(const Eigen::VectorXd& x) const;

 private:
  friend QpResult SolveStructuredQp(const StructuredQp&, const QpSettings&);

  int head_size_;
  std::vector<int> block_size_;
  std::vector<int> block_offset_;
  int num_variables_;

  Eigen::MatrixXd head_hessian_;
  Eigen::VectorXd head_gradient_;
  std::vector<Eigen::MatrixXd> block_hessian_;
  std::vector<Eigen::VectorXd> block_gradient_;

  // One dense head row per constraint, zero when the row skips the head.
  std::vector<Eigen::VectorXd> head_coef_;
  std::vector<bool> touches_head_;
  std::vector<int> row_block_;
  std::vector<Eigen::VectorXd> block_coef_;
  std::vector<std::vector<int>> rows_of_block_;
  std::vector<double> rhs_;
};

struct QpSettings {
  int max_iterations = 80;
  double feasibility_tolerance = 1e-10;  // relative to 1 + |h|
  double optimality_tolerance = 1e-10;   // relative to 1 + |q|
  double gap_tolerance = 1e-11;          // absolute, on mean s.z
};

enum class QpStatus { kSolved, kMaxIterations, kNumericalError };

struct QpResult {
  QpStatus status = QpStatus::kNumericalError;
  Eigen::VectorXd x;
  Eigen::VectorXd z;  // multipliers, one per row, >= 0
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

QpResult SolveStructuredQp(const StructuredQp& qp, const QpSettings& settings = {});

}  // namespace mergeplan
