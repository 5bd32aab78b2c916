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

#include "mergeplan/models.hpp"

#include <vector>

#include <Eigen/Eigenvalues>

#include "mergeplan/error.hpp"

namespace mergeplan {

namespace {

using Vec5 = EvState::Vector;

Vec5 Derivative(const Vec5& x, const EvControl& u, double l_r, double L) {
  const double v = x[3];
  Vec5 d;
  d << v, v * (x[2] + l_r / L * u.delta), v * u.delta / L, x[4], u.eta;
  return d;
}

// Partial derivatives of Derivative() at (x, u).
void DerivativeJacobians(const Vec5& x, const EvControl& u, double l_r,
                         double L, EvJacobianX* fx, EvJacobianU* fu) {
  const double v = x[3];
  fx->setZero();
  (*fx)(0, 3) = 1.0;
  (*fx)(1, 2) = v;
  (*fx)(1, 3) = x[2] + l_r / L * u.delta;
  (*fx)(2, 3) = u.delta / L;
  (*fx)(3, 4) = 1.0;
  fu->setZero();
  (*fu)(1, 0) = v * l_r / L;
  (*fu)(2, 0) = v / L;
  (*fu)(4, 1) = 1.0;
}

}  // namespace

void VehicleGeometry::Validate() const {
  if (!(l_f > 0 && l_r > 0 && l_veh > 0 && w_veh > 0)) {
    throw InvalidArgument("vehicle geometry: lengths must be positive");
  }
  if (l_f + l_r > l_veh) {
    throw InvalidArgument("vehicle geometry: l_f + l_r exceeds l_veh");
  }
}

Vec5 EvDerivative(const EvState& x, const EvControl& u,
                  const VehicleGeometry& geom) {
  return Derivative(x.AsVector(), u, geom.l_r, geom.wheelbase());
}

EvState EvStepRk4(const EvState& x, const EvControl& u,
                  const VehicleGeometry& geom, double T) {
  const double L = geom.wheelbase();
  const Vec5 x0 = x.AsVector();
  const Vec5 k1 = Derivative(x0, u, geom.l_r, L);
  const Vec5 k2 = Derivative(x0 + 0.5 * T * k1, u, geom.l_r, L);
  const Vec5 k3 = Derivative(x0 + 0.5 * T * k2, u, geom.l_r, L);
  const Vec5 k4 = Derivative(x0 + T * k3, u, geom.l_r, L);
  return EvState::FromVector(x0 + T / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

EvState EvStepRk4(const EvState& x, const EvControl& u,
                  const VehicleGeometry& geom, double T, EvJacobianX* dx,
                  EvJacobianU* du) {
  const double L = geom.wheelbase();
  const double lr = geom.l_r;
  const Vec5 x0 = x.AsVector();
  EvJacobianX fx;
  EvJacobianU fu;
  const EvJacobianX I = EvJacobianX::Identity();

  const Vec5 k1 = Derivative(x0, u, lr, L);
  DerivativeJacobians(x0, u, lr, L, &fx, &fu);
  const EvJacobianX k1x = fx;
  const EvJacobianU k1u = fu;

  const Vec5 x2 = x0 + 0.5 * T * k1;
  const Vec5 k2 = Derivative(x2, u, lr, L);
  DerivativeJacobians(x2, u, lr, L, &fx, &fu);
  const EvJacobianX k2x = fx * (I + 0.5 * T * k1x);
  const EvJacobianU k2u = fx * (0.5 * T * k1u) + fu;

  const Vec5 x3 = x0 + 0.5 * T * k2;
  const Vec5 k3 = Derivative(x3, u, lr, L);
  DerivativeJacobians(x3, u, lr, L, &fx, &fu);
  const EvJacobianX k3x = fx * (I + 0.5 * T * k2x);
  const EvJacobianU k3u = fx * (0.5 * T * k2u) + fu;

  const Vec5 x4 = x0 + T * k3;
  const Vec5 k4 = Derivative(x4, u, lr, L);
  DerivativeJacobians(x4, u, lr, L, &fx, &fu);
  const EvJacobianX k4x = fx * (I + T * k3x);
  const EvJacobianU k4u = fx * (T * k3u) + fu;

  if (dx) *dx = I + T / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  if (du) *du = T / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  return EvState::FromVector(x0 + T / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

SvState SvStep(const SvState& x, double accel, double T) {
  return {x.p_x + T * x.v_x + 0.5 * T * T * accel, x.v_x + T * accel};
}

PointMassState MakePointMassState(double p_x, double v_x, double a_x,
                                  double p_y, double v_y, double a_y) {
  PointMassState z;
  z << p_x, v_x, a_x, p_y, v_y, a_y;
  return z;
}

FeedbackGains::FeedbackGains(const Gain& k_lon, const Gain& k_lat, double T)
    : k_lon_(k_lon), k_lat_(k_lat), T_(T) {
  if (!(T > 0.0)) throw InvalidArgument("feedback gains: T must be positive");
  Eigen::Matrix3d chain;
  chain << 1, T, T * T / 2, 0, 1, T, 0, 0, 1;
  A_.setZero();
  A_.topLeftCorner<3, 3>() = chain;
  A_.bottomRightCorner<3, 3>() = chain;
  B_.setZero();
  B_.block<3, 1>(0, 0) << 0.0, T * T / 2, T;
  B_.block<3, 1>(3, 1) << T * T * T / 6, T * T / 2, T;
  K_.setZero();
  K_.block<1, 3>(0, 0) = k_lon.transpose();
  K_.block<1, 3>(1, 3) = k_lat.transpose();
  phi_ = A_ - B_ * K_;
  // Without position feedback p_x is a pure integrator of v_x (eigenvalue 1)
  // that never feeds back, so stability is judged on the tracked states.
  if (k_lon[0] == 0.0) {
    std::vector<int> idx = {1, 2, 3, 4, 5};
    Eigen::Matrix<double, 5, 5> tracked;
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) tracked(r, c) = phi_(idx[r], idx[c]);
    }
    spectral_radius_ = tracked.eigenvalues().cwiseAbs().maxCoeff();
  } else {
    spectral_radius_ = phi_.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (!(spectral_radius_ < 1.0)) {
    throw InvalidArgument("feedback gains: closed loop is not Schur stable");
  }
}

FeedbackGains DefaultFeedbackGains(double T) {
  return FeedbackGains(FeedbackGains::Gain(0.0, 0.3847, 0.8663),
                       FeedbackGains::Gain(0.5681, 1.4003, 1.7260), T);
}

std::vector<PointMassState> PointMassRollout(const PointMassState& z0,
                                             const PointMassState& z_ref,
                                             const FeedbackGains& gains,
                                             int n) {
  if (n < 1) throw InvalidArgument("pointmass rollout: n must be >= 1");
  const PointMassState drive = gains.B() * (gains.K() * z_ref);
  std::vector<PointMassState> out;
  out.reserve(n);
  PointMassState z = z0;
  for (int i = 0; i < n; ++i) {
    z = gains.Phi() * z + drive;
    out.push_back(z);
  }
  return out;
}

}  // namespace mergeplan
