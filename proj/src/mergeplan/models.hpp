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

#pragma once

#include <vector>

#include <Eigen/Core>

namespace mergeplan {

// Ego vehicle state. Position is the geometric center in the ground frame;
// v and a are body-frame longitudinal speed and acceleration.
struct EvState {
  double p_x = 0.0;
  double p_y = 0.0;
  double phi = 0.0;
  double v = 0.0;
  double a = 0.0;

  using Vector = Eigen::Matrix<double, 5, 1>;
  Vector AsVector() const { return Vector(p_x, p_y, phi, v, a); }
  static EvState FromVector(const Vector& x) { return {x[0], x[1], x[2], x[3], x[4]}; }
  bool operator==(const EvState&) const = default;
};

struct EvControl {
  double delta = 0.0;  // front wheel angle [rad]
  double eta = 0.0;    // longitudinal jerk [m/s^3]
  bool operator==(const EvControl&) const = default;
};

// Surrounding vehicle: longitudinal position and speed only.
struct SvState {
  double p_x = 0.0;
  double v_x = 0.0;
  bool operator==(const SvState&) const = default;
};

struct VehicleGeometry {
  double l_f = 1.65;
  double l_r = 1.65;
  double l_veh = 4.3;
  double w_veh = 1.8;

  double wheelbase() const { return l_f + l_r; }
  // Throws InvalidArgument unless all lengths are positive and l_f + l_r <= l_veh.
  void Validate() const;
  bool operator==(const VehicleGeometry&) const = default;
};

using EvJacobianX = Eigen::Matrix<double, 5, 5>;
using EvJacobianU = Eigen::Matrix<double, 5, 2>;

// Small-angle single-track kinematics.
EvState::Vector EvDerivative(const EvState& x, const EvControl& u,
                             const VehicleGeometry& geom);

// One classical RK4 step with u held over [0, T].
EvState EvStepRk4(const EvState& x, const EvControl& u,
                  const VehicleGeometry& geom, double T);

// RK4 step together with its exact Jacobians d x+/d x and d x+/d u.
EvState EvStepRk4(const EvState& x, const EvControl& u,
                  const VehicleGeometry& geom, double T, EvJacobianX* dx,
                  EvJacobianU* du);

// Double integrator: p += T v + T^2/2 a, v += T a. No clipping.
SvState SvStep(const SvState& x, double accel, double T);

// [p_x, v_x, a_x, p_y, v_y, a_y] in the ground frame.
using PointMassState = Eigen::Matrix<double, 6, 1>;

PointMassState MakePointMassState(double p_x, double v_x, double a_x,
                                  double p_y, double v_y, double a_y);

// Linear state feedback on the decoupled longitudinal/lateral point mass.
// Construction rejects gains whose closed loop is not Schur stable.
class FeedbackGains {
 public:
  using Gain = Eigen::Vector3d;

  FeedbackGains(const Gain& k_lon, const Gain& k_lat, double T);

  const Gain& k_lon() const { return k_lon_; }
  const Gain& k_lat() const { return k_lat_; }
  double T() const { return T_; }

  const Eigen::Matrix<double, 6, 6>& A() const { return A_; }
  const Eigen::Matrix<double, 6, 2>& B() const { return B_; }
  const Eigen::Matrix<double, 2, 6>& K() const { return K_; }
  // A - B K
  const Eigen::Matrix<double, 6, 6>& Phi() const { return phi_; }
  // Over the tracked states; an unfed p_x integrator is excluded.
  double SpectralRadius() const { return spectral_radius_; }

 private:
  Gain k_lon_;
  Gain k_lat_;
  double T_;
  Eigen::Matrix<double, 6, 6> A_;
  Eigen::Matrix<double, 6, 2> B_;
  Eigen::Matrix<double, 2, 6> K_;
  Eigen::Matrix<double, 6, 6> phi_;
  double spectral_radius_ = 0.0;
};

// Default gains of the scenario.
FeedbackGains DefaultFeedbackGains(double T = 0.25);

// z_i = Phi z_{i-1} + B K z_ref for i = 1..n.
std::vector<PointMassState> PointMassRollout(const PointMassState& z0,
                                             const PointMassState& z_ref,
                                             const FeedbackGains& gains, int n);

}  // namespace mergeplan
