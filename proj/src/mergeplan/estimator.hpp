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
// Online acceleration-bound estimation for surrounding vehicles and forward
// occupancy prediction by exact reachability of the double integrator.
//
// Bounds are the running min/max of every acceleration observed so far
// (seeded by a nonempty initial information set). Reachable sets live in the
// (position, speed) plane and are clipped to admissible speeds each step;
// occupancies are the position projection inflated by the vehicle footprint.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <vector>

#include "mergeplan/models.hpp"
#include "mergeplan/polytope.hpp"

namespace mergeplan {

struct AccelBounds {
  double a_min = 0.0;
  double a_max = 0.0;

  bool Contains(double a, double tol = 0.0) const {
    return a >= a_min - tol && a <= a_max + tol;
  }
  bool Within(const AccelBounds& outer, double tol = 0.0) const {
    return a_min >= outer.a_min - tol && a_max <= outer.a_max + tol;
  }
  double width() const { return a_max - a_min; }
  bool operator==(const AccelBounds&) const = default;
};

// Multiset of observed accelerations.
class InformationSet {
 public:
  InformationSet() = default;
  explicit InformationSet(std::vector<double> samples)
      : samples_(std::move(samples)) {}

  void Add(double a) { samples_.push_back(a); }
  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

 private:
  std::vector<double> samples_;
};

// [min, max] of the samples. Throws InvalidState on an empty set.
AccelBounds InitBounds(const InformationSet& info);

// Widen to include the observation. Throws InvalidArgument on non-finite input.
AccelBounds UpdateBounds(const AccelBounds& bounds, double observed);

// [-mu g, mu g]. Throws InvalidArgument unless mu > 0 and g > 0.
AccelBounds WorstCaseBounds(double mu, double g);

// Reachable sets R_1..R_n over (p_x, v_x), starting from the point x.
std::vector<Polytope2> PredictReachable(const SvState& x,
                                        const AccelBounds& bounds, int n,
                                        double v_adm, double T);

// Position-space occupancy per step: the longitudinal projection of each
// reachable set, inflated by the footprint and centered on lateral_center.
std::vector<Polytope2> PredictOccupancy(const std::vector<Polytope2>& reachable,
                                        const VehicleGeometry& geom,
                                        double lateral_center);

struct OccupancyPrediction {
  std::vector<Polytope2> steps;      // position space
  std::vector<Polytope2> reachable;  // (p_x, v_x) space
};

OccupancyPrediction PredictForwardOccupancy(const SvState& x,
                                            const AccelBounds& bounds, int n,
                                            double v_adm, double T,
                                            const VehicleGeometry& geom,
                                            double lateral_center);

// Per-vehicle running estimate. Keeps the information set only when asked to.
class BoundsEstimator {
 public:
  explicit BoundsEstimator(const InformationSet& initial, bool keep_samples = false);

  void Observe(double accel);
  const AccelBounds& bounds() const { return bounds_; }
  // Empty unless keep_samples was requested.
  const InformationSet& information() const { return info_; }
  std::size_t observations() const { return observations_; }

 private:
  AccelBounds bounds_;
  InformationSet info_;
  bool keep_samples_;
  std::size_t observations_ = 0;
};

}  // namespace mergeplan
