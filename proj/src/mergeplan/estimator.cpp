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

#include "mergeplan/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "mergeplan/error.hpp"

namespace mergeplan {

AccelBounds InitBounds(const InformationSet& info) {
  if (info.empty()) throw InvalidState("information set is empty");
  const auto [lo, hi] =
      std::minmax_element(info.samples().begin(), info.samples().end());
  return {*lo, *hi};
}

AccelBounds UpdateBounds(const AccelBounds& bounds, double observed) {
  if (!std::isfinite(observed)) {
    throw InvalidArgument("update_bounds: non-finite observation");
  }
  return {std::min(bounds.a_min, observed), std::max(bounds.a_max, observed)};
}

AccelBounds WorstCaseBounds(double mu, double g) {
  if (!(mu > 0.0) || !(g > 0.0)) {
    throw InvalidArgument("worst_case_bounds: mu and g must be positive");
  }
  return {-mu * g, mu * g};
}

std::vector<Polytope2> PredictReachable(const SvState& x,
                                        const AccelBounds& bounds, int n,
                                        double v_adm, double T) {
  if (n < 1) throw InvalidArgument("predict_reachable: n must be >= 1");
  if (!(bounds.a_min <= bounds.a_max)) {
    throw InvalidArgument("predict_reachable: invalid bounds");
  }
  Eigen::Matrix2d A;
  A << 1.0, T, 0.0, 1.0;
  const Vec2 b(0.5 * T * T, T);

  std::vector<Polytope2> out;
  out.reserve(n);
  Polytope2 current = Polytope2::Point(Vec2(x.p_x, x.v_x));
  for (int i = 0; i < n; ++i) {
    std::vector<Vec2> pts;
    pts.reserve(2 * current.num_vertices());
    for (const Vec2& v : current.vertices()) {
      const Vec2 mapped = A * v;
      pts.push_back(mapped + bounds.a_min * b);
      if (bounds.a_max != bounds.a_min) pts.push_back(mapped + bounds.a_max * b);
    }
    const Polytope2 grown = Polytope2::FromPoints(pts);

    auto clipped = IntersectHalfspace(grown, Vec2(0.0, -1.0), 0.0);
    if (clipped) clipped = IntersectHalfspace(*clipped, Vec2(0.0, 1.0), v_adm);
    if (!clipped) {
      // The input interval cannot keep the speed admissible (it excludes the
      // braking/accelerating values needed). Project onto the speed band.
      for (Vec2& p : pts) p.y() = std::clamp(p.y(), 0.0, v_adm);
      clipped = Polytope2::FromPoints(pts);
    }
    current = *clipped;
    out.push_back(current);
  }
  return out;
}

std::vector<Polytope2> PredictOccupancy(const std::vector<Polytope2>& reachable,
                                        const VehicleGeometry& geom,
                                        double lateral_center) {
  std::vector<Polytope2> out;
  out.reserve(reachable.size());
  const double half_l = 0.5 * geom.l_veh;
  const double half_w = 0.5 * geom.w_veh;
  for (const Polytope2& r : reachable) {
    const Interval pos = ProjectAxis(r, 0);
    const double x0 = pos.lower - half_l, x1 = pos.upper + half_l;
    const double y0 = lateral_center - half_w, y1 = lateral_center + half_w;
    const Vec2 corners[] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    out.push_back(Polytope2::FromPoints(corners));
  }
  return out;
}

OccupancyPrediction PredictForwardOccupancy(const SvState& x,
                                            const AccelBounds& bounds, int n,
                                            double v_adm, double T,
                                            const VehicleGeometry& geom,
                                            double lateral_center) {
  OccupancyPrediction pred;
  pred.reachable = PredictReachable(x, bounds, n, v_adm, T);
  pred.steps = PredictOccupancy(pred.reachable, geom, lateral_center);
  return pred;
}

BoundsEstimator::BoundsEstimator(const InformationSet& initial, bool keep_samples)
    : bounds_(InitBounds(initial)), keep_samples_(keep_samples) {
  if (keep_samples_) info_ = initial;
}

void BoundsEstimator::Observe(double accel) {
  bounds_ = UpdateBounds(bounds_, accel);
  if (keep_samples_) info_.Add(accel);
  ++observations_;
}

}  // namespace mergeplan
