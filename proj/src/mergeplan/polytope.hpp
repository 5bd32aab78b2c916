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
// Exact convex polygon arithmetic in the plane. A Polytope2 is always
// nonempty and bounded; operations that may produce an empty set return
// std::optional. Degenerate sets (a point, a segment) are ordinary values.
//
// The vertex list is the stored representation. The halfspace form is derived
// on demand and always has unit-norm rows.
//
///////////////////////////////////////////////////////////////////////////////

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mergeplan {

using Vec2 = Eigen::Vector2d;

// Merge distance for duplicate vertices and collinearity threshold.
inline constexpr double kGeomTol = 1e-9;

struct HalfspaceRep {
  std::vector<Vec2> normals;   // unit rows of H
  std::vector<double> offsets; // h

  std::size_t size() const { return normals.size(); }
  // max_j (n_j . p - h_j); <= 0 inside.
  double MaxViolation(const Vec2& p) const;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

class Polytope2 {
 public:
  // Convex hull of the given points. Throws InvalidArgument on an empty or
  // non-finite input.
  static Polytope2 FromPoints(std::span<const Vec2> points);
  static Polytope2 Point(const Vec2& p);
  static Polytope2 Segment(const Vec2& a, const Vec2& b);
  // Axis-aligned box; half widths may be zero.
  static Polytope2 FromBox(const Vec2& center, const Vec2& half_widths);
  // Vertex enumeration of {x : n_j . x <= h_j}. Rows are normalized. Returns
  // nullopt for an empty set; throws Unsupported for an unbounded one.
  static std::optional<Polytope2> FromHalfspaces(const HalfspaceRep& rep);

  // Counter-clockwise, no duplicates, no collinear interior points.
  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  bool IsPoint() const { return vertices_.size() == 1; }
  bool IsSegment() const { return vertices_.size() == 2; }

  HalfspaceRep Halfspaces() const;

  bool Contains(const Vec2& p, double tol = kGeomTol) const;
  bool Contains(const Polytope2& other, double tol = kGeomTol) const;

  double Area() const;
  Polytope2 Translated(const Vec2& offset) const;
  // Image under x -> M x. M must be nonsingular.
  Polytope2 LinearMap(const Eigen::Matrix2d& m) const;
  Polytope2 Reflected() const;  // {-x : x in P}

 private:
  explicit Polytope2(std::vector<Vec2> ccw) : vertices_(std::move(ccw)) {}
  std::vector<Vec2> vertices_;
};

Polytope2 MinkowskiSum(const Polytope2& p, const Polytope2& q);

// Clip by {x : normal . x <= offset}. Throws InvalidArgument on a zero normal.
std::optional<Polytope2> IntersectHalfspace(const Polytope2& p,
                                            const Vec2& normal, double offset);

// [min, max] of coordinate `axis` (0 or 1) over the set.
Interval ProjectAxis(const Polytope2& p, int axis);

// Euclidean distance from a point to the set; 0 inside.
double DistancePoint(const Vec2& p, const Polytope2& q);
// Closest point of the set to p.
Vec2 ClosestPoint(const Vec2& p, const Polytope2& q);

// Minimum distance between two sets (0 when they intersect). Computed as the
// distance from the origin to the Minkowski difference p - q.
double DistancePolytopes(const Polytope2& p, const Polytope2& q);

// Symmetric Hausdorff distance between two polytopes.
double HausdorffDistance(const Polytope2& p, const Polytope2& q);

}  // namespace mergeplan
