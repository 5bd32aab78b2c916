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

#include "mergeplan/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

#include "mergeplan/error.hpp"

namespace mergeplan {

namespace {

double Cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Signed distance of c from the directed line a->b (positive on the left).
double LeftDistance(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const double len = ab.norm();
  if (len <= kGeomTol) return (c - a).norm();
  return Cross(ab, c - a) / len;
}

Vec2 ClosestOnSegment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

// Andrew's monotone chain. Drops duplicates and points within kGeomTol of a
// hull edge.
std::vector<Vec2> ConvexHull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  std::vector<Vec2> unique;
  unique.reserve(pts.size());
  for (const Vec2& p : pts) {
    if (unique.empty() || (p - unique.back()).norm() > kGeomTol) {
      unique.push_back(p);
    }
  }
  if (unique.size() <= 2) {
    if (unique.size() == 2 && (unique[1] - unique[0]).norm() <= kGeomTol) {
      unique.pop_back();
    }
    return unique;
  }

  std::vector<Vec2> hull(2 * unique.size());
  std::size_t k = 0;
  for (const Vec2& p : unique) {
    while (k >= 2 && LeftDistance(hull[k - 2], hull[k - 1], p) <= kGeomTol) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = unique.rbegin() + 1; it != unique.rend(); ++it) {
    while (k >= lower && LeftDistance(hull[k - 2], hull[k - 1], *it) <= kGeomTol) {
      --k;
    }
    hull[k++] = *it;
  }
  hull.resize(k - 1);

  // Monotone chain collapses collinear inputs to [first, last, ...]; clean up
  // the degenerate cases explicitly.
  if (hull.size() < 2) {
    return {unique.front(), unique.back()};
  }
  if (hull.size() == 2 && (hull[1] - hull[0]).norm() <= kGeomTol) {
    hull.pop_back();
  }
  return hull;
}

}  // namespace

double HalfspaceRep::MaxViolation(const Vec2& p) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < normals.size(); ++j) {
    worst = std::max(worst, normals[j].dot(p) - offsets[j]);
  }
  return worst;
}

Polytope2 Polytope2::FromPoints(std::span<const Vec2> points) {
  if (points.empty()) throw InvalidArgument("polytope: no points");
  for (const Vec2& p : points) {
    if (!p.allFinite()) throw InvalidArgument("polytope: non-finite point");
  }
  return Polytope2(ConvexHull(std::vector<Vec2>(points.begin(), points.end())));
}

Polytope2 Polytope2::Point(const Vec2& p) {
  const Vec2 pts[] = {p};
  return FromPoints(pts);
}

Polytope2 Polytope2::Segment(const Vec2& a, const Vec2& b) {
  const Vec2 pts[] = {a, b};
  return FromPoints(pts);
}

Polytope2 Polytope2::FromBox(const Vec2& center, const Vec2& half_widths) {
  if (!(half_widths.x() >= 0.0) || !(half_widths.y() >= 0.0)) {
    throw InvalidArgument("from_box: negative half width");
  }
  const double hx = half_widths.x();
  const double hy = half_widths.y();
  const Vec2 pts[] = {center + Vec2(-hx, -hy), center + Vec2(hx, -hy),
                      center + Vec2(hx, hy), center + Vec2(-hx, hy)};
  return FromPoints(pts);
}

std::optional<Polytope2> Polytope2::FromHalfspaces(const HalfspaceRep& rep) {
  if (rep.normals.size() != rep.offsets.size()) {
    throw InvalidArgument("halfspaces: normals/offsets size mismatch");
  }
  std::vector<Vec2> n;
  std::vector<double> h;
  for (std::size_t j = 0; j < rep.size(); ++j) {
    const double len = rep.normals[j].norm();
    if (len <= 0.0) {
      if (rep.offsets[j] < 0.0) return std::nullopt;  // 0 <= h < 0
      continue;
    }
    n.push_back(rep.normals[j] / len);
    h.push_back(rep.offsets[j] / len);
  }

  // Bounded iff the normals positively span the plane: no angular gap >= pi.
  std::vector<double> angles;
  for (const Vec2& v : n) angles.push_back(std::atan2(v.y(), v.x()));
  std::sort(angles.begin(), angles.end());
  bool bounded = angles.size() >= 3;
  for (std::size_t j = 0; bounded && j < angles.size(); ++j) {
    const double next = j + 1 < angles.size()
                            ? angles[j + 1]
                            : angles.front() + 2.0 * std::numbers::pi;
    if (next - angles[j] >= std::numbers::pi - 1e-12) bounded = false;
  }
  if (!bounded) throw Unsupported("halfspaces: unbounded set");

  std::vector<Vec2> candidates;
  for (std::size_t i = 0; i < n.size(); ++i) {
    for (std::size_t j = i + 1; j < n.size(); ++j) {
      const double det = Cross(n[i], n[j]);
      if (std::abs(det) <= 1e-14) continue;
      const Vec2 x((h[i] * n[j].y() - h[j] * n[i].y()) / det,
                   (n[i].x() * h[j] - n[j].x() * h[i]) / det);
      bool feasible = true;
      for (std::size_t k = 0; k < n.size() && feasible; ++k) {
        const double tol = kGeomTol * std::max(1.0, std::abs(h[k]));
        feasible = n[k].dot(x) - h[k] <= tol;
      }
      if (feasible) candidates.push_back(x);
    }
  }
  if (candidates.empty()) return std::nullopt;
  return FromPoints(candidates);
}

HalfspaceRep Polytope2::Halfspaces() const {
  HalfspaceRep rep;
  auto add = [&rep](const Vec2& normal, const Vec2& through) {
    rep.normals.push_back(normal);
    rep.offsets.push_back(normal.dot(through));
  };
  const auto& v = vertices_;
  if (v.size() == 1) {
    add(Vec2(1, 0), v[0]);
    add(Vec2(-1, 0), v[0]);
    add(Vec2(0, 1), v[0]);
    add(Vec2(0, -1), v[0]);
  } else if (v.size() == 2) {
    const Vec2 d = (v[1] - v[0]).normalized();
    const Vec2 perp(-d.y(), d.x());
    add(perp, v[0]);
    add(-perp, v[0]);
    add(d, v[1]);
    add(-d, v[0]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2 e = v[(i + 1) % v.size()] - v[i];
      add(Vec2(e.y(), -e.x()).normalized(), v[i]);
    }
  }
  return rep;
}

bool Polytope2::Contains(const Vec2& p, double tol) const {
  return DistancePoint(p, *this) <= tol;
}

bool Polytope2::Contains(const Polytope2& other, double tol) const {
  return std::all_of(other.vertices_.begin(), other.vertices_.end(),
                     [&](const Vec2& p) { return Contains(p, tol); });
}

double Polytope2::Area() const {
  double twice = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    twice += Cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  }
  return 0.5 * twice;
}

Polytope2 Polytope2::Translated(const Vec2& offset) const {
  std::vector<Vec2> moved = vertices_;
  for (Vec2& p : moved) p += offset;
  return Polytope2(std::move(moved));
}

Polytope2 Polytope2::LinearMap(const Eigen::Matrix2d& m) const {
  if (std::abs(m.determinant()) <= 1e-14) {
    throw InvalidArgument("linear map: singular matrix");
  }
  std::vector<Vec2> mapped;
  mapped.reserve(vertices_.size());
  for (const Vec2& p : vertices_) mapped.push_back(m * p);
  return FromPoints(mapped);
}

Polytope2 Polytope2::Reflected() const {
  std::vector<Vec2> pts = vertices_;
  for (Vec2& p : pts) p = -p;
  return FromPoints(pts);
}

Polytope2 MinkowskiSum(const Polytope2& p, const Polytope2& q) {
  std::vector<Vec2> sums;
  sums.reserve(p.num_vertices() * q.num_vertices());
  for (const Vec2& a : p.vertices()) {
    for (const Vec2& b : q.vertices()) sums.push_back(a + b);
  }
  return Polytope2::FromPoints(sums);
}

std::optional<Polytope2> IntersectHalfspace(const Polytope2& p,
                                            const Vec2& normal, double offset) {
  const double len = normal.norm();
  if (!(len > 0.0)) throw InvalidArgument("intersect_halfspace: zero normal");
  const Vec2 n = normal / len;
  const double c = offset / len;
  const double tol = 1e-12 * std::max(1.0, std::abs(c));

  const auto& v = p.vertices();
  std::vector<Vec2> out;
  if (v.size() == 1) {
    if (n.dot(v[0]) - c <= tol) out.push_back(v[0]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2& cur = v[i];
      const Vec2& next = v[(i + 1) % v.size()];
      const double dc = n.dot(cur) - c;
      const double dn = n.dot(next) - c;
      const bool cur_in = dc <= tol;
      const bool next_in = dn <= tol;
      if (cur_in) out.push_back(cur);
      if (cur_in != next_in) {
        const double t = dc / (dc - dn);
        out.push_back(cur + t * (next - cur));
      }
    }
  }
  if (out.empty()) return std::nullopt;
  return Polytope2::FromPoints(out);
}

Interval ProjectAxis(const Polytope2& p, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("project_axis: axis must be 0 or 1");
  Interval iv{std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity()};
  for (const Vec2& v : p.vertices()) {
    iv.lower = std::min(iv.lower, v[axis]);
    iv.upper = std::max(iv.upper, v[axis]);
  }
  return iv;
}

Vec2 ClosestPoint(const Vec2& p, const Polytope2& q) {
  const auto& v = q.vertices();
  if (v.size() == 1) return v[0];
  if (v.size() == 2) return ClosestOnSegment(p, v[0], v[1]);
  bool inside = true;
  for (std::size_t i = 0; i < v.size() && inside; ++i) {
    inside = Cross(v[(i + 1) % v.size()] - v[i], p - v[i]) >= 0.0;
  }
  if (inside) return p;
  Vec2 best = v[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 c = ClosestOnSegment(p, v[i], v[(i + 1) % v.size()]);
    const double d = (c - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double DistancePoint(const Vec2& p, const Polytope2& q) {
  return (ClosestPoint(p, q) - p).norm();
}

double DistancePolytopes(const Polytope2& p, const Polytope2& q) {
  return DistancePoint(Vec2::Zero(), MinkowskiSum(p, q.Reflected()));
}

double HausdorffDistance(const Polytope2& p, const Polytope2& q) {
  double d = 0.0;
  for (const Vec2& v : p.vertices()) d = std::max(d, DistancePoint(v, q));
  for (const Vec2& v : q.vertices()) d = std::max(d, DistancePoint(v, p));
  return d;
}

}  // namespace mergeplan
