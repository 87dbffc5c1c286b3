#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "refit/geometry.hpp"
#include "refit/selection.hpp"

// Independent brute-force reference implementations. These deliberately use
// different formulations than the library so results cross-check rather than
// mirror each other.
namespace refit::testing {

// Smallest eigenvalue of a symmetric 3x3 via the trigonometric closed form
// of the characteristic cubic.
inline double smallest_eigenvalue_cubic(double xx, double xy, double xz,
                                        double yy, double yz, double zz) {
  double p1 = xy * xy + xz * xz + yz * yz;
  double q = (xx + yy + zz) / 3.0;
  double dxx = xx - q, dyy = yy - q, dzz = zz - q;
  double p2 = dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * p1;
  double p = std::sqrt(std::max(p2 / 6.0, 0.0));
  if (p < 1e-300) return q;
  // det((A - qI)/p) / 2
  double bxx = dxx / p, byy = dyy / p, bzz = dzz / p;
  double bxy = xy / p, bxz = xz / p, byz = yz / p;
  double detb = bxx * (byy * bzz - byz * byz) - bxy * (bxy * bzz - byz * bxz) +
                bxz * (bxy * byz - byy * bxz);
  double r = std::clamp(detb / 2.0, -1.0, 1.0);
  double phi = std::acos(r) / 3.0;
  // Smallest root.
  return q + 2.0 * p * std::cos(phi + 2.0 * 3.14159265358979323846 / 3.0);
}

inline double shoelace(const std::vector<Vec2>& poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

// O(n^3) hull: a directed pair (i, j) is a hull edge iff every other point
// lies strictly to its left. Returns the hull vertex set.
inline std::vector<Vec2> hull_vertices_bruteforce(
    const std::vector<Vec2>& points) {
  std::vector<Vec2> verts;
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      Vec2 d = points[j] - points[i];
      bool edge = true;
      for (std::size_t k = 0; k < n && edge; ++k) {
        if (k == i || k == j) continue;
        if (d.cross(points[k] - points[i]) <= 0.0) edge = false;
      }
      if (edge) {
        verts.push_back(points[i]);
        break;
      }
    }
  }
  return verts;
}

// Point-to-triangle distance via plane projection + edge clamping; a
// different route than the closest-point walk used by the library.
inline double point_triangle_distance_bruteforce(const Vec3& p, const Vec3& a,
                                                 const Vec3& b,
                                                 const Vec3& c) {
  auto seg = [&](const Vec3& s, const Vec3& e) {
    Vec3 d = e - s;
    double t = std::clamp((p - s).dot(d) / d.dot(d), 0.0, 1.0);
    return (p - (s + d * t)).norm();
  };
  double best = std::min({seg(a, b), seg(b, c), seg(c, a)});
  Vec3 n = (b - a).cross(c - a);
  double nn = n.dot(n);
  if (nn > 1e-30) {
    Vec3 q = p - n * ((p - a).dot(n) / nn);
    // Inside test via same-side checks.
    auto side = [&](const Vec3& s, const Vec3& e) {
      return n.dot((e - s).cross(q - s));
    };
    if (side(a, b) >= -1e-12 && side(b, c) >= -1e-12 && side(c, a) >= -1e-12)
      best = std::min(best, (p - q).norm());
  }
  return best;
}

inline double c2m_rmse_bruteforce(
    const std::vector<Vec3>& points,
    const std::vector<std::array<Vec3, 3>>& triangles) {
  double sum_sq = 0.0;
  for (const Vec3& p : points) {
    double best = std::numeric_limits<double>::max();
    for (const auto& t : triangles)
      best = std::min(best,
                      point_triangle_distance_bruteforce(p, t[0], t[1], t[2]));
    sum_sq += best * best;
  }
  return std::sqrt(sum_sq / static_cast<double>(points.size()));
}

inline double min_point_mesh_distance_bruteforce(
    const Vec3& p, const std::vector<std::array<Vec3, 3>>& triangles) {
  double best = std::numeric_limits<double>::max();
  for (const auto& t : triangles)
    best = std::min(best,
                    point_triangle_distance_bruteforce(p, t[0], t[1], t[2]));
  return best;
}

// Exhaustive minimum of the selection problem over all assignments that
// satisfy sum over N(e) in {0,2} for every edge. Requires <= 25 faces.
struct EnumerationResult {
  double objective = 0.0;
  std::vector<char> selected;
  long long feasible_count = 0;
};

inline EnumerationResult enumerate_bip(const SelectionProblem& problem) {
  const std::size_t n = problem.num_faces;
  std::vector<std::uint32_t> edge_masks;
  for (const auto& e : problem.edges) {
    std::uint32_t m = 0;
    for (int f : e.faces) m |= 1u << f;
    edge_masks.push_back(m);
  }
  EnumerationResult best;
  best.selected.assign(n, 0);
  best.objective = problem.objective(best.selected);
  best.feasible_count = 0;
  std::vector<char> sel(n, 0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::uint32_t em : edge_masks) {
      int cnt = std::popcount(mask & em);
      if (cnt != 0 && cnt != 2) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    ++best.feasible_count;
    for (std::size_t i = 0; i < n; ++i) sel[i] = (mask >> i) & 1u;
    double obj = problem.objective(sel);
    if (obj < best.objective) {
      best.objective = obj;
      best.selected = sel;
    }
  }
  return best;
}

}  // namespace refit::testing
