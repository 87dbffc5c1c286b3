#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "refit/errors.hpp"

namespace refit {

// Tolerances for meter-scale urban data in double precision.
inline constexpr double kEpsParallel = 1e-8;   // cross-product norm of unit normals
inline constexpr double kEpsArea = 1e-6;       // minimum polygon area, m^2
inline constexpr double kEpsCoplanar = 1e-6;   // point-to-plane slack, m
inline constexpr double kEpsThickness = 0.01;  // OBB half-extent floor, m
inline constexpr double kEpsWeld = 1e-6;       // vertex fusion distance, m

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  double squared_norm() const { return dot(*this); }
  Vec3 normalized() const {
    double n = norm();
    if (n < 1e-300) throw DegenerateInput("cannot normalize zero vector");
    return *this / n;
  }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

using Point3 = Vec3;

struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

// Infinite oriented plane { p : normal . p + d = 0 }, unit normal.
struct Plane {
  Vec3 normal{0.0, 0.0, 1.0};
  double d = 0.0;

  Plane() = default;
  Plane(const Vec3& n, double d_) : normal(n), d(d_) {}

  static Plane from_point_normal(const Vec3& p, const Vec3& n) {
    Vec3 u = n.normalized();
    return Plane(u, -u.dot(p));
  }

  double signed_distance(const Vec3& p) const { return normal.dot(p) + d; }
  Plane flipped() const { return Plane(-normal, -d); }

  // Flips so that `p` ends up on the negative side (normal points away).
  Plane oriented_away_from(const Vec3& p) const {
    return signed_distance(p) > 0.0 ? flipped() : *this;
  }

  // Deterministic orthonormal in-plane basis (u, v) with u x v = normal.
  void basis(Vec3& u, Vec3& v) const;
  Vec2 to_plane_2d(const Vec3& p) const;
  Vec3 to_world(const Vec2& q) const;
};

struct Line3 {
  Vec3 point;
  Vec3 direction;  // unit
};

// Ordered vertex loop, coplanar, counter-clockwise w.r.t. supporting normal.
struct ConvexPolygon3 {
  std::vector<Vec3> vertices;
};

struct Aabb3 {
  Vec3 min{0, 0, 0};
  Vec3 max{0, 0, 0};

  static Aabb3 from_points(const std::vector<Vec3>& pts);
  void extend(const Vec3& p);
  bool contains(const Aabb3& other, double tol = 0.0) const;
  Vec3 center() const { return (min + max) * 0.5; }
};

struct Aabb2 {
  Vec2 min{0, 0};
  Vec2 max{0, 0};

  bool intersects(const Aabb2& o) const {
    return min.x <= o.max.x && o.min.x <= max.x && min.y <= o.max.y &&
           o.min.y <= max.y;
  }
};

inline Aabb2 footprint(const Aabb3& b) {
  return Aabb2{{b.min.x, b.min.y}, {b.max.x, b.max.y}};
}

struct Obb3 {
  Vec3 center;
  std::array<Vec3, 3> axes;  // orthonormal
  Vec3 half_extents;         // nonnegative

  std::array<Vec3, 8> corners() const;
  double volume() const {
    return 8.0 * half_extents.x * half_extents.y * half_extents.z;
  }
};

struct PlaneFit {
  Plane plane;
  double rms_residual = 0.0;
};

// Eigenvalues ascending, eigenvectors[i] matches eigenvalues[i]. Matrix given
// as (xx, xy, xz, yy, yz, zz).
struct SymmetricEigen3 {
  std::array<double, 3> eigenvalues;
  std::array<Vec3, 3> eigenvectors;
};
SymmetricEigen3 symmetric_eigen3(double xx, double xy, double xz, double yy,
                                 double yz, double zz);

// Least-squares plane through the centroid; normal = smallest covariance
// eigenvector with a canonical sign (callers orient by context).
PlaneFit fit_plane_pca(const std::vector<Vec3>& points);

std::optional<Line3> intersect_planes(const Plane& a, const Plane& b);

// Keeps the positive or negative halfspace of `plane`. Returns nullopt when
// the clipped polygon is empty or its area falls below kEpsArea.
std::optional<ConvexPolygon3> clip_polygon_by_halfspace(
    const ConvexPolygon3& poly, const Plane& plane, bool keep_positive);

double polygon_area(const ConvexPolygon3& poly);
Vec3 polygon_centroid(const ConvexPolygon3& poly);
Vec3 polygon_normal(const ConvexPolygon3& poly);  // unit Newell normal

double polygon_area_2d(const std::vector<Vec2>& poly);  // signed (CCW > 0)

// Counter-clockwise hull with no three collinear vertices.
std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points);

// Clips convex `subject` against convex CCW `clip`; may return < 3 vertices.
std::vector<Vec2> clip_convex_2d(const std::vector<Vec2>& subject,
                                 const std::vector<Vec2>& clip);
double convex_polygon_intersection_area_2d(const std::vector<Vec2>& a,
                                           const std::vector<Vec2>& b);

bool point_in_convex_2d(const Vec2& p, const std::vector<Vec2>& poly,
                        double tol = 1e-9);

// PCA-aligned box; planar/degenerate inputs get a kEpsThickness floor on the
// half extents so the volume stays nonzero.
Obb3 obb_from_points(const std::vector<Vec3>& points);

double obb_intersection_volume(const Obb3& a, const Obb3& b);
double obb_iou(const Obb3& a, const Obb3& b);

}  // namespace refit
