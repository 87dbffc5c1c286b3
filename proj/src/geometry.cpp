#include "refit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace refit {

void Plane::basis(Vec3& u, Vec3& v) const {
  // Pick the world axis most orthogonal to the normal as the seed.
  double ax = std::fabs(normal.x), ay = std::fabs(normal.y),
         az = std::fabs(normal.z);
  Vec3 seed = (ax <= ay && ax <= az) ? Vec3{1, 0, 0}
              : (ay <= az)           ? Vec3{0, 1, 0}
                                     : Vec3{0, 0, 1};
  u = normal.cross(seed).normalized();
  v = normal.cross(u);
}

Vec2 Plane::to_plane_2d(const Vec3& p) const {
  Vec3 u, v;
  basis(u, v);
  Vec3 origin = normal * (-d);
  Vec3 r = p - origin;
  return {r.dot(u), r.dot(v)};
}

Vec3 Plane::to_world(const Vec2& q) const {
  Vec3 u, v;
  basis(u, v);
  Vec3 origin = normal * (-d);
  return origin + u * q.x + v * q.y;
}

Aabb3 Aabb3::from_points(const std::vector<Vec3>& pts) {
  if (pts.empty()) throw DegenerateInput("Aabb3 from empty point set");
  Aabb3 b;
  b.min = b.max = pts[0];
  for (const Vec3& p : pts) b.extend(p);
  return b;
}

void Aabb3::extend(const Vec3& p) {
  min.x = std::min(min.x, p.x);
  min.y = std::min(min.y, p.y);
  min.z = std::min(min.z, p.z);
  max.x = std::max(max.x, p.x);
  max.y = std::max(max.y, p.y);
  max.z = std::max(max.z, p.z);
}

bool Aabb3::contains(const Aabb3& o, double tol) const {
  return min.x <= o.min.x + tol && min.y <= o.min.y + tol &&
         min.z <= o.min.z + tol && max.x >= o.max.x - tol &&
         max.y >= o.max.y - tol && max.z >= o.max.z - tol;
}

std::array<Vec3, 8> Obb3::corners() const {
  std::array<Vec3, 8> out;
  int k = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out[k++] = center + axes[0] * (sx * half_extents.x) +
                   axes[1] * (sy * half_extents.y) +
                   axes[2] * (sz * half_extents.z);
  return out;
}

// Cyclic Jacobi sweeps; plenty for 3x3 symmetric input.
SymmetricEigen3 symmetric_eigen3(double xx, double xy, double xz, double yy,
                                 double yz, double zz) {
  double a[3][3] = {{xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz}};
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::fabs(a[0][1]) + std::fabs(a[0][2]) + std::fabs(a[1][2]);
    double diag = std::fabs(a[0][0]) + std::fabs(a[1][1]) + std::fabs(a[2][2]);
    if (off <= 1e-15 * std::max(diag, 1e-300)) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < 3; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a[i][i] < a[j][j]; });

  SymmetricEigen3 out;
  for (int i = 0; i < 3; ++i) {
    int j = order[i];
    out.eigenvalues[i] = a[j][j];
    out.eigenvectors[i] = Vec3{v[0][j], v[1][j], v[2][j]}.normalized();
  }
  return out;
}

namespace {

// Canonical sign: largest-magnitude component positive.
Vec3 canonical_sign(const Vec3& n) {
  double ax = std::fabs(n.x), ay = std::fabs(n.y), az = std::fabs(n.z);
  double lead = (ax >= ay && ax >= az) ? n.x : (ay >= az ? n.y : n.z);
  return lead < 0.0 ? -n : n;
}

}  // namespace

PlaneFit fit_plane_pca(const std::vector<Vec3>& points) {
  if (points.size() < 3)
    throw DegenerateInput("fit_plane_pca: need at least 3 points");

  Vec3 centroid{0, 0, 0};
  for (const Vec3& p : points) centroid += p;
  centroid = centroid / static_cast<double>(points.size());

  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
  for (const Vec3& p : points) {
    Vec3 r = p - centroid;
    xx += r.x * r.x;
    xy += r.x * r.y;
    xz += r.x * r.z;
    yy += r.y * r.y;
    yz += r.y * r.z;
    zz += r.z * r.z;
  }
  double n = static_cast<double>(points.size());
  SymmetricEigen3 eig =
      symmetric_eigen3(xx / n, xy / n, xz / n, yy / n, yz / n, zz / n);

  // Rank < 2 means the points do not span a plane.
  if (eig.eigenvalues[2] < 1e-24 ||
      eig.eigenvalues[1] <= 1e-12 * eig.eigenvalues[2])
    throw DegenerateInput("fit_plane_pca: collinear or coincident points");

  Vec3 normal = canonical_sign(eig.eigenvectors[0]);
  Plane plane = Plane(normal, -normal.dot(centroid));

  double sq = 0.0;
  for (const Vec3& p : points) {
    double sd = plane.signed_distance(p);
    sq += sd * sd;
  }
  return PlaneFit{plane, std::sqrt(sq / n)};
}

std::optional<Line3> intersect_planes(const Plane& a, const Plane& b) {
  Vec3 dir = a.normal.cross(b.normal);
  double len = dir.norm();
  if (len < kEpsParallel) return std::nullopt;
  Vec3 u = dir / len;
  // Point satisfying both plane equations, offset along the line is free.
  Vec3 p = (b.normal.cross(dir) * (-a.d) + dir.cross(a.normal) * (-b.d)) /
           dir.squared_norm();
  return Line3{p, u};
}

std::optional<ConvexPolygon3> clip_polygon_by_halfspace(
    const ConvexPolygon3& poly, const Plane& plane, bool keep_positive) {
  const double sign = keep_positive ? 1.0 : -1.0;
  const size_t n = poly.vertices.size();
  std::vector<Vec3> out;
  out.reserve(n + 1);
  for (size_t i = 0; i < n; ++i) {
    const Vec3& a = poly.vertices[i];
    const Vec3& b = poly.vertices[(i + 1) % n];
    double sa = sign * plane.signed_distance(a);
    double sb = sign * plane.signed_distance(b);
    if (sa >= 0.0) out.push_back(a);
    if ((sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0)) {
      double t = sa / (sa - sb);
      out.push_back(a + (b - a) * t);
    }
  }
  if (out.size() < 3) return std::nullopt;
  ConvexPolygon3 res{std::move(out)};
  if (polygon_area(res) < kEpsArea) return std::nullopt;
  return res;
}

Vec3 polygon_normal(const ConvexPolygon3& poly) {
  Vec3 acc{0, 0, 0};
  const size_t n = poly.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec3& a = poly.vertices[i];
    const Vec3& b = poly.vertices[(i + 1) % n];
    acc += a.cross(b);
  }
  return acc.normalized();
}

double polygon_area(const ConvexPolygon3& poly) {
  Vec3 acc{0, 0, 0};
  const size_t n = poly.vertices.size();
  if (n < 3) return 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec3& a = poly.vertices[i];
    const Vec3& b = poly.vertices[(i + 1) % n];
    acc += a.cross(b);
  }
  return 0.5 * acc.norm();
}

Vec3 polygon_centroid(const ConvexPolygon3& poly) {
  // Area-weighted fan centroid; exact for planar simple polygons.
  const size_t n = poly.vertices.size();
  const Vec3& o = poly.vertices[0];
  Vec3 acc{0, 0, 0};
  double area = 0.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    Vec3 a = poly.vertices[i] - o;
    Vec3 b = poly.vertices[i + 1] - o;
    double w = 0.5 * a.cross(b).norm();
    acc += (o + poly.vertices[i] + poly.vertices[i + 1]) * (w / 3.0);
    area += w;
  }
  if (area < 1e-300) {
    Vec3 m{0, 0, 0};
    for (const Vec3& p : poly.vertices) m += p;
    return m / static_cast<double>(n);
  }
  return acc / area;
}

double polygon_area_2d(const std::vector<Vec2>& poly) {
  double acc = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) acc += poly[i].cross(poly[(i + 1) % n]);
  return 0.5 * acc;
}

std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points) {
  if (points.size() < 3)
    throw DegenerateInput("convex_hull_2d: need at least 3 points");
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Vec2& a, const Vec2& b) {
                             return a.x == b.x && a.y == b.y;
                           }),
               points.end());

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a - o).cross(b - o);
  };

  // Monotone chain; <= drops collinear hull vertices.
  std::vector<Vec2> hull(2 * points.size());
  size_t k = 0;
  for (const Vec2& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  size_t lower = k + 1;
  for (size_t i = points.size(); i-- > 1;) {
    const Vec2& p = points[i - 1];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  if (hull.size() < 3)
    throw DegenerateInput("convex_hull_2d: collinear input");
  return hull;
}

std::vector<Vec2> clip_convex_2d(const std::vector<Vec2>& subject,
                                 const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  const size_t m = clip.size();
  for (size_t e = 0; e < m && !out.empty(); ++e) {
    const Vec2& ca = clip[e];
    const Vec2& cb = clip[(e + 1) % m];
    Vec2 dir = cb - ca;
    std::vector<Vec2> in;
    in.swap(out);
    const size_t n = in.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& a = in[i];
      const Vec2& b = in[(i + 1) % n];
      double sa = dir.cross(a - ca);
      double sb = dir.cross(b - ca);
      if (sa >= 0.0) out.push_back(a);
      if ((sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0)) {
        double t = sa / (sa - sb);
        out.push_back(a + (b - a) * t);
      }
    }
  }
  return out;
}

double convex_polygon_intersection_area_2d(const std::vector<Vec2>& a,
                                           const std::vector<Vec2>& b) {
  std::vector<Vec2> isect = clip_convex_2d(a, b);
  if (isect.size() < 3) return 0.0;
  return std::max(0.0, polygon_area_2d(isect));
}

bool point_in_convex_2d(const Vec2& p, const std::vector<Vec2>& poly,
                        double tol) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Vec2 e = poly[(i + 1) % n] - poly[i];
    if (e.cross(p - poly[i]) < -tol) return false;
  }
  return true;
}

Obb3 obb_from_points(const std::vector<Vec3>& points) {
  if (points.size() < 3)
    throw DegenerateInput("obb_from_points: need at least 3 points");

  Vec3 centroid{0, 0, 0};
  for (const Vec3& p : points) centroid += p;
  centroid = centroid / static_cast<double>(points.size());

  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
  for (const Vec3& p : points) {
    Vec3 r = p - centroid;
    xx += r.x * r.x;
    xy += r.x * r.y;
    xz += r.x * r.z;
    yy += r.y * r.y;
    yz += r.y * r.z;
    zz += r.z * r.z;
  }
  SymmetricEigen3 eig = symmetric_eigen3(xx, xy, xz, yy, yz, zz);

  Obb3 box;
  box.axes = {canonical_sign(eig.eigenvectors[2]),
              canonical_sign(eig.eigenvectors[1]),
              canonical_sign(eig.eigenvectors[0])};
  // Right-handed frame.
  box.axes[2] = box.axes[0].cross(box.axes[1]);

  Vec3 lo{std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec3 hi{-lo.x, -lo.y, -lo.z};
  for (const Vec3& p : points) {
    Vec3 r = p - centroid;
    Vec3 t{r.dot(box.axes[0]), r.dot(box.axes[1]), r.dot(box.axes[2])};
    lo = Vec3{std::min(lo.x, t.x), std::min(lo.y, t.y), std::min(lo.z, t.z)};
    hi = Vec3{std::max(hi.x, t.x), std::max(hi.y, t.y), std::max(hi.z, t.z)};
  }
  Vec3 mid = (lo + hi) * 0.5;
  box.center = centroid + box.axes[0] * mid.x + box.axes[1] * mid.y +
               box.axes[2] * mid.z;
  box.half_extents = {std::max((hi.x - lo.x) * 0.5, kEpsThickness),
                      std::max((hi.y - lo.y) * 0.5, kEpsThickness),
                      std::max((hi.z - lo.z) * 0.5, kEpsThickness)};
  return box;
}

namespace {

struct PolyFace {
  std::vector<Vec3> pts;
};

std::vector<PolyFace> box_faces(const Obb3& b) {
  auto c = b.corners();
  // Corner order: bit2 = x-axis sign, bit1 = y, bit0 = z (from corners()).
  auto f = [&](int a, int b_, int c_, int d) {
    return PolyFace{{c[a], c[b_], c[c_], c[d]}};
  };
  return {
      f(0, 1, 3, 2),  // -x
      f(4, 6, 7, 5),  // +x
      f(0, 4, 5, 1),  // -y
      f(2, 3, 7, 6),  // +y
      f(0, 2, 6, 4),  // -z
      f(1, 5, 7, 3),  // +z
  };
}

// Clips a convex polyhedron (face soup) by the halfspace sd <= 0, closing the
// cut with a cap face when material was actually removed.
std::vector<PolyFace> clip_polyhedron(const std::vector<PolyFace>& faces,
                                      const Plane& plane, double eps) {
  std::vector<PolyFace> out;
  std::vector<Vec3> rim;
  bool cut_any = false;
  for (const PolyFace& f : faces) {
    const size_t n = f.pts.size();
    PolyFace nf;
    for (size_t i = 0; i < n; ++i) {
      const Vec3& a = f.pts[i];
      const Vec3& b = f.pts[(i + 1) % n];
      double sa = plane.signed_distance(a);
      double sb = plane.signed_distance(b);
      if (sa > eps) cut_any = true;
      if (sa <= eps) {
        nf.pts.push_back(a);
        if (std::fabs(sa) <= eps) rim.push_back(a);
      }
      if ((sa > eps && sb < -eps) || (sa < -eps && sb > eps)) {
        double t = sa / (sa - sb);
        Vec3 x = a + (b - a) * t;
        nf.pts.push_back(x);
        rim.push_back(x);
      }
    }
    if (nf.pts.size() >= 3) out.push_back(std::move(nf));
  }
  if (cut_any && rim.size() >= 3) {
    // Cap: hull of rim points in the cutting plane.
    std::vector<Vec2> rim2;
    rim2.reserve(rim.size());
    for (const Vec3& p : rim) rim2.push_back(plane.to_plane_2d(p));
    try {
      std::vector<Vec2> hull = convex_hull_2d(rim2);
      PolyFace cap;
      for (const Vec2& q : hull) cap.pts.push_back(plane.to_world(q));
      out.push_back(std::move(cap));
    } catch (const DegenerateInput&) {
      // Rim collapsed to a segment; no cap needed.
    }
  }
  return out;
}

double polyhedron_volume(const std::vector<PolyFace>& faces) {
  if (faces.empty()) return 0.0;
  Vec3 ref{0, 0, 0};
  size_t count = 0;
  for (const PolyFace& f : faces)
    for (const Vec3& p : f.pts) {
      ref += p;
      ++count;
    }
  ref = ref / static_cast<double>(count);

  // Sum of pyramid volumes from an interior point; orientation-insensitive
  // because each face height is taken as a magnitude (convex body).
  double vol = 0.0;
  for (const PolyFace& f : faces) {
    const size_t n = f.pts.size();
    if (n < 3) continue;
    for (size_t i = 1; i + 1 < n; ++i) {
      Vec3 a = f.pts[0] - ref;
      Vec3 b = f.pts[i] - ref;
      Vec3 c = f.pts[i + 1] - ref;
      vol += std::fabs(a.dot(b.cross(c))) / 6.0;
    }
  }
  return vol;
}

}  // namespace

double obb_intersection_volume(const Obb3& a, const Obb3& b) {
  double scale = std::max({a.half_extents.x, a.half_extents.y,
                           a.half_extents.z, b.half_extents.x,
                           b.half_extents.y, b.half_extents.z, 1.0});
  const double eps = 1e-12 * scale;
  std::vector<PolyFace> poly = box_faces(a);
  for (int axis = 0; axis < 3 && !poly.empty(); ++axis) {
    double h = b.half_extents[axis];
    const Vec3& u = b.axes[axis];
    Vec3 p_hi = b.center + u * h;
    Vec3 p_lo = b.center - u * h;
    poly = clip_polyhedron(poly, Plane::from_point_normal(p_hi, u), eps);
    if (poly.empty()) break;
    poly = clip_polyhedron(poly, Plane::from_point_normal(p_lo, -u), eps);
  }
  return polyhedron_volume(poly);
}

double obb_iou(const Obb3& a, const Obb3& b) {
  double inter = obb_intersection_volume(a, b);
  double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace refit
