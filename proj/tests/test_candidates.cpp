#include <doctest.h>

#include <map>
#include <numbers>
#include <random>
#include <set>

#include "refit/candidates.hpp"
#include "support/oracles.hpp"

using namespace refit;
using namespace refit::testing;

namespace {

SupportingPlane sp(const Vec3& n, double d) {
  static int counter = 0;
  SupportingPlane p;
  p.plane = Plane(n.normalized(), d);
  p.origins.push_back({PlaneOrigin::Kind::coarse, counter++});
  return p;
}

// The six axis planes of the unit cube.
std::vector<SupportingPlane> cube_planes() {
  return {sp({1, 0, 0}, 0), sp({1, 0, 0}, -1), sp({0, 1, 0}, 0),
          sp({0, 1, 0}, -1), sp({0, 0, 1}, 0), sp({0, 0, 1}, -1)};
}

Aabb3 cube_bbox() { return Aabb3{{-0.1, -0.1, -0.1}, {1.1, 1.1, 1.1}}; }

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 d = b - a;
  double t = std::clamp((p - a).dot(d) / d.dot(d), 0.0, 1.0);
  return (p - (a + d * t)).norm();
}

double point_to_polygon_boundary(const Vec3& p, const ConvexPolygon3& poly) {
  double best = std::numeric_limits<double>::max();
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, point_segment_distance(p, poly.vertices[i],
                                                 poly.vertices[(i + 1) % n]));
  return best;
}

// Independent cell-count oracle for one plane: cells = 1 + chords +
// interior chord intersections (general position inside a convex crop).
int expected_cells_oracle(const std::vector<SupportingPlane>& planes,
                          std::size_t pi, const Aabb3& bbox) {
  const Plane& plane = planes[pi].plane;
  // Crop polygon in 2D, built via generic convex clipping.
  Vec3 u, v;
  plane.basis(u, v);
  Vec3 bc = bbox.center();
  Vec3 on_plane = bc - plane.normal * plane.signed_distance(bc);
  double r = (bbox.max - bbox.min).norm() + 1.0;
  Vec2 c2 = plane.to_plane_2d(on_plane);
  std::vector<Vec2> crop = {c2 + Vec2{-r, -r}, c2 + Vec2{r, -r},
                            c2 + Vec2{r, r}, c2 + Vec2{-r, r}};
  auto halfplane = [&](const Vec3& wn, double wd) {
    // Keep wn . p + wd <= 0 in plane coordinates.
    std::vector<Vec2> out;
    const std::size_t n = crop.size();
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 a = crop[i], b = crop[(i + 1) % n];
      double sa = wn.dot(plane.to_world(a)) + wd;
      double sb = wn.dot(plane.to_world(b)) + wd;
      if (sa <= 0) out.push_back(a);
      if ((sa < 0 && sb > 0) || (sa > 0 && sb < 0))
        out.push_back(a + (b - a) * (sa / (sa - sb)));
    }
    crop = out;
  };
  halfplane({-1, 0, 0}, bbox.min.x);
  halfplane({1, 0, 0}, -bbox.max.x);
  halfplane({0, -1, 0}, bbox.min.y);
  halfplane({0, 1, 0}, -bbox.max.y);
  halfplane({0, 0, -1}, bbox.min.z);
  halfplane({0, 0, 1}, -bbox.max.z);
  if (crop.size() < 3) return 0;

  // Chords: clip each intersection line against the crop polygon.
  struct Chord {
    Vec2 p, d;
    double t0, t1;
  };
  std::vector<Chord> chords;
  for (std::size_t pj = 0; pj < planes.size(); ++pj) {
    if (pj == pi) continue;
    auto line = intersect_planes(plane, planes[pj].plane);
    if (!line) continue;
    Vec2 p2 = plane.to_plane_2d(line->point);
    Vec2 d2{line->direction.dot(u), line->direction.dot(v)};
    double t0 = -1e30, t1 = 1e30;
    bool empty = false;
    const std::size_t n = crop.size();
    for (std::size_t i = 0; i < n && !empty; ++i) {
      Vec2 a = crop[i], b = crop[(i + 1) % n];
      Vec2 e = b - a;
      // Interior (CCW crop): e x (x - a) >= 0 with x = p2 + t*d2.
      double denom = e.cross(d2);
      double value0 = e.cross(p2 - a);
      if (std::fabs(denom) < 1e-14) {
        if (value0 < 0) empty = true;  // parallel and outside
        continue;
      }
      double t = -value0 / denom;
      if (denom > 0)
        t0 = std::max(t0, t);
      else
        t1 = std::min(t1, t);
    }
    if (empty || t1 - t0 < 1e-9) continue;
    chords.push_back({p2, d2, t0, t1});
  }

  int intersections = 0;
  for (std::size_t i = 0; i < chords.size(); ++i)
    for (std::size_t j = i + 1; j < chords.size(); ++j) {
      double denom = chords[i].d.cross(chords[j].d);
      if (std::fabs(denom) < 1e-12) continue;
      Vec2 dp = chords[j].p - chords[i].p;
      double ti = dp.cross(chords[j].d) / denom;
      double tj = dp.cross(chords[i].d) / denom;
      if (ti > chords[i].t0 + 1e-9 && ti < chords[i].t1 - 1e-9 &&
          tj > chords[j].t0 + 1e-9 && tj < chords[j].t1 - 1e-9)
        ++intersections;
    }
  return 1 + static_cast<int>(chords.size()) + intersections;
}

}  // namespace

TEST_CASE("merge_planes averages near-coplanar planes") {
  double a = 3.0 * std::numbers::pi / 180.0;
  std::vector<SupportingPlane> planes = {
      sp({0, 0, 1}, 0), sp({std::sin(a), 0, std::cos(a)}, 0)};
  auto merged = merge_planes(planes, 5.0, 0.2);
  REQUIRE(merged.size() == 1);
  Vec3 expect =
      (Vec3{0, 0, 1} + Vec3{std::sin(a), 0, std::cos(a)}).normalized();
  CHECK(merged[0].plane.normal.dot(expect) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(merged[0].plane.d == doctest::Approx(0.0));
  CHECK(merged[0].origins.size() == 2);
}

TEST_CASE("merge_planes keeps parallel planes apart beyond d_merge") {
  std::vector<SupportingPlane> planes = {sp({0, 0, 1}, 0), sp({0, 0, 1}, -5)};
  CHECK(merge_planes(planes, 5.0, 0.3).size() == 2);
  std::vector<SupportingPlane> one = {sp({0, 0, 1}, 0)};
  auto same = merge_planes(one, 5.0, 0.3);
  REQUIRE(same.size() == 1);
  CHECK(same[0].plane.normal.z == doctest::Approx(1.0));
}

TEST_CASE("merge_planes handles opposite-sign normals") {
  std::vector<SupportingPlane> planes = {sp({0, 0, 1}, 0), sp({0, 0, -1}, 0)};
  auto merged = merge_planes(planes, 5.0, 0.2);
  CHECK(merged.size() == 1);
}

TEST_CASE("cube arrangement: 54 faces, per-plane partition, edge incidence") {
  CandidateSet set = generate_candidates(cube_planes(), cube_bbox());
  CHECK(set.faces.size() == 54);
  CHECK(set.dropped_planes.empty());

  // Each plane contributes 9 cells whose areas sum to the 1.2^2 crop.
  std::map<int, double> area_sum;
  std::map<int, int> cell_count;
  for (const CandidateFace& f : set.faces) {
    area_sum[f.supporting_plane] += f.area;
    cell_count[f.supporting_plane] += 1;
    CHECK(f.area == doctest::Approx(polygon_area(f.polygon)).epsilon(1e-9));
  }
  for (const auto& [plane, count] : cell_count) CHECK(count == 9);
  for (const auto& [plane, total] : area_sum)
    CHECK(total == doctest::Approx(1.44).epsilon(1e-6));

  // 12 cube-edge lines x 3 intervals with 4 incident faces; 24 crop-boundary
  // lines x 3 intervals with a single incident face.
  int four = 0, one = 0;
  for (const CandidateEdge& e : set.edges) {
    if (e.incident_faces.size() == 4) ++four;
    if (e.incident_faces.size() == 1) ++one;
  }
  CHECK(four == 36);
  CHECK(one == 72);
  CHECK(set.edges.size() == 108);
}

TEST_CASE("every incident face contains its candidate edge on the boundary") {
  CandidateSet set = generate_candidates(cube_planes(), cube_bbox());
  for (const CandidateEdge& e : set.edges)
    for (int f : e.incident_faces) {
      CHECK(point_to_polygon_boundary(e.a, set.faces[f].polygon) < 1e-6);
      CHECK(point_to_polygon_boundary(e.b, set.faces[f].polygon) < 1e-6);
    }
}

TEST_CASE("tetrahedron planes partition into the oracle cell counts") {
  std::vector<SupportingPlane> planes = {
      sp({0, 0, 1}, 0),
      sp({0, -1, 0}, 0),
      sp({-1, 0, 0}, 0),
      sp({1, 1, 1}, -1.0),
  };
  Aabb3 bbox{{-0.2, -0.2, -0.2}, {1.2, 1.2, 1.2}};
  CandidateSet set = generate_candidates(planes, bbox);

  std::map<int, int> cell_count;
  for (const CandidateFace& f : set.faces) cell_count[f.supporting_plane]++;
  for (std::size_t pi = 0; pi < planes.size(); ++pi)
    CHECK(cell_count[static_cast<int>(pi)] ==
          expected_cells_oracle(planes, pi, bbox));
}

TEST_CASE("random plane arrangements match the oracle counts and partition") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<SupportingPlane> planes;
    for (int i = 0; i < 5; ++i) {
      Vec3 n{u(rng), u(rng), u(rng)};
      if (n.norm() < 0.3) n = Vec3{1, 0, 0};
      planes.push_back(sp(n, 0.8 * u(rng)));
    }
    Aabb3 bbox{{-1, -1, -1}, {1, 1, 1}};
    CandidateSet set = generate_candidates(planes, bbox);

    std::map<int, int> cell_count;
    std::map<int, double> area_sum;
    for (const CandidateFace& f : set.faces) {
      cell_count[f.supporting_plane]++;
      area_sum[f.supporting_plane] += f.area;
    }
    for (std::size_t pi = 0; pi < planes.size(); ++pi) {
      bool dropped = false;
      for (int d : set.dropped_planes)
        if (d == static_cast<int>(pi)) dropped = true;
      if (dropped) continue;
      CHECK(cell_count[static_cast<int>(pi)] ==
            expected_cells_oracle(planes, pi, bbox));
    }
  }
}

TEST_CASE("three planes produce a set without raising") {
  std::vector<SupportingPlane> planes = {sp({1, 0, 0}, 0), sp({0, 1, 0}, 0),
                                         sp({0, 0, 1}, 0)};
  Aabb3 bbox{{-1, -1, -1}, {1, 1, 1}};
  CandidateSet set = generate_candidates(planes, bbox);
  CHECK(set.faces.size() == 12);  // each plane split into 4 quadrant cells
}

TEST_CASE("plane missing the bbox is dropped with a warning entry") {
  std::vector<SupportingPlane> planes = cube_planes();
  planes.push_back(sp({0, 0, 1}, -50.0));  // far above the box
  CandidateSet set = generate_candidates(planes, cube_bbox());
  REQUIRE(set.dropped_planes.size() == 1);
  CHECK(set.dropped_planes[0] == 6);
  CHECK(set.faces.size() == 54);
}

TEST_CASE("candidate generation is deterministic") {
  CandidateSet a = generate_candidates(cube_planes(), cube_bbox());
  CandidateSet b = generate_candidates(cube_planes(), cube_bbox());
  REQUIRE(a.faces.size() == b.faces.size());
  for (std::size_t i = 0; i < a.faces.size(); ++i) {
    CHECK(a.faces[i].supporting_plane == b.faces[i].supporting_plane);
    REQUIRE(a.faces[i].polygon.vertices.size() ==
            b.faces[i].polygon.vertices.size());
    for (std::size_t k = 0; k < a.faces[i].polygon.vertices.size(); ++k)
      CHECK((a.faces[i].polygon.vertices[k] - b.faces[i].polygon.vertices[k])
                .norm() == 0.0);
  }
  REQUIRE(a.edges.size() == b.edges.size());
  for (std::size_t e = 0; e < a.edges.size(); ++e)
    CHECK(a.edges[e].incident_faces == b.edges[e].incident_faces);
}
