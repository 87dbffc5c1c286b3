#include <doctest.h>

#include <random>

#include <json.hpp>

#include "refit/evaluation.hpp"
#include "refit/mesh_ops.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace refit;
using namespace refit::testing;

namespace {

std::vector<std::array<Vec3, 3>> mesh_triangles(
    const std::vector<MeshFace>& faces) {
  IndexedMesh mesh = weld_faces(faces, kEpsWeld);
  std::vector<std::array<Vec3, 3>> tris;
  for (const auto& loop : mesh.faces)
    for (const auto& [i, j, k] : triangulate_loop(mesh.vertices, loop))
      tris.push_back({mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]});
  return tris;
}

Vec3 rotate_z(const Vec3& p, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

}  // namespace

TEST_CASE("points on the surface have zero distance") {
  std::vector<MeshFace> cube = box_mesh({0, 0, 0}, {1, 1, 1});
  PointCloud cloud;
  cloud.points = {{0.5, 0.5, 0.0}, {0.0, 0.3, 0.7}, {1.0, 1.0, 1.0}};
  C2MStats stats = c2m(cloud, cube);
  CHECK(stats.rmse < 1e-12);
  CHECK(stats.mae < 1e-12);
}

TEST_CASE("constant offset along a wall normal gives exact statistics") {
  std::vector<MeshFace> cube = box_mesh({0, 0, 0}, {10, 10, 8});
  PointCloud cloud;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uy(1.0, 9.0), uz(1.0, 7.0);
  for (int i = 0; i < 100; ++i)
    cloud.points.push_back({-0.1, uy(rng), uz(rng)});  // outside the x=0 wall

  C2MStats stats = c2m(cloud, cube);
  CHECK(stats.rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(stats.mae == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(stats.mean_signed == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(stats.std < 1e-7);
}

TEST_CASE("c2m ties out against the brute-force triangle loop") {
  std::vector<MeshFace> cube = box_mesh({0, 0, 0}, {2, 3, 1});
  std::vector<std::array<Vec3, 3>> tris = mesh_triangles(cube);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 4.0);
  PointCloud cloud;
  for (int i = 0; i < 200; ++i)
    cloud.points.push_back({u(rng), u(rng), u(rng)});

  C2MStats stats = c2m(cloud, cube, /*keep_per_point=*/true);
  REQUIRE(stats.per_point_distances.size() == cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    double expect =
        min_point_mesh_distance_bruteforce(cloud.points[i], tris);
    CHECK(std::fabs(stats.per_point_distances[i]) ==
          doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(stats.rmse ==
        doctest::Approx(c2m_rmse_bruteforce(cloud.points, tris)).epsilon(1e-9));
}

TEST_CASE("rmse identity and mae bound hold") {
  std::vector<MeshFace> cube = box_mesh({0, 0, 0}, {3, 3, 3});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 4.0);
  PointCloud cloud;
  for (int i = 0; i < 500; ++i) cloud.points.push_back({u(rng), u(rng), u(rng)});
  C2MStats stats = c2m(cloud, cube);
  CHECK(stats.rmse * stats.rmse ==
        doctest::Approx(stats.mean_signed * stats.mean_signed +
                        stats.std * stats.std)
            .epsilon(1e-9));
  CHECK(stats.mae <= stats.rmse + 1e-12);
  CHECK(stats.rmse >= std::fabs(stats.mean_signed) - 1e-12);
}

TEST_CASE("c2m is invariant under joint rigid transforms") {
  std::vector<MeshFace> cube = box_mesh({0, 0, 0}, {2, 2, 2});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  PointCloud cloud;
  for (int i = 0; i < 100; ++i) cloud.points.push_back({u(rng), u(rng), u(rng)});
  C2MStats base = c2m(cloud, cube);

  double angle = 0.7;
  Vec3 shift{13.0, -4.0, 2.5};
  std::vector<MeshFace> moved_mesh = cube;
  for (MeshFace& f : moved_mesh)
    for (Vec3& p : f.loop) p = rotate_z(p, angle) + shift;
  PointCloud moved_cloud;
  for (const Vec3& p : cloud.points)
    moved_cloud.points.push_back(rotate_z(p, angle) + shift);

  C2MStats moved = c2m(moved_cloud, moved_mesh);
  CHECK(moved.rmse == doctest::Approx(base.rmse).epsilon(1e-9));
  CHECK(moved.mae == doctest::Approx(base.mae).epsilon(1e-9));
  CHECK(moved.std == doctest::Approx(base.std).epsilon(1e-9));
}

TEST_CASE("centroid offset reduction on the analytic box fixture") {
  std::vector<MeshFace> init = box_mesh({0.5, 0, 0}, {10, 10, 8});
  std::vector<MeshFace> refined = box_mesh({0, 0, 0}, {10, 10, 8});

  // Deterministic grid cloud on the true facade plane x = 0.
  PointCloud cloud;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 16; ++j)
      cloud.points.push_back({0.0, 10.0 * i / 20.0, 8.0 * j / 16.0});

  CHECK(centroid_offset_reduction(cloud, init, init) ==
        doctest::Approx(0.0).epsilon(1e-12));

  double delta = centroid_offset_reduction(cloud, init, refined);
  CHECK(delta == doctest::Approx(0.25).epsilon(1e-6));

  // Moving away from the cloud flips the sign.
  CHECK(centroid_offset_reduction(cloud, refined, init) ==
        doctest::Approx(-0.25).epsilon(1e-6));
}

TEST_CASE("validate_topology verdicts") {
  std::vector<MeshFace> cube = box_mesh({0, 0, 0}, {1, 1, 1});
  ValidityReport closed = validate_topology(cube);
  CHECK(closed.watertight);
  CHECK(closed.manifold);
  CHECK(closed.boundary_edge_count == 0);
  CHECK(closed.non_manifold_edge_count == 0);

  std::vector<MeshFace> open = cube;
  open.pop_back();
  ValidityReport holed = validate_topology(open);
  CHECK_FALSE(holed.watertight);
  CHECK_FALSE(holed.manifold);
  CHECK(holed.boundary_edge_count == 4);

  // Two cubes sharing exactly one edge.
  std::vector<MeshFace> bowtie = box_mesh({0, 0, 0}, {1, 1, 1});
  std::vector<MeshFace> other = box_mesh({1, 1, 0}, {2, 2, 1});
  bowtie.insert(bowtie.end(), other.begin(), other.end());
  ValidityReport pinched = validate_topology(bowtie);
  CHECK(pinched.non_manifold_edge_count >= 1);
  CHECK_FALSE(pinched.manifold);
  CHECK_FALSE(pinched.watertight);
}

TEST_CASE("two disjoint shells are watertight") {
  std::vector<MeshFace> shells = box_mesh({0, 0, 0}, {1, 1, 1});
  std::vector<MeshFace> far = box_mesh({5, 5, 5}, {6, 6, 6});
  shells.insert(shells.end(), far.begin(), far.end());
  CHECK(validate_topology(shells).watertight);
}

TEST_CASE("report json carries the exact schema fields") {
  EvaluationReport report;
  report.c2m_before.rmse = 0.22;
  report.c2m_after.rmse = 0.14;
  report.delta_d = 0.055;
  report.validity_after.watertight = true;
  auto dir = temp_dir("report");
  write_report_json(report, dir / "r.json");

  std::ifstream in(dir / "r.json");
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["schema_version"] == 1);
  for (const char* section : {"c2m_before", "c2m_after"})
    for (const char* field : {"rmse", "mae", "mean_signed", "std"})
      CHECK(j[section].contains(field));
  CHECK(j.contains("delta_d"));
  for (const char* section : {"validity_before", "validity_after"})
    for (const char* field :
         {"watertight", "manifold", "boundary_edge_count",
          "non_manifold_edge_count", "self_intersection_checked"})
      CHECK(j[section].contains(field));
  CHECK(j["validity_after"]["watertight"] == true);
}
