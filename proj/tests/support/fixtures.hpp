#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "refit/geometry.hpp"
#include "refit/model.hpp"
#include "refit/pointcloud.hpp"

namespace refit::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("refit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Axis-aligned box as 6 outward-wound quads.
inline std::vector<MeshFace> box_mesh(const Vec3& lo, const Vec3& hi) {
  auto corner = [&](int sx, int sy, int sz) {
    return Vec3{sx ? hi.x : lo.x, sy ? hi.y : lo.y, sz ? hi.z : lo.z};
  };
  std::vector<std::vector<Vec3>> quads = {
      {corner(0, 0, 0), corner(0, 0, 1), corner(0, 1, 1), corner(0, 1, 0)},
      {corner(1, 0, 0), corner(1, 1, 0), corner(1, 1, 1), corner(1, 0, 1)},
      {corner(0, 0, 0), corner(1, 0, 0), corner(1, 0, 1), corner(0, 0, 1)},
      {corner(0, 1, 0), corner(0, 1, 1), corner(1, 1, 1), corner(1, 1, 0)},
      {corner(0, 0, 0), corner(0, 1, 0), corner(1, 1, 0), corner(1, 0, 0)},
      {corner(0, 0, 1), corner(1, 0, 1), corner(1, 1, 1), corner(0, 1, 1)},
  };
  std::vector<MeshFace> faces;
  for (auto& q : quads) faces.push_back(MeshFace{std::move(q), {}});
  return faces;
}

inline void write_obj(const std::filesystem::path& path,
                      const std::vector<MeshFace>& faces,
                      bool triangulate = false) {
  std::ofstream out(path);
  std::vector<Vec3> verts;
  auto vertex_id = [&](const Vec3& p) {
    for (std::size_t i = 0; i < verts.size(); ++i)
      if ((verts[i] - p).norm() < 1e-9) return static_cast<int>(i) + 1;
    verts.push_back(p);
    return static_cast<int>(verts.size());
  };
  std::vector<std::vector<int>> fids;
  for (const MeshFace& f : faces) {
    std::vector<int> ids;
    for (const Vec3& p : f.loop) ids.push_back(vertex_id(p));
    if (triangulate && ids.size() > 3) {
      for (std::size_t i = 1; i + 1 < ids.size(); ++i)
        fids.push_back({ids[0], ids[i], ids[i + 1]});
    } else {
      fids.push_back(ids);
    }
  }
  char buf[128];
  for (const Vec3& v : verts) {
    std::snprintf(buf, sizeof(buf), "v %.9f %.9f %.9f\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& ids : fids) {
    out << "f";
    for (int id : ids) out << ' ' << id;
    out << "\n";
  }
}

inline void write_box_obj(const std::filesystem::path& path, const Vec3& lo,
                          const Vec3& hi, bool triangulate = false) {
  write_obj(path, box_mesh(lo, hi), triangulate);
}

// Points over a rectangle of a plane: origin + s*u_dir + t*v_dir with
// (s, t) uniform in [0,su]x[0,sv], Gaussian noise along the plane normal.
inline PointCloud sample_plane_cloud(const Vec3& origin, const Vec3& u_dir,
                                     const Vec3& v_dir, double su, double sv,
                                     std::size_t count, double sigma,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(0.0, su), vs(0.0, sv);
  std::normal_distribution<double> noise(0.0, sigma);
  Vec3 n = u_dir.cross(v_dir).normalized();
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 p = origin + u_dir * us(rng) + v_dir * vs(rng);
    if (sigma > 0.0) p += n * noise(rng);
    cloud.points.push_back(p);
  }
  return cloud;
}

inline void write_xyz(const std::filesystem::path& path,
                      const PointCloud& cloud) {
  std::ofstream out(path);
  char buf[128];
  for (const Vec3& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9f %.9f %.9f\n", p.x, p.y, p.z);
    out << buf;
  }
}

// Shifted-facade building. True building spans [0,dx]x[0,dy]x[0,dz]; the
// coarse model's x=0 facade is pushed inward by `shift` and the cloud samples
// the true facade plane (x=0), optionally rotated by rot_deg about the
// vertical axis through the facade center and restricted to the first
// `coverage` fraction of the facade width.
struct ShiftedFacadeFixture {
  std::vector<MeshFace> coarse;
  PointCloud cloud;
  Plane true_facade;
  double shift = 0.0;
};

inline ShiftedFacadeFixture make_shifted_facade(
    double dx, double dy, double dz, double shift, double rot_deg,
    double coverage, std::size_t points, double sigma, std::uint64_t seed) {
  ShiftedFacadeFixture fx;
  fx.shift = shift;
  fx.coarse = box_mesh(Vec3{shift, 0, 0}, Vec3{dx, dy, dz});

  double theta = rot_deg * std::numbers::pi / 180.0;
  Vec3 n{std::cos(theta), std::sin(theta), 0.0};
  Vec3 anchor{0.0, dy / 2.0, 0.0};
  fx.true_facade = Plane::from_point_normal(anchor, n);

  Vec3 u{-std::sin(theta), std::cos(theta), 0.0};  // horizontal, in-plane
  Vec3 v{0.0, 0.0, 1.0};
  Vec3 origin = anchor - u * (dy / 2.0);
  fx.cloud = sample_plane_cloud(origin, u, v, dy * coverage, dz, points,
                                sigma, seed);
  return fx;
}

}  // namespace refit::testing
