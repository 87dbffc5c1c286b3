#include "refit/mesh_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>

namespace refit {

VertexWelder::VertexWelder(double tol) : tol_(tol) {}

namespace {

std::uint64_t grid_key(long long cx, long long cy, long long cz) {
  // FNV-style mix of the three cell coordinates.
  std::uint64_t h = 1469598103934665603ull;
  for (long long v : {cx, cy, cz}) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

int VertexWelder::add(const Vec3& p) {
  long long cx = static_cast<long long>(std::floor(p.x / tol_));
  long long cy = static_cast<long long>(std::floor(p.y / tol_));
  long long cz = static_cast<long long>(std::floor(p.z / tol_));
  for (long long dx = -1; dx <= 1; ++dx)
    for (long long dy = -1; dy <= 1; ++dy)
      for (long long dz = -1; dz <= 1; ++dz) {
        auto it = grid_.find(grid_key(cx + dx, cy + dy, cz + dz));
        if (it == grid_.end()) continue;
        for (int id : it->second)
          if ((points_[id] - p).norm() <= tol_) return id;
      }
  int id = static_cast<int>(points_.size());
  points_.push_back(p);
  grid_[grid_key(cx, cy, cz)].push_back(id);
  return id;
}

namespace {

std::vector<int> weld_one_loop(VertexWelder& welder,
                               const std::vector<Vec3>& loop) {
  std::vector<int> ids;
  ids.reserve(loop.size());
  for (const Vec3& p : loop) {
    int id = welder.add(p);
    if (!ids.empty() && ids.back() == id) continue;
    ids.push_back(id);
  }
  while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
  return ids;
}

}  // namespace

IndexedMesh weld_loops(const std::vector<std::vector<Vec3>>& loops,
                       double tol) {
  VertexWelder welder(tol);
  IndexedMesh mesh;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    std::vector<int> ids = weld_one_loop(welder, loops[l]);
    std::vector<int> distinct = ids;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    if (distinct.size() < 3) continue;
    mesh.faces.push_back(std::move(ids));
    mesh.source.push_back(static_cast<int>(l));
  }
  mesh.vertices = welder.points();
  return mesh;
}

IndexedMesh weld_faces(const std::vector<MeshFace>& faces, double tol) {
  std::vector<std::vector<Vec3>> loops;
  loops.reserve(faces.size());
  for (const MeshFace& f : faces) loops.push_back(f.loop);
  return weld_loops(loops, tol);
}

double mesh_signed_volume(const IndexedMesh& mesh) {
  double vol = 0.0;
  for (const auto& loop : mesh.faces) {
    for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
      const Vec3& a = mesh.vertices[loop[0]];
      const Vec3& b = mesh.vertices[loop[i]];
      const Vec3& c = mesh.vertices[loop[i + 1]];
      vol += a.dot(b.cross(c)) / 6.0;
    }
  }
  return vol;
}

bool orient_faces_consistently(IndexedMesh& mesh) {
  const std::size_t nf = mesh.faces.size();
  // Undirected edge -> list of (face, direction as stored).
  std::map<std::pair<int, int>, std::vector<std::pair<int, bool>>> edge_uses;
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& loop = mesh.faces[f];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      int a = loop[i], b = loop[(i + 1) % loop.size()];
      bool forward = a < b;
      edge_uses[{std::min(a, b), std::max(a, b)}].push_back(
          {static_cast<int>(f), forward});
    }
  }

  std::vector<int> flip(nf, -1);  // -1 unvisited, 0 keep, 1 flip
  bool ok = true;
  for (std::size_t seed = 0; seed < nf; ++seed) {
    if (flip[seed] != -1) continue;
    flip[seed] = 0;
    std::deque<int> queue{static_cast<int>(seed)};
    while (!queue.empty()) {
      int f = queue.front();
      queue.pop_front();
      const auto& loop = mesh.faces[f];
      for (std::size_t i = 0; i < loop.size(); ++i) {
        int a = loop[i], b = loop[(i + 1) % loop.size()];
        auto& uses = edge_uses[{std::min(a, b), std::max(a, b)}];
        if (uses.size() != 2) continue;  // boundary or non-manifold
        for (auto [g, gdir] : uses) {
          if (g == f) continue;
          bool fdir = a < b;
          // Effective directions after pending flips must be opposite.
          bool f_eff = fdir != (flip[f] == 1);
          bool g_eff_keep = gdir;
          int want = (g_eff_keep == f_eff) ? 1 : 0;
          if (flip[g] == -1) {
            flip[g] = want;
            queue.push_back(g);
          } else if (flip[g] != want) {
            ok = false;
          }
        }
      }
    }
  }

  for (std::size_t f = 0; f < nf; ++f)
    if (flip[f] == 1) std::reverse(mesh.faces[f].begin(), mesh.faces[f].end());

  if (mesh_signed_volume(mesh) < 0.0)
    for (auto& loop : mesh.faces) std::reverse(loop.begin(), loop.end());
  return ok;
}

namespace {

bool loop_is_convex_2d(const std::vector<Vec2>& pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 e0 = pts[(i + 1) % n] - pts[i];
    Vec2 e1 = pts[(i + 2) % n] - pts[(i + 1) % n];
    if (e0.cross(e1) < -1e-12) return false;
  }
  return true;
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_loop(
    const std::vector<Vec3>& vertices, const std::vector<int>& loop) {
  std::vector<std::array<int, 3>> tris;
  const std::size_t n = loop.size();
  if (n < 3) return tris;
  if (n == 3) {
    tris.push_back({loop[0], loop[1], loop[2]});
    return tris;
  }

  // Project onto the loop's plane.
  ConvexPolygon3 poly;
  for (int id : loop) poly.vertices.push_back(vertices[id]);
  Vec3 normal = polygon_normal(poly);
  Plane plane = Plane::from_point_normal(poly.vertices[0], normal);
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (int id : loop) pts.push_back(plane.to_plane_2d(vertices[id]));
  if (polygon_area_2d(pts) < 0.0) {
    // to_plane_2d frame may be left-handed w.r.t. the winding; mirror it.
    for (Vec2& p : pts) p.y = -p.y;
  }

  if (loop_is_convex_2d(pts)) {
    for (std::size_t i = 1; i + 1 < n; ++i)
      tris.push_back({loop[0], loop[i], loop[i + 1]});
    return tris;
  }

  // Ear clipping.
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  auto is_ear = [&](std::size_t pos) {
    std::size_t m = idx.size();
    Vec2 a = pts[idx[(pos + m - 1) % m]];
    Vec2 b = pts[idx[pos]];
    Vec2 c = pts[idx[(pos + 1) % m]];
    if ((b - a).cross(c - b) <= 1e-14) return false;
    for (std::size_t k = 0; k < m; ++k) {
      int vi = idx[k];
      if (vi == idx[(pos + m - 1) % m] || vi == idx[pos] ||
          vi == idx[(pos + 1) % m])
        continue;
      const Vec2& p = pts[vi];
      double s0 = (b - a).cross(p - a);
      double s1 = (c - b).cross(p - b);
      double s2 = (a - c).cross(p - c);
      if (s0 >= -1e-14 && s1 >= -1e-14 && s2 >= -1e-14) return false;
    }
    return true;
  };

  int guard = static_cast<int>(4 * n * n);
  std::size_t pos = 0;
  while (idx.size() > 3 && guard-- > 0) {
    std::size_t m = idx.size();
    if (is_ear(pos % m)) {
      std::size_t p = pos % m;
      tris.push_back({loop[idx[(p + m - 1) % m]], loop[idx[p]],
                      loop[idx[(p + 1) % m]]});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(p));
      pos = 0;
    } else {
      ++pos;
      if (pos > 8 * m) break;
    }
  }
  if (idx.size() >= 3)
    for (std::size_t i = 1; i + 1 < idx.size(); ++i)
      tris.push_back({loop[idx[0]], loop[idx[i]], loop[idx[i + 1]]});
  return tris;
}

}  // namespace refit
