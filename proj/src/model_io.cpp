#include "refit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "refit/mesh_ops.hpp"

namespace refit {

Aabb3 expand_aabb(const Aabb3& aabb, double ratio) {
  if (ratio < 0.0) throw DegenerateInput("expand_aabb: negative ratio");
  Aabb3 out = aabb;
  for (int axis = 0; axis < 3; ++axis) {
    double lo = aabb.min[axis], hi = aabb.max[axis];
    double extent = hi - lo;
    if (extent < 2.0 * kEpsThickness) {
      double mid = 0.5 * (lo + hi);
      lo = mid - kEpsThickness;
      hi = mid + kEpsThickness;
      extent = hi - lo;
    }
    double pad = extent * ratio;
    (axis == 0 ? out.min.x : axis == 1 ? out.min.y : out.min.z) = lo - pad;
    (axis == 0 ? out.max.x : axis == 1 ? out.max.y : out.max.z) = hi + pad;
  }
  return out;
}

namespace {

struct ObjData {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;  // 0-based vertex indices
};

ObjData parse_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ObjData obj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string kw;
    if (!(ss >> kw)) continue;
    if (kw == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": malformed vertex");
      obj.vertices.push_back({x, y, z});
    } else if (kw == "f") {
      std::vector<int> face;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/j", "i//k", "i/j/k"; only the vertex index matters.
        std::size_t slash = tok.find('/');
        std::string head = slash == std::string::npos ? tok
                                                      : tok.substr(0, slash);
        long idx = 0;
        try {
          idx = std::stol(head);
        } catch (...) {
          throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": bad face index '" + tok + "'");
        }
        long resolved =
            idx > 0 ? idx - 1 : static_cast<long>(obj.vertices.size()) + idx;
        if (resolved < 0 ||
            resolved >= static_cast<long>(obj.vertices.size()))
          throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": face references missing vertex " + head);
        face.push_back(static_cast<int>(resolved));
      }
      if (face.size() < 3)
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": face with fewer than 3 vertices");
      obj.faces.push_back(std::move(face));
    }
    // vn/vt/usemtl/etc. ignored.
  }
  if (obj.faces.empty()) throw ParseError(path.string() + ": no faces");
  return obj;
}

struct Tri {
  std::array<int, 3> v;  // welded vertex ids
  Vec3 normal;           // unit, from winding
  double offset;         // plane d
  double area;
};

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Chains the un-cancelled directed boundary edges of a triangle group into
// loops; returns the loop with the largest area (interior holes are not
// expected in LOD2 facades).
std::vector<int> extract_boundary_loop(
    const std::vector<const Tri*>& tris, const std::vector<Vec3>& verts) {
  std::map<std::pair<int, int>, int> directed;
  for (const Tri* t : tris)
    for (int e = 0; e < 3; ++e) {
      int a = t->v[e], b = t->v[(e + 1) % 3];
      directed[{a, b}]++;
    }
  std::map<int, std::vector<int>> next;
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    int rc = rev == directed.end() ? 0 : rev->second;
    if (count > rc) next[edge.first].push_back(edge.second);
  }
  for (auto& [from, tos] : next) std::sort(tos.begin(), tos.end());

  std::vector<std::vector<int>> loops;
  while (!next.empty()) {
    int start = next.begin()->first;
    std::vector<int> loop;
    int cur = start;
    while (true) {
      loop.push_back(cur);
      auto it = next.find(cur);
      if (it == next.end() || it->second.empty()) break;
      int to = it->second.front();
      it->second.erase(it->second.begin());
      if (it->second.empty()) next.erase(it);
      cur = to;
      if (cur == start) break;
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  if (loops.empty()) return {};

  std::size_t best = 0;
  double best_area = -1.0;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    ConvexPolygon3 poly;
    for (int id : loops[i]) poly.vertices.push_back(verts[id]);
    double a = polygon_area(poly);
    if (a > best_area) {
      best_area = a;
      best = i;
    }
  }
  return loops[best];
}

}  // namespace

CoarseModel load_model_obj(const std::filesystem::path& path,
                           double expansion_ratio) {
  ObjData obj = parse_obj(path);

  // Weld duplicated vertices so adjacency works across exporter quirks.
  VertexWelder welder(kEpsWeld);
  std::vector<int> remap(obj.vertices.size());
  for (std::size_t i = 0; i < obj.vertices.size(); ++i)
    remap[i] = welder.add(obj.vertices[i]);
  const std::vector<Vec3>& verts = welder.points();

  std::vector<Tri> tris;
  for (const auto& face : obj.faces) {
    // Planarity gate for polygonal records before fan triangulation.
    if (face.size() > 3) {
      std::vector<Vec3> pts;
      for (int id : face) pts.push_back(obj.vertices[id]);
      try {
        PlaneFit fit = fit_plane_pca(pts);
        double worst = 0.0;
        for (const Vec3& p : pts)
          worst = std::max(worst, std::fabs(fit.plane.signed_distance(p)));
        if (worst > 1e-2)
          throw NonPlanarFace(path.string() + ": polygonal face deviates " +
                              std::to_string(worst) + " m from its plane");
      } catch (const DegenerateInput&) {
        continue;  // zero-area record
      }
    }
    for (std::size_t i = 1; i + 1 < face.size(); ++i) {
      Tri t;
      t.v = {remap[face[0]], remap[face[i]], remap[face[i + 1]]};
      if (t.v[0] == t.v[1] || t.v[1] == t.v[2] || t.v[0] == t.v[2]) continue;
      Vec3 n = (verts[t.v[1]] - verts[t.v[0]])
                   .cross(verts[t.v[2]] - verts[t.v[0]]);
      double len = n.norm();
      if (len < 2.0 * kEpsArea) continue;
      t.normal = n / len;
      t.offset = -t.normal.dot(verts[t.v[0]]);
      t.area = 0.5 * len;
      tris.push_back(t);
    }
  }
  if (tris.empty()) throw ParseError(path.string() + ": no usable faces");

  // Regroup coplanar adjacent triangles into logical faces.
  const double cos_tol = std::cos(1.0 * std::numbers::pi / 180.0);
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int e = 0; e < 3; ++e) {
      int a = tris[t].v[e], b = tris[t].v[(e + 1) % 3];
      edge_tris[{std::min(a, b), std::max(a, b)}].push_back(
          static_cast<int>(t));
    }
  DisjointSet ds(tris.size());
  for (const auto& [edge, list] : edge_tris)
    for (std::size_t i = 0; i < list.size(); ++i)
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const Tri& a = tris[list[i]];
        const Tri& b = tris[list[j]];
        if (a.normal.dot(b.normal) < cos_tol) continue;
        if (std::fabs(a.offset - b.offset) > 1e-3) continue;
        ds.unite(list[i], list[j]);
      }

  std::map<int, std::vector<const Tri*>> groups;
  for (std::size_t t = 0; t < tris.size(); ++t)
    groups[ds.find(static_cast<int>(t))].push_back(&tris[t]);

  CoarseModel model;
  model.id = path.stem().string();
  for (const auto& [root, members] : groups) {
    std::vector<int> loop = extract_boundary_loop(members, verts);
    if (loop.size() < 3) continue;

    LogicalFace face;
    for (int id : loop) face.boundary.push_back(verts[id]);
    Vec3 winding_normal{0, 0, 0};
    for (const Tri* t : members) {
      face.triangles.push_back({verts[t->v[0]], verts[t->v[1]],
                                verts[t->v[2]]});
      face.area += t->area;
      winding_normal += t->normal * t->area;
    }
    std::vector<Vec3> unique_pts;
    for (const Tri* t : members)
      for (int id : t->v) unique_pts.push_back(verts[id]);
    PlaneFit fit = fit_plane_pca(unique_pts);
    face.plane = fit.plane;
    if (face.plane.normal.dot(winding_normal) < 0.0)
      face.plane = face.plane.flipped();

    Vec3 c{0, 0, 0};
    double wsum = 0.0;
    for (const Tri* t : members) {
      Vec3 tc = (verts[t->v[0]] + verts[t->v[1]] + verts[t->v[2]]) / 3.0;
      c += tc * t->area;
      wsum += t->area;
    }
    face.centroid = c / wsum;
    face.obb = obb_from_points(face.boundary);
    model.faces.push_back(std::move(face));
  }
  if (model.faces.size() < 4)
    throw ParseError(path.string() + ": fewer than 4 logical faces");

  model.aabb = Aabb3::from_points(verts);
  model.expanded_aabb = expand_aabb(model.aabb, expansion_ratio);
  return model;
}

void write_model_obj(const RefinedModel& model,
                     const std::filesystem::path& path) {
  IndexedMesh mesh = weld_faces(model.faces, kEpsWeld);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# " << model.id << "\n";
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& loop : mesh.faces) {
    out << "f";
    for (int id : loop) out << ' ' << (id + 1);
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<MeshFace> coarse_model_mesh(const CoarseModel& model) {
  std::vector<MeshFace> faces;
  faces.reserve(model.faces.size());
  for (std::size_t i = 0; i < model.faces.size(); ++i) {
    MeshFace f;
    f.loop = model.faces[i].boundary;
    f.provenance = {ProvenanceTag::Kind::coarse_plane, static_cast<int>(i)};
    faces.push_back(std::move(f));
  }
  return faces;
}

}  // namespace refit
