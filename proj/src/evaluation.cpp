#include "refit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "refit/mesh_ops.hpp"

#include <json.hpp>

namespace refit {

namespace {

struct Triangle {
  Vec3 a, b, c;
  Vec3 normal;  // unit, from winding
};

// Closest point on a triangle (Ericson, Real-Time Collision Detection).
Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t) {
  Vec3 ab = t.b - t.a, ac = t.c - t.a, ap = p - t.a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return t.a;

  Vec3 bp = p - t.b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return t.b;

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return t.a + ab * (d1 / (d1 - d3));

  Vec3 cp = p - t.c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return t.c;

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return t.a + ac * (d2 / (d2 - d6));

  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return t.b + (t.c - t.b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

  double denom = 1.0 / (va + vb + vc);
  return t.a + ab * (vb * denom) + ac * (vc * denom);
}

struct BvhNode {
  Aabb3 box;
  int left = -1, right = -1;
  int begin = 0, end = 0;  // leaf triangle range
};

class TriangleBvh {
 public:
  explicit TriangleBvh(std::vector<Triangle> tris) : tris_(std::move(tris)) {
    order_.resize(tris_.size());
    for (std::size_t i = 0; i < order_.size(); ++i)
      order_[i] = static_cast<int>(i);
    if (!tris_.empty())
      root_ = build(0, static_cast<int>(tris_.size()));
  }

  // Returns (squared distance, closest point, triangle index).
  void nearest(const Vec3& p, double& best_sq, Vec3& best_point,
               int& best_tri) const {
    best_sq = std::numeric_limits<double>::max();
    best_tri = -1;
    if (root_ >= 0) search(root_, p, best_sq, best_point, best_tri);
  }

  const Triangle& triangle(int i) const { return tris_[i]; }

 private:
  static double aabb_sq_distance(const Aabb3& b, const Vec3& p) {
    double sq = 0.0;
    for (int k = 0; k < 3; ++k) {
      double v = p[k];
      double lo = b.min[k], hi = b.max[k];
      if (v < lo) sq += (lo - v) * (lo - v);
      if (v > hi) sq += (v - hi) * (v - hi);
    }
    return sq;
  }

  int build(int begin, int end) {
    BvhNode node;
    node.box.min = node.box.max = tris_[order_[begin]].a;
    for (int i = begin; i < end; ++i) {
      const Triangle& t = tris_[order_[i]];
      node.box.extend(t.a);
      node.box.extend(t.b);
      node.box.extend(t.c);
    }
    if (end - begin <= 4) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 extent = node.box.max - node.box.min;
    int axis = extent.x >= extent.y && extent.x >= extent.z ? 0
               : extent.y >= extent.z                       ? 1
                                                            : 2;
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int i, int j) {
                       Vec3 ci = (tris_[i].a + tris_[i].b + tris_[i].c) / 3.0;
                       Vec3 cj = (tris_[j].a + tris_[j].b + tris_[j].c) / 3.0;
                       return ci[axis] < cj[axis];
                     });
    int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    int l = build(begin, mid);
    int r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void search(int node_id, const Vec3& p, double& best_sq, Vec3& best_point,
              int& best_tri) const {
    const BvhNode& node = nodes_[node_id];
    if (aabb_sq_distance(node.box, p) >= best_sq) return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const Triangle& t = tris_[order_[i]];
        Vec3 q = closest_point_on_triangle(p, t);
        double sq = (p - q).squared_norm();
        if (sq < best_sq) {
          best_sq = sq;
          best_point = q;
          best_tri = order_[i];
        }
      }
      return;
    }
    double dl = aabb_sq_distance(nodes_[node.left].box, p);
    double dr = aabb_sq_distance(nodes_[node.right].box, p);
    if (dl <= dr) {
      search(node.left, p, best_sq, best_point, best_tri);
      search(node.right, p, best_sq, best_point, best_tri);
    } else {
      search(node.right, p, best_sq, best_point, best_tri);
      search(node.left, p, best_sq, best_point, best_tri);
    }
  }

  std::vector<Triangle> tris_;
  std::vector<int> order_;
  std::vector<BvhNode> nodes_;
  int root_ = -1;
};

std::vector<Triangle> triangulate_mesh(const std::vector<MeshFace>& faces,
                                       bool* oriented = nullptr) {
  IndexedMesh mesh = weld_faces(faces, kEpsWeld);
  bool ok = orient_faces_consistently(mesh);  // majority orientation on failure
  if (oriented) *oriented = ok;
  std::vector<Triangle> tris;
  for (const auto& loop : mesh.faces) {
    for (const auto& [i, j, k] : triangulate_loop(mesh.vertices, loop)) {
      Triangle t{mesh.vertices[i], mesh.vertices[j], mesh.vertices[k], {}};
      Vec3 n = (t.b - t.a).cross(t.c - t.a);
      double len = n.norm();
      if (len < 1e-14) continue;
      t.normal = n / len;
      tris.push_back(t);
    }
  }
  return tris;
}

}  // namespace

C2MStats c2m(const PointCloud& cloud, const std::vector<MeshFace>& mesh,
             bool keep_per_point) {
  if (cloud.points.empty()) throw EmptyCloud("c2m: empty cloud");
  bool oriented = true;
  std::vector<Triangle> tris = triangulate_mesh(mesh, &oriented);
  if (tris.empty()) throw EmptyMesh("c2m: mesh has no valid triangles");
  TriangleBvh bvh(std::move(tris));

  const std::size_t n = cloud.points.size();
  std::vector<double> signed_d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best_sq;
    Vec3 q;
    int tri;
    bvh.nearest(cloud.points[i], best_sq, q, tri);
    double dist = std::sqrt(best_sq);
    double side = bvh.triangle(tri).normal.dot(cloud.points[i] - q);
    // Non-orientable input: fall back to unsigned statistics.
    signed_d[i] = (side >= 0.0 || !oriented) ? dist : -dist;
  }

  C2MStats stats;
  double sum_sq = 0.0, sum_abs = 0.0, sum = 0.0;
  for (double d : signed_d) {
    sum_sq += d * d;
    sum_abs += std::fabs(d);
    sum += d;
  }
  double dn = static_cast<double>(n);
  stats.rmse = std::sqrt(sum_sq / dn);
  stats.mae = sum_abs / dn;
  stats.mean_signed = sum / dn;
  stats.std = std::sqrt(
      std::max(0.0, sum_sq / dn - stats.mean_signed * stats.mean_signed));
  if (keep_per_point) stats.per_point_distances = std::move(signed_d);
  return stats;
}

Vec3 mesh_surface_centroid(const std::vector<MeshFace>& mesh) {
  std::vector<Triangle> tris = triangulate_mesh(mesh);
  if (tris.empty()) throw EmptyMesh("mesh_surface_centroid: no triangles");
  Vec3 acc{0, 0, 0};
  double total = 0.0;
  for (const Triangle& t : tris) {
    double area = 0.5 * (t.b - t.a).cross(t.c - t.a).norm();
    acc += (t.a + t.b + t.c) * (area / 3.0);
    total += area;
  }
  return acc / total;
}

double centroid_offset_reduction(const PointCloud& cloud,
                                 const std::vector<MeshFace>& init_mesh,
                                 const std::vector<MeshFace>& refined_mesh) {
  Vec3 c_mls = cloud.centroid();
  Vec3 c_init = mesh_surface_centroid(init_mesh);
  Vec3 c_ref = mesh_surface_centroid(refined_mesh);
  return (c_mls - c_init).norm() - (c_mls - c_ref).norm();
}

ValidityReport validate_topology(const std::vector<MeshFace>& mesh) {
  ValidityReport report;
  report.self_intersection_checked = false;
  IndexedMesh indexed = weld_faces(mesh, kEpsWeld);
  if (indexed.faces.empty()) return report;

  // Directed edge uses per undirected edge.
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edges;
  for (std::size_t f = 0; f < indexed.faces.size(); ++f) {
    const auto& loop = indexed.faces[f];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      int a = loop[i], b = loop[(i + 1) % loop.size()];
      edges[{std::min(a, b), std::max(a, b)}].push_back(
          {a < b ? 1 : 0, static_cast<int>(f)});
    }
  }

  bool all_manifold = true;
  for (const auto& [edge, uses] : edges) {
    if (uses.size() == 1) {
      ++report.boundary_edge_count;
      all_manifold = false;
    } else if (uses.size() != 2 || uses[0].first == uses[1].first) {
      ++report.non_manifold_edge_count;
      all_manifold = false;
    }
  }
  report.manifold = all_manifold;
  if (!all_manifold) return report;

  // Vertex fans: at each vertex the corner successor (follow the twin of the
  // outgoing edge) must form a single cycle.
  std::map<int, std::map<int, int>> corner_out;  // vertex -> (next -> prev)
  for (const auto& loop : indexed.faces) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      int prev = loop[(i + n - 1) % n];
      int v = loop[i];
      int next = loop[(i + 1) % n];
      corner_out[v][next] = prev;  // corner keyed by outgoing target
    }
  }
  bool fans_ok = true;
  for (const auto& [v, corners] : corner_out) {
    // successor(corner with out-target w) = corner whose in-source is w,
    // i.e. the corner whose out-target maps back through corner_out.
    // corners: out-target -> in-source. Walk: start at some out-target t0;
    // the next corner is the one with in-source == t0, found by scanning.
    std::map<int, int> in_to_out;  // in-source -> out-target
    for (const auto& [out, in] : corners) in_to_out[in] = out;
    if (in_to_out.size() != corners.size()) {
      fans_ok = false;
      break;
    }
    int start = corners.begin()->first;
    int cur = start;
    std::size_t steps = 0;
    do {
      auto it = in_to_out.find(cur);
      if (it == in_to_out.end()) {
        fans_ok = false;
        break;
      }
      cur = it->second;
      ++steps;
    } while (cur != start && steps <= corners.size());
    if (steps != corners.size()) {
      fans_ok = false;
      break;
    }
  }
  report.watertight = fans_ok;
  return report;
}

namespace {

nlohmann::ordered_json stats_json(const C2MStats& s) {
  return {{"rmse", s.rmse},
          {"mae", s.mae},
          {"mean_signed", s.mean_signed},
          {"std", s.std}};
}

nlohmann::ordered_json validity_json(const ValidityReport& v) {
  return {{"watertight", v.watertight},
          {"manifold", v.manifold},
          {"boundary_edge_count", v.boundary_edge_count},
          {"non_manifold_edge_count", v.non_manifold_edge_count},
          {"self_intersection_checked", v.self_intersection_checked}};
}

}  // namespace

void write_report_json(const EvaluationReport& report,
                       const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["c2m_before"] = stats_json(report.c2m_before);
  j["c2m_after"] = stats_json(report.c2m_after);
  j["delta_d"] = report.delta_d;
  j["validity_before"] = validity_json(report.validity_before);
  j["validity_after"] = validity_json(report.validity_after);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_distance_csv(const C2MStats& stats,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "signed_distance\n";
  char buf[64];
  for (double d : stats.per_point_distances) {
    std::snprintf(buf, sizeof(buf), "%.9g\n", d);
    out << buf;
  }
}

}  // namespace refit
