#include "refit/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace refit {

std::vector<SupportingPlane> merge_planes(std::vector<SupportingPlane> planes,
                                          double theta_merge_deg,
                                          double d_merge) {
  const double cos_merge =
      std::cos(theta_merge_deg * std::numbers::pi / 180.0);

  struct Group {
    std::vector<SupportingPlane> members;  // original planes
    Plane avg;
  };
  auto average = [](const std::vector<SupportingPlane>& members) {
    // Sign-align everything to the first member before averaging.
    const Vec3 ref = members.front().plane.normal;
    Vec3 n{0, 0, 0};
    double d = 0.0;
    for (const SupportingPlane& sp : members) {
      double s = sp.plane.normal.dot(ref) < 0.0 ? -1.0 : 1.0;
      n += sp.plane.normal * s;
      d += sp.plane.d * s;
    }
    return Plane(n.normalized(), d / static_cast<double>(members.size()));
  };

  std::vector<Group> groups;
  for (SupportingPlane& sp : planes) {
    Group g;
    g.avg = sp.plane;
    g.members.push_back(std::move(sp));
    groups.push_back(std::move(g));
  }

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < groups.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < groups.size() && !merged; ++j) {
        const Plane& a = groups[i].avg;
        const Plane& b = groups[j].avg;
        double cosang = a.normal.dot(b.normal);
        if (std::fabs(cosang) < cos_merge) continue;
        double db = cosang < 0.0 ? -b.d : b.d;
        if (std::fabs(a.d - db) >= d_merge) continue;
        groups[i].members.insert(groups[i].members.end(),
                                 std::make_move_iterator(groups[j].members.begin()),
                                 std::make_move_iterator(groups[j].members.end()));
        groups[i].avg = average(groups[i].members);
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
      }
    }
  }

  std::vector<SupportingPlane> out;
  out.reserve(groups.size());
  for (Group& g : groups) {
    SupportingPlane sp;
    sp.plane = g.avg;
    for (SupportingPlane& m : g.members)
      sp.origins.insert(sp.origins.end(), m.origins.begin(), m.origins.end());
    out.push_back(std::move(sp));
  }
  return out;
}

namespace {

constexpr double kSnap = 1e-7;      // arrangement vertex snap, m
constexpr double kIntervalTol = 1e-6;

// Registry of 3D lines so that edges from different planes land in the same
// bucket. Exactly shared lines (one pairwise intersection reused by both
// planes) hit the same entry by construction; independently computed but
// coincident lines merge through the quantized key.
class LineRegistry {
 public:
  int add(const Line3& line) {
    Vec3 dir = canonical_dir(line.direction);
    Vec3 anchor = line.point - dir * line.point.dot(dir);
    Key key = quantize(dir, anchor);
    auto it = lookup_.find(key);
    if (it != lookup_.end()) return it->second;
    int id = static_cast<int>(lines_.size());
    lines_.push_back(Line3{anchor, dir});
    lookup_.emplace(key, id);
    return id;
  }

  double param(int id, const Vec3& p) const {
    return (p - lines_[id].point).dot(lines_[id].direction);
  }
  Vec3 at(int id, double t) const {
    return lines_[id].point + lines_[id].direction * t;
  }
  std::size_t size() const { return lines_.size(); }

 private:
  using Key = std::array<long long, 6>;

  static Vec3 canonical_dir(const Vec3& d) {
    if (d.x < -1e-9) return -d;
    if (d.x <= 1e-9) {
      if (d.y < -1e-9) return -d;
      if (d.y <= 1e-9 && d.z < 0.0) return -d;
    }
    return d;
  }
  static Key quantize(const Vec3& dir, const Vec3& anchor) {
    auto q = [](double v) { return std::llround(v / kSnap); };
    return {q(dir.x), q(dir.y), q(dir.z), q(anchor.x), q(anchor.y),
            q(anchor.z)};
  }

  std::vector<Line3> lines_;
  std::map<Key, int> lookup_;
};

// Convex cell in plane coordinates; tag[i] is the registry line id of the
// edge v[i] -> v[i+1].
struct TaggedPoly {
  std::vector<Vec2> v;
  std::vector<int> tag;
};

struct SplitResult {
  std::optional<TaggedPoly> left;
  std::optional<TaggedPoly> right;
};

SplitResult split_cell(const TaggedPoly& cell, int line_id, const Vec2& p0,
                       const Vec2& dir) {
  const std::size_t n = cell.v.size();
  std::vector<double> s(n);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    double d = dir.cross(cell.v[i] - p0);
    if (std::fabs(d) < kSnap) d = 0.0;
    s[i] = d;
    has_pos |= d > 0.0;
    has_neg |= d < 0.0;
  }
  SplitResult out;
  if (!has_pos || !has_neg) {
    (has_neg ? out.right : out.left) = cell;
    return out;
  }

  struct Pt {
    Vec2 p;
    int tag;  // original edge tag of the edge leaving this point
    bool on_cut;
  };
  std::vector<Pt> left, right;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = cell.v[i];
    const Vec2& b = cell.v[(i + 1) % n];
    double sa = s[i], sb = s[(i + 1) % n];
    if (sa >= 0.0) left.push_back({a, cell.tag[i], sa == 0.0});
    if (sa <= 0.0) right.push_back({a, cell.tag[i], sa == 0.0});
    if ((sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0)) {
      Vec2 x = a + (b - a) * (sa / (sa - sb));
      left.push_back({x, cell.tag[i], true});
      right.push_back({x, cell.tag[i], true});
    }
  }

  auto finish = [&](std::vector<Pt>& pts) -> std::optional<TaggedPoly> {
    // Merge near-duplicate consecutive points (snapped vertex vs crossing).
    for (std::size_t i = 0; i < pts.size() && pts.size() > 1;) {
      std::size_t j = (i + 1) % pts.size();
      if ((pts[i].p - pts[j].p).norm() < 1e-9) {
        pts[i].tag = pts[j].tag;
        pts[i].on_cut = pts[i].on_cut || pts[j].on_cut;
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(j));
      } else {
        ++i;
      }
    }
    if (pts.size() < 3) return std::nullopt;
    TaggedPoly poly;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::size_t j = (i + 1) % pts.size();
      poly.v.push_back(pts[i].p);
      poly.tag.push_back(pts[i].on_cut && pts[j].on_cut ? line_id
                                                        : pts[i].tag);
    }
    if (std::fabs(polygon_area_2d(poly.v)) < 1e-12) return std::nullopt;
    return poly;
  };

  out.left = finish(left);
  out.right = finish(right);
  if (!out.left || !out.right) {
    // Sliver side collapsed: treat as no split to keep the partition exact.
    out.left = cell;
    out.right.reset();
  }
  return out;
}

struct FrameData {
  Vec3 u, v, origin;
  Vec2 to2d(const Vec3& p) const {
    Vec3 r = p - origin;
    return {r.dot(u), r.dot(v)};
  }
  Vec3 to3d(const Vec2& q) const { return origin + u * q.x + v * q.y; }
};

}  // namespace

CandidateSet generate_candidates(const std::vector<SupportingPlane>& planes,
                                 const Aabb3& bbox) {
  CandidateSet set;
  set.planes = planes;
  const std::size_t np = planes.size();

  LineRegistry registry;

  // Pairwise intersection lines, registered once and shared by both planes.
  std::vector<std::vector<int>> pair_line(np, std::vector<int>(np, -1));
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = i + 1; j < np; ++j) {
      auto line = intersect_planes(planes[i].plane, planes[j].plane);
      if (!line) continue;
      int id = registry.add(*line);
      pair_line[i][j] = pair_line[j][i] = id;
    }

  std::array<Plane, 6> walls = {
      Plane(Vec3{-1, 0, 0}, bbox.min.x),  Plane(Vec3{1, 0, 0}, -bbox.max.x),
      Plane(Vec3{0, -1, 0}, bbox.min.y),  Plane(Vec3{0, 1, 0}, -bbox.max.y),
      Plane(Vec3{0, 0, -1}, bbox.min.z),  Plane(Vec3{0, 0, 1}, -bbox.max.z)};
  // Outward normals: wall.signed_distance(p) > 0 means p is outside the box.

  struct EdgeRecord {
    int face = -1;
    double t0 = 0.0, t1 = 0.0;
  };
  std::map<int, std::vector<EdgeRecord>> line_edges;

  for (std::size_t pi = 0; pi < np; ++pi) {
    const Plane& plane = planes[pi].plane;
    FrameData frame;
    plane.basis(frame.u, frame.v);
    frame.origin = plane.normal * (-plane.d);

    // Base polygon: a quad comfortably larger than the box, clipped to it.
    Vec3 bc = bbox.center();
    Vec3 on_plane = bc - plane.normal * plane.signed_distance(bc);
    Vec2 c2 = frame.to2d(on_plane);
    double radius = (bbox.max - bbox.min).norm() +
                    (on_plane - bc).norm() + 1.0;
    TaggedPoly base;
    base.v = {c2 + Vec2{-radius, -radius}, c2 + Vec2{radius, -radius},
              c2 + Vec2{radius, radius}, c2 + Vec2{-radius, radius}};
    base.tag = {-1, -1, -1, -1};

    bool empty = false;
    for (const Plane& wall : walls) {
      auto line = intersect_planes(plane, wall);
      if (!line) {
        // Plane parallel to this wall: fully inside or fully outside.
        if (wall.signed_distance(frame.origin) > kSnap) {
          empty = true;
          break;
        }
        continue;
      }
      int line_id = registry.add(*line);
      Vec2 p0 = frame.to2d(line->point);
      Vec2 d2{line->direction.dot(frame.u), line->direction.dot(frame.v)};
      double l2 = d2.norm();
      if (l2 < 0.5) continue;  // numerically degenerate in-plane direction
      d2 = d2 * (1.0 / l2);
      // Keep the inside of the box. Outward wall normal means we keep the
      // side where signed_distance < 0; pick the split side accordingly.
      SplitResult sr = split_cell(base, line_id, p0, d2);
      const Vec2 probe =
          p0 + Vec2{-d2.y, d2.x};  // a point on the "left" side
      bool left_inside =
          wall.signed_distance(frame.to3d(probe)) < 0.0;
      std::optional<TaggedPoly>& keep = left_inside ? sr.left : sr.right;
      if (!keep) {
        empty = true;
        break;
      }
      base = std::move(*keep);
    }
    if (empty || base.v.size() < 3 ||
        std::fabs(polygon_area_2d(base.v)) < kEpsArea) {
      set.dropped_planes.push_back(static_cast<int>(pi));
      continue;
    }
    if (polygon_area_2d(base.v) < 0.0) {
      // Frame handedness: ensure CCW cells.
      std::reverse(base.v.begin(), base.v.end());
      std::reverse(base.tag.begin(), base.tag.end());
      std::rotate(base.tag.rbegin(), base.tag.rbegin() + 1, base.tag.rend());
    }

    // Split the crop by every other plane's chord.
    std::vector<TaggedPoly> cells{std::move(base)};
    for (std::size_t pj = 0; pj < np; ++pj) {
      if (pj == pi || pair_line[pi][pj] < 0) continue;
      int line_id = pair_line[pi][pj];
      Vec3 lp = registry.at(line_id, 0.0);
      Vec3 ld = registry.at(line_id, 1.0) - lp;
      Vec2 p0 = frame.to2d(lp);
      Vec2 d2{ld.dot(frame.u), ld.dot(frame.v)};
      double l2 = d2.norm();
      if (l2 < 0.5) continue;
      d2 = d2 * (1.0 / l2);
      std::vector<TaggedPoly> next;
      next.reserve(cells.size() + 4);
      for (TaggedPoly& cell : cells) {
        SplitResult sr = split_cell(cell, line_id, p0, d2);
        if (sr.left) next.push_back(std::move(*sr.left));
        if (sr.right) next.push_back(std::move(*sr.right));
      }
      cells = std::move(next);
    }

    // Emit faces and record their boundary intervals on the shared lines.
    for (TaggedPoly& cell : cells) {
      double area = polygon_area_2d(cell.v);
      if (area < kEpsArea) continue;
      CandidateFace face;
      face.supporting_plane = static_cast<int>(pi);
      face.area = area;
      for (const Vec2& q : cell.v) face.polygon.vertices.push_back(frame.to3d(q));
      int face_id = static_cast<int>(set.faces.size());
      for (std::size_t e = 0; e < cell.v.size(); ++e) {
        int line_id = cell.tag[e];
        if (line_id < 0) continue;  // relic of the initial quad; outside box
        Vec3 a = face.polygon.vertices[e];
        Vec3 b = face.polygon.vertices[(e + 1) % cell.v.size()];
        double ta = registry.param(line_id, a);
        double tb = registry.param(line_id, b);
        line_edges[line_id].push_back(
            EdgeRecord{face_id, std::min(ta, tb), std::max(ta, tb)});
      }
      set.faces.push_back(std::move(face));
    }
  }

  // Aggregate intervals per line into elementary candidate edges.
  for (const auto& [line_id, records] : line_edges) {
    std::vector<double> cuts;
    cuts.reserve(records.size() * 2);
    for (const EdgeRecord& r : records) {
      cuts.push_back(r.t0);
      cuts.push_back(r.t1);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> breaks;
    for (double t : cuts) {
      if (breaks.empty() || t - breaks.back() > kIntervalTol)
        breaks.push_back(t);
    }
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      double lo = breaks[k], hi = breaks[k + 1];
      if (hi - lo <= kIntervalTol) continue;
      double mid = 0.5 * (lo + hi);
      CandidateEdge edge;
      edge.a = registry.at(line_id, lo);
      edge.b = registry.at(line_id, hi);
      for (const EdgeRecord& r : records)
        if (r.t0 <= mid + 1e-9 && mid - 1e-9 <= r.t1)
          edge.incident_faces.push_back(r.face);
      std::sort(edge.incident_faces.begin(), edge.incident_faces.end());
      edge.incident_faces.erase(std::unique(edge.incident_faces.begin(),
                                            edge.incident_faces.end()),
                                edge.incident_faces.end());
      if (!edge.incident_faces.empty()) set.edges.push_back(std::move(edge));
    }
  }
  return set;
}

}  // namespace refit
