#include "refit/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace refit {

std::vector<ReferenceSurface> build_reference_surfaces(
    const CoarseModel& model, const FacePartition& partition,
    const SegmentedCloud& segmented, const ModelMatchResult& match) {
  std::vector<ReferenceSurface> refs;

  for (std::size_t k = 0; k < partition.kept_faces.size(); ++k) {
    const LogicalFace& face = model.faces[partition.kept_faces[k]];
    ReferenceSurface ref;
    ref.kind = ReferenceSurface::Kind::coarse_face;
    ref.source_index = partition.kept_faces[k];
    ref.plane = partition.kept_planes[k];
    for (const auto& tri : face.triangles) {
      std::vector<Vec2> piece = {ref.plane.to_plane_2d(tri[0]),
                                 ref.plane.to_plane_2d(tri[1]),
                                 ref.plane.to_plane_2d(tri[2])};
      if (polygon_area_2d(piece) < 0.0)
        std::reverse(piece.begin(), piece.end());
      if (polygon_area_2d(piece) < kEpsArea) continue;
      ref.region2d.push_back(std::move(piece));
    }
    ref.obb = face.obb;
    if (!ref.region2d.empty()) refs.push_back(std::move(ref));
  }

  for (const FaceMatch& m : match.matches) {
    const PlanarCluster& cluster = segmented.clusters[m.cluster_index];
    ReferenceSurface ref;
    ref.kind = ReferenceSurface::Kind::scan_cluster;
    ref.source_index = m.cluster_index;
    ref.plane = cluster.plane;
    ref.region2d.push_back(cluster.hull2d);
    ref.obb = cluster.obb;
    ref.points.reserve(cluster.inlier_indices.size());
    for (int idx : cluster.inlier_indices)
      ref.points.push_back(segmented.source.points[idx]);
    refs.push_back(std::move(ref));
  }
  return refs;
}

std::optional<double> score_pair(const CandidateFace& face,
                                 const Plane& face_plane,
                                 const ReferenceSurface& ref,
                                 const ConfidenceParams& params) {
  // 1. Angle gate (up to normal sign).
  double cosang = std::fabs(face_plane.normal.dot(ref.plane.normal));
  double cos_max = std::cos(params.theta_filter_deg * std::numbers::pi / 180.0);
  if (cosang < cos_max) return std::nullopt;

  // 2. Distance gate.
  if (ref.kind == ReferenceSurface::Kind::coarse_face) {
    Obb3 box = obb_from_points(face.polygon.vertices);
    double worst = 0.0;
    for (const Vec3& corner : box.corners())
      worst = std::max(worst, std::fabs(ref.plane.signed_distance(corner)));
    if (worst > params.d_model_max) return std::nullopt;
  } else {
    std::vector<Vec2> face2d;
    face2d.reserve(face.polygon.vertices.size());
    for (const Vec3& p : face.polygon.vertices)
      face2d.push_back(face_plane.to_plane_2d(p));
    if (polygon_area_2d(face2d) < 0.0)
      std::reverse(face2d.begin(), face2d.end());

    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (const Vec3& p : ref.points) {
      if (!point_in_convex_2d(face_plane.to_plane_2d(p), face2d)) continue;
      double d = std::fabs(face_plane.signed_distance(p));
      sum += d;
      sumsq += d * d;
      ++count;
    }
    if (count < params.min_support_points) return std::nullopt;
    double mean = sum / static_cast<double>(count);
    double var = sumsq / static_cast<double>(count) - mean * mean;
    double stddev = std::sqrt(std::max(0.0, var));
    if (mean > params.d_cloud_mean_max || stddev > params.d_cloud_std_max)
      return std::nullopt;
  }

  // 3. OBB overlap gate, coarse refs only.
  if (ref.kind == ReferenceSurface::Kind::coarse_face) {
    Obb3 box = obb_from_points(face.polygon.vertices);
    double inter = obb_intersection_volume(box, ref.obb);
    double uni = box.volume() + ref.obb.volume() - inter;
    double iou = uni > 0.0 ? inter / uni : 0.0;
    double cover = std::max(inter / box.volume(), inter / ref.obb.volume());
    if (iou < params.bbox_overlap_min && cover < params.bbox_overlap_min)
      return std::nullopt;
  }

  // 4. Projection overlap ratio onto the reference plane.
  std::vector<Vec2> proj;
  proj.reserve(face.polygon.vertices.size());
  for (const Vec3& p : face.polygon.vertices)
    proj.push_back(ref.plane.to_plane_2d(p));
  double area = polygon_area_2d(proj);
  if (area < 0.0) {
    std::reverse(proj.begin(), proj.end());
    area = -area;
  }
  if (area < kEpsArea) return std::nullopt;

  double overlap = 0.0;
  for (const auto& piece : ref.region2d)
    overlap += convex_polygon_intersection_area_2d(proj, piece);
  return std::clamp(overlap / area, 0.0, 1.0);
}

std::vector<int> assign_confidences(CandidateSet& set,
                                    const std::vector<ReferenceSurface>& refs,
                                    const ConfidenceParams& params) {
  std::vector<int> best_ref(set.faces.size(), -1);
  for (std::size_t f = 0; f < set.faces.size(); ++f) {
    CandidateFace& face = set.faces[f];
    const Plane& plane = set.planes[face.supporting_plane].plane;
    double best = 0.0;
    for (std::size_t r = 0; r < refs.size(); ++r) {
      auto score = score_pair(face, plane, refs[r], params);
      if (score && *score > best) {
        best = *score;
        best_ref[f] = static_cast<int>(r);
      }
    }
    face.confidence = best;
  }
  return best_ref;
}

}  // namespace refit
