#pragma once

#include <optional>
#include <vector>

#include "refit/candidates.hpp"
#include "refit/matching.hpp"

namespace refit {

struct ConfidenceParams {
  double theta_filter_deg = 5.0;
  double d_model_max = 0.5;        // face OBB corner to coarse ref plane, m
  double d_cloud_mean_max = 0.2;   // projected scan points, m
  double d_cloud_std_max = 0.2;
  double bbox_overlap_min = 0.3;   // IoU or directional coverage floor
  std::size_t min_support_points = 20;
};

struct ReferenceSurface {
  enum class Kind { coarse_face, scan_cluster };
  Kind kind = Kind::coarse_face;
  int source_index = -1;
  Plane plane;
  // Convex pieces tiling the reference region, in plane.basis coordinates
  // (the face polygon for coarse refs, the inlier hull for scan refs).
  std::vector<std::vector<Vec2>> region2d;
  Obb3 obb;
  std::vector<Vec3> points;  // scan refs: inlier points
};

std::vector<ReferenceSurface> build_reference_surfaces(
    const CoarseModel& model, const FacePartition& partition,
    const SegmentedCloud& segmented, const ModelMatchResult& match);

// Four-stage pipeline: angle gate, distance gate, OBB overlap gate (coarse
// refs only), then the 2D projection overlap ratio. nullopt = filtered out.
std::optional<double> score_pair(const CandidateFace& face,
                                 const Plane& face_plane,
                                 const ReferenceSurface& ref,
                                 const ConfidenceParams& params);

// Fills face.confidence with the best score over all references (0 when no
// pair survives). Returns the winning reference index per face, -1 if none.
std::vector<int> assign_confidences(CandidateSet& set,
                                    const std::vector<ReferenceSurface>& refs,
                                    const ConfidenceParams& params);

}  // namespace refit
