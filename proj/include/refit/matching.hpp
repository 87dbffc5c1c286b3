#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refit/model.hpp"
#include "refit/pointcloud.hpp"

namespace refit {

struct MatchParams {
  double w_normal = 0.5;
  double w_coverage = 0.5;
  double theta_normal_max_deg = 10.0;  // hard angle filter
  double d_centroid_max = 1.0;         // hard centroid-to-plane filter, m
  double min_s_match = 0.4;            // score floor for accepting a pair
};

struct FaceMatch {
  int cluster_index = -1;
  int face_index = -1;
  double s_normal = 0.0;  // cosine similarity, sign kept for reporting
  double d_c = 0.0;       // cluster centroid to face plane, m
  double c_bbox = 0.0;    // OBB volume IoU
  double s_match = 0.0;   // w_normal*|s_normal| + w_coverage*c_bbox
};

struct ModelMatchResult {
  std::string model_id;
  std::vector<FaceMatch> matches;  // one face per cluster, one cluster per face
  double q_model = 0.0;            // sum of s_match
};

// Keeps models whose expanded footprint intersects the cloud footprint.
std::vector<const CoarseModel*> coarse_spatial_filter(
    const Aabb2& cloud_footprint, const std::vector<const CoarseModel*>& models);

// Hard angle/distance filters, then the weighted score. Does not apply
// min_s_match; the assignment stage does.
std::optional<FaceMatch> score_face_match(const PlanarCluster& cluster,
                                          const LogicalFace& face,
                                          const MatchParams& params);

// Greedy one-to-one cluster-face assignment per model by descending score,
// then argmax of the per-model quality sum. Throws NoMatchFound when every
// model ends up with zero matches. `all_scores` (optional) receives
// (model_id, q_model) for every candidate.
ModelMatchResult select_best_model(
    const SegmentedCloud& segmented,
    const std::vector<const CoarseModel*>& candidates,
    const MatchParams& params,
    std::vector<std::pair<std::string, double>>* all_scores = nullptr);

struct FacePartition {
  std::vector<int> kept_faces;     // indices into model.faces
  std::vector<int> removed_faces;  // faces matched by scan clusters
  std::vector<Plane> kept_planes;  // PCA planes of the kept faces
};

FacePartition remove_matched_faces(const CoarseModel& model,
                                   const ModelMatchResult& result);

}  // namespace refit
