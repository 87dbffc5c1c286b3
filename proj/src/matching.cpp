#include "refit/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace refit {

std::vector<const CoarseModel*> coarse_spatial_filter(
    const Aabb2& cloud_footprint,
    const std::vector<const CoarseModel*>& models) {
  std::vector<const CoarseModel*> out;
  for (const CoarseModel* m : models)
    if (footprint(m->expanded_aabb).intersects(cloud_footprint))
      out.push_back(m);
  return out;
}

std::optional<FaceMatch> score_face_match(const PlanarCluster& cluster,
                                          const LogicalFace& face,
                                          const MatchParams& params) {
  double s_normal = cluster.plane.normal.dot(face.plane.normal);
  double cos_max =
      std::cos(params.theta_normal_max_deg * std::numbers::pi / 180.0);
  if (std::fabs(s_normal) < cos_max) return std::nullopt;

  double d_c = std::fabs(face.plane.signed_distance(cluster.centroid));
  if (d_c > params.d_centroid_max) return std::nullopt;

  FaceMatch m;
  m.s_normal = s_normal;
  m.d_c = d_c;
  m.c_bbox = obb_iou(cluster.obb, face.obb);
  m.s_match = params.w_normal * std::fabs(s_normal) +
              params.w_coverage * m.c_bbox;
  return m;
}

namespace {

ModelMatchResult match_one_model(const SegmentedCloud& segmented,
                                 const CoarseModel& model,
                                 const MatchParams& params) {
  std::vector<FaceMatch> pool;
  for (std::size_t c = 0; c < segmented.clusters.size(); ++c)
    for (std::size_t f = 0; f < model.faces.size(); ++f) {
      auto m = score_face_match(segmented.clusters[c], model.faces[f], params);
      if (!m) continue;
      if (m->s_match < params.min_s_match) continue;
      m->cluster_index = static_cast<int>(c);
      m->face_index = static_cast<int>(f);
      pool.push_back(*m);
    }

  // Greedy one-to-one assignment: best score first, ties by smaller d_c,
  // then smaller face index, then smaller cluster index.
  std::sort(pool.begin(), pool.end(), [](const FaceMatch& a,
                                         const FaceMatch& b) {
    if (a.s_match != b.s_match) return a.s_match > b.s_match;
    if (a.d_c != b.d_c) return a.d_c < b.d_c;
    if (a.face_index != b.face_index) return a.face_index < b.face_index;
    return a.cluster_index < b.cluster_index;
  });

  ModelMatchResult result;
  result.model_id = model.id;
  std::vector<char> cluster_used(segmented.clusters.size(), 0);
  std::vector<char> face_used(model.faces.size(), 0);
  for (const FaceMatch& m : pool) {
    if (cluster_used[m.cluster_index] || face_used[m.face_index]) continue;
    cluster_used[m.cluster_index] = 1;
    face_used[m.face_index] = 1;
    result.matches.push_back(m);
    result.q_model += m.s_match;
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const FaceMatch& a, const FaceMatch& b) {
              return a.cluster_index < b.cluster_index;
            });
  return result;
}

}  // namespace

ModelMatchResult select_best_model(
    const SegmentedCloud& segmented,
    const std::vector<const CoarseModel*>& candidates,
    const MatchParams& params,
    std::vector<std::pair<std::string, double>>* all_scores) {
  if (candidates.empty())
    throw NoMatchFound("no candidate models after spatial filtering");

  std::optional<ModelMatchResult> best;
  for (const CoarseModel* model : candidates) {
    ModelMatchResult r = match_one_model(segmented, *model, params);
    if (all_scores) all_scores->push_back({r.model_id, r.q_model});
    if (r.matches.empty()) continue;
    if (!best || r.q_model > best->q_model ||
        (r.q_model == best->q_model && r.model_id < best->model_id))
      best = std::move(r);
  }
  if (!best)
    throw NoMatchFound("no cluster matched any candidate model");
  return *best;
}

FacePartition remove_matched_faces(const CoarseModel& model,
                                   const ModelMatchResult& result) {
  std::vector<char> removed(model.faces.size(), 0);
  for (const FaceMatch& m : result.matches) removed[m.face_index] = 1;

  FacePartition part;
  for (std::size_t f = 0; f < model.faces.size(); ++f) {
    if (removed[f])
      part.removed_faces.push_back(static_cast<int>(f));
    else
      part.kept_faces.push_back(static_cast<int>(f));
  }
  if (part.kept_faces.empty())
    throw AllFacesRemoved("every face of model " + model.id +
                          " was matched for removal");

  for (int f : part.kept_faces) {
    const LogicalFace& face = model.faces[f];
    std::vector<Vec3> pts;
    for (const auto& tri : face.triangles)
      for (const Vec3& p : tri) pts.push_back(p);
    Plane plane = fit_plane_pca(pts).plane;
    if (plane.normal.dot(face.plane.normal) < 0.0) plane = plane.flipped();
    part.kept_planes.push_back(plane);
  }
  return part;
}

}  // namespace refit
