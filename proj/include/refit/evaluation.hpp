#pragma once

#include <filesystem>
#include <vector>

#include "refit/model.hpp"
#include "refit/pointcloud.hpp"

namespace refit {

struct C2MStats {
  double rmse = 0.0;
  double mae = 0.0;
  double mean_signed = 0.0;
  double std = 0.0;  // population convention, so rmse^2 = mean^2 + std^2
  std::vector<double> per_point_distances;  // signed; filled on request
};

struct ValidityReport {
  bool watertight = false;
  bool manifold = false;
  int boundary_edge_count = 0;
  int non_manifold_edge_count = 0;
  bool self_intersection_checked = false;
};

struct EvaluationReport {
  C2MStats c2m_before;
  C2MStats c2m_after;
  double delta_d = 0.0;
  ValidityReport validity_before;
  ValidityReport validity_after;
};

// One-sided cloud-to-mesh distances via an AABB tree over the triangulated
// faces. Sign comes from the closest triangle's normal after a consistent
// orientation pass (positive outside).
C2MStats c2m(const PointCloud& cloud, const std::vector<MeshFace>& mesh,
             bool keep_per_point = false);

// Centroid offset reduction: positive when the refined surface centroid
// moved toward the cloud centroid. Mesh centroids are area-weighted surface
// centroids (well-defined for open input meshes too).
double centroid_offset_reduction(const PointCloud& cloud,
                                 const std::vector<MeshFace>& init_mesh,
                                 const std::vector<MeshFace>& refined_mesh);

Vec3 mesh_surface_centroid(const std::vector<MeshFace>& mesh);

ValidityReport validate_topology(const std::vector<MeshFace>& mesh);

void write_report_json(const EvaluationReport& report,
                       const std::filesystem::path& path);
void write_distance_csv(const C2MStats& stats,
                        const std::filesystem::path& path);

}  // namespace refit
