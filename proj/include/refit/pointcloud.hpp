#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "refit/geometry.hpp"

namespace refit {

struct PointCloud {
  std::vector<Vec3> points;

  Vec3 centroid() const;
  Aabb3 aabb() const;
};

// Reads .xyz (whitespace separated, >= 3 columns) or .ply (ascii or
// binary_little_endian, properties x/y/z required).
PointCloud load_cloud(const std::filesystem::path& path);

struct RansacParams {
  double dist = 0.05;             // inlier point-plane distance, m
  std::size_t min_cluster_size = 200;
  int max_iterations = 2000;      // per extracted plane
  int max_planes = 32;
  std::uint64_t seed = 0;
  double merge_angle_deg = 2.0;   // post-pass cluster merging
  double merge_dist = 0.05;
};

struct PlanarCluster {
  Plane plane;                      // PCA-refined, oriented away from the
                                    // whole-cloud centroid
  std::vector<int> inlier_indices;  // sorted, into SegmentedCloud::source
  Vec3 centroid;
  Obb3 obb;
  std::vector<Vec2> hull2d;  // inliers projected into plane.basis frame
};

struct SegmentedCloud {
  PointCloud source;
  std::vector<PlanarCluster> clusters;
  std::vector<int> unassigned;
};

// Greedy multi-plane extraction: repeatedly RANSAC the largest plane among
// the remaining points, refine it by PCA, remove its inliers. Deterministic
// for a fixed params.seed.
SegmentedCloud segment_planes_ransac(PointCloud cloud,
                                     const RansacParams& params);

// One ascii PLY per cluster, colored by cluster id, plus unassigned.ply.
void write_cluster_debug_ply(const SegmentedCloud& segmented,
                             const std::filesystem::path& dir);

}  // namespace refit
