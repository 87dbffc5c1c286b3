#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refit/geometry.hpp"

namespace refit {

// A semantic facade/roof face recovered by regrouping coplanar adjacent
// input polygons. `triangles` tile the face exactly and serve as its convex
// decomposition; `boundary` is the chained outer loop.
struct LogicalFace {
  std::vector<Vec3> boundary;
  std::vector<std::array<Vec3, 3>> triangles;
  Plane plane;  // PCA over the face vertices, oriented along the winding
  double area = 0.0;
  Vec3 centroid;
  Obb3 obb;
};

struct CoarseModel {
  std::string id;
  std::vector<LogicalFace> faces;
  Aabb3 aabb;
  Aabb3 expanded_aabb;
};

// Face of a refined mesh: planar vertex loop (convex except after coplanar
// merging) plus where its supporting plane came from.
struct ProvenanceTag {
  enum class Kind { coarse_plane, scan_plane, merged } kind =
      Kind::coarse_plane;
  int source_index = -1;
};

struct MeshFace {
  std::vector<Vec3> loop;
  ProvenanceTag provenance;
};

struct RefinedModel {
  std::string id;
  std::vector<MeshFace> faces;
};

// Loads `v`/`f` records, fan-triangulates polygons, regroups coplanar
// adjacent triangles (1 deg / 1e-3 m) into logical faces. id = file stem.
CoarseModel load_model_obj(const std::filesystem::path& path,
                           double expansion_ratio = 0.10);

// Grows every side by `ratio` on both ends; flat axes are padded to
// kEpsThickness first so the expansion is defined.
Aabb3 expand_aabb(const Aabb3& aabb, double ratio);

// Vertices deduplicated at kEpsWeld; fixed "%.6f" formatting so identical
// models serialize byte-identically.
void write_model_obj(const RefinedModel& model,
                     const std::filesystem::path& path);

// A coarse model viewed as a plain mesh (one loop per logical face).
std::vector<MeshFace> coarse_model_mesh(const CoarseModel& model);

}  // namespace refit
