#pragma once

#include <vector>

#include "refit/geometry.hpp"

namespace refit {

struct PlaneOrigin {
  enum class Kind { coarse, scan };
  Kind kind = Kind::coarse;
  int index = -1;
};

struct SupportingPlane {
  Plane plane;
  std::vector<PlaneOrigin> origins;
};

struct CandidateFace {
  ConvexPolygon3 polygon;       // CCW w.r.t. the supporting plane normal
  int supporting_plane = -1;
  double area = 0.0;
  double confidence = 0.0;      // filled by assign_confidences
};

struct CandidateEdge {
  Vec3 a, b;
  std::vector<int> incident_faces;  // sorted, unique
};

struct CandidateSet {
  std::vector<SupportingPlane> planes;
  std::vector<CandidateFace> faces;
  std::vector<CandidateEdge> edges;
  std::vector<int> dropped_planes;  // planes whose bbox crop came up empty
};

// Fixed-point agglomeration: planes within theta_merge (up to sign) and
// d_merge along the normal collapse to the average of their original members,
// so the result does not depend on merge order.
std::vector<SupportingPlane> merge_planes(std::vector<SupportingPlane> planes,
                                          double theta_merge_deg,
                                          double d_merge);

// Crops every plane to `bbox`, splits each crop by its intersection chords
// with all other planes, and aggregates the cell boundaries into candidate
// edges keyed by (intersection line, 1D interval).
CandidateSet generate_candidates(const std::vector<SupportingPlane>& planes,
                                 const Aabb3& bbox);

}  // namespace refit
