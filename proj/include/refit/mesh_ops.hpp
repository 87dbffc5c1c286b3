#pragma once

#include <array>
#include <unordered_map>
#include <vector>

#include "refit/geometry.hpp"
#include "refit/model.hpp"

namespace refit {

// Snaps nearby points to a single id (grid hash, 27-cell neighborhood).
class VertexWelder {
 public:
  explicit VertexWelder(double tol = kEpsWeld);
  int add(const Vec3& p);  // id of the representative point
  const std::vector<Vec3>& points() const { return points_; }

 private:
  double tol_;
  std::vector<Vec3> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

// Indexed polygon mesh with welded vertices.
struct IndexedMesh {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;  // vertex loops
  std::vector<int> source;  // input loop index per face (welding drops some)
};

// Welds at `tol`; drops repeated consecutive ids and loops with < 3 distinct
// vertices.
IndexedMesh weld_faces(const std::vector<MeshFace>& faces,
                       double tol = kEpsWeld);
IndexedMesh weld_loops(const std::vector<std::vector<Vec3>>& loops,
                       double tol = kEpsWeld);

// Flips faces breadth-first so shared edges are traversed in opposite
// directions, then flips everything if the enclosed signed volume is
// negative. Returns false when a conflict is found (non-orientable or
// non-manifold input); faces are then left in majority orientation.
bool orient_faces_consistently(IndexedMesh& mesh);

double mesh_signed_volume(const IndexedMesh& mesh);

// Fan for convex loops, ear clipping otherwise.
std::vector<std::array<int, 3>> triangulate_loop(
    const std::vector<Vec3>& vertices, const std::vector<int>& loop);

}  // namespace refit
