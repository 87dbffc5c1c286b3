#include "refit/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "refit/evaluation.hpp"
#include "refit/mesh_ops.hpp"

#include <json.hpp>

namespace refit {

double coverage_cost(double area, double confidence, double tau_cov) {
  return area * (1.0 / (1.0 + std::exp(confidence - tau_cov)) - 0.5);
}

double SelectionProblem::objective(const std::vector<char>& selected) const {
  double cov = 0.0;
  for (std::size_t i = 0; i < num_faces; ++i)
    if (selected[i]) cov += cov_costs[i];
  int sharp = 0;
  for (const Edge& e : edges) {
    for (const auto& [a, b] : e.sharp_pairs)
      if (selected[a] && selected[b]) {
        ++sharp;
        break;
      }
  }
  double comp = edges.empty()
                    ? 0.0
                    : static_cast<double>(sharp) /
                          static_cast<double>(edges.size());
  return lambda_coverage * cov + lambda_complexity * comp;
}

namespace {

bool planes_coplanar(const Plane& a, const Plane& b) {
  const double cos_tol = std::cos(1.0 * std::numbers::pi / 180.0);
  double cosang = a.normal.dot(b.normal);
  if (std::fabs(cosang) < cos_tol) return false;
  double db = cosang < 0.0 ? -b.d : b.d;
  return std::fabs(a.d - db) <= 1e-3;
}

}  // namespace

SelectionProblem build_problem(const CandidateSet& set,
                               const SelectionParams& params) {
  if (set.faces.empty()) throw EmptyProblem("candidate set has no faces");

  SelectionProblem problem;
  problem.num_faces = set.faces.size();
  problem.lambda_coverage = params.lambda_coverage;
  problem.lambda_complexity = params.lambda_complexity;
  problem.cov_costs.reserve(set.faces.size());
  for (const CandidateFace& f : set.faces)
    problem.cov_costs.push_back(
        coverage_cost(f.area, f.confidence, params.tau_cov));

  problem.edges.reserve(set.edges.size());
  for (const CandidateEdge& e : set.edges) {
    SelectionProblem::Edge edge;
    edge.faces = e.incident_faces;
    for (std::size_t i = 0; i < edge.faces.size(); ++i)
      for (std::size_t j = i + 1; j < edge.faces.size(); ++j) {
        const Plane& pa =
            set.planes[set.faces[edge.faces[i]].supporting_plane].plane;
        const Plane& pb =
            set.planes[set.faces[edge.faces[j]].supporting_plane].plane;
        if (!planes_coplanar(pa, pb))
          edge.sharp_pairs.push_back({edge.faces[i], edge.faces[j]});
      }
    problem.edges.push_back(std::move(edge));
  }
  return problem;
}

namespace {

// DFS branch-and-bound state over x in {unfixed, 0, 1}^n with per-edge
// bookkeeping for unit propagation.
class BnB {
 public:
  BnB(const SelectionProblem& p, double time_limit)
      : p_(p),
        time_limit_(time_limit),
        assign_(p.num_faces, -1),
        face_edges_(p.num_faces) {
    for (std::size_t e = 0; e < p.edges.size(); ++e) {
      for (int f : p.edges[e].faces)
        face_edges_[f].push_back(static_cast<int>(e));
      selected_in_edge_.push_back(0);
      unfixed_in_edge_.push_back(static_cast<int>(p.edges[e].faces.size()));
    }
    neg_cost_total_ = 0.0;
    for (double c : p.cov_costs)
      if (c < 0.0) neg_cost_total_ += c;
  }

  Solution run() {
    start_ = std::chrono::steady_clock::now();
    Solution best;
    best.selected.assign(p_.num_faces, 0);
    best.objective_value = p_.objective(best.selected);  // empty is feasible
    best_ = &best;

    // Root propagation (e.g. single-incidence boundary edges force 0).
    std::vector<int> trail;
    bool feasible = true;
    for (std::size_t e = 0; e < p_.edges.size() && feasible; ++e)
      feasible = propagate_edge(static_cast<int>(e), trail);
    if (feasible) dfs(trail.size());
    undo(trail, 0);

    best.nodes_explored = nodes_;
    best.wall_seconds = elapsed();
    best.status = timed_out_ ? Solution::Status::timeout
                             : Solution::Status::optimal;
    best.incumbent_trace = std::move(trace_);
    return best;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  // Lower bound: committed coverage cost + every still-claimable reward,
  // plus the sharp-edge cost already forced by fixed pairs.
  double bound() const {
    double cov = 0.0;
    for (std::size_t i = 0; i < p_.num_faces; ++i) {
      if (assign_[i] == 1)
        cov += p_.cov_costs[i];
      else if (assign_[i] == -1 && p_.cov_costs[i] < 0.0)
        cov += p_.cov_costs[i];
    }
    int sharp = 0;
    for (const auto& e : p_.edges) {
      for (const auto& [a, b] : e.sharp_pairs)
        if (assign_[a] == 1 && assign_[b] == 1) {
          ++sharp;
          break;
        }
    }
    double comp = p_.edges.empty()
                      ? 0.0
                      : static_cast<double>(sharp) /
                            static_cast<double>(p_.edges.size());
    return p_.lambda_coverage * cov + p_.lambda_complexity * comp;
  }

  bool set_value(int face, int value, std::vector<int>& trail) {
    assign_[face] = value;
    trail.push_back(face);
    for (int e : face_edges_[face]) {
      selected_in_edge_[e] += value;
      unfixed_in_edge_[e] -= 1;
    }
    for (int e : face_edges_[face])
      if (!propagate_edge(e, trail)) return false;
    return true;
  }

  // Enforces sum over N(e) in {0, 2} on the current partial assignment.
  bool propagate_edge(int e, std::vector<int>& trail) {
    int sel = selected_in_edge_[e];
    int unfixed = unfixed_in_edge_[e];
    if (sel > 2) return false;
    if (sel == 2) {
      for (int f : p_.edges[e].faces)
        if (assign_[f] == -1 && !set_value(f, 0, trail)) return false;
      return true;
    }
    if (sel == 1) {
      if (unfixed == 0) return false;
      if (unfixed == 1) {
        for (int f : p_.edges[e].faces)
          if (assign_[f] == -1) return set_value(f, 1, trail);
      }
      return true;
    }
    if (unfixed == 1) {
      for (int f : p_.edges[e].faces)
        if (assign_[f] == -1) return set_value(f, 0, trail);
    }
    return true;
  }

  void undo(std::vector<int>& trail, std::size_t mark) {
    while (trail.size() > mark) {
      int face = trail.back();
      trail.pop_back();
      int value = assign_[face];
      assign_[face] = -1;
      for (int e : face_edges_[face]) {
        selected_in_edge_[e] -= value;
        unfixed_in_edge_[e] += 1;
      }
    }
  }

  int pick_branch_face() const {
    int best = -1;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < p_.num_faces; ++i) {
      if (assign_[i] != -1) continue;
      double mag = std::fabs(p_.cov_costs[i]);
      if (mag > best_mag) {
        best_mag = mag;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void dfs(std::size_t /*depth*/) {
    if (timed_out_) return;
    if ((++nodes_ & 1023) == 0 && elapsed() > time_limit_) {
      timed_out_ = true;
      return;
    }
    // Exploration margin keeps floating-point bound noise from ever pruning
    // the true optimum; equal-objective solutions keep the first incumbent.
    if (bound() >= best_->objective_value + 1e-9) return;

    int face = pick_branch_face();
    if (face < 0) {
      std::vector<char> sel(p_.num_faces, 0);
      for (std::size_t i = 0; i < p_.num_faces; ++i) sel[i] = assign_[i] == 1;
      double obj = p_.objective(sel);
      if (obj < best_->objective_value) {
        best_->objective_value = obj;
        best_->selected = std::move(sel);
        trace_.push_back({nodes_, obj});
      }
      return;
    }

    int first = p_.cov_costs[face] < 0.0 ? 1 : 0;
    for (int value : {first, 1 - first}) {
      std::vector<int> trail;
      if (set_value(face, value, trail)) dfs(trail.size());
      undo(trail, 0);
      if (timed_out_) return;
    }
  }

  const SelectionProblem& p_;
  double time_limit_;
  std::vector<int> assign_;
  std::vector<std::vector<int>> face_edges_;
  std::vector<int> selected_in_edge_;
  std::vector<int> unfixed_in_edge_;
  double neg_cost_total_ = 0.0;
  Solution* best_ = nullptr;
  long long nodes_ = 0;
  bool timed_out_ = false;
  std::vector<std::pair<long long, double>> trace_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

Solution solve(const SelectionProblem& problem, double time_limit_s) {
  BnB solver(problem, time_limit_s);
  return solver.run();
}

void export_lp(const SelectionProblem& problem,
               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[160];

  out << "\\ refit face selection\nMinimize\n obj:";
  bool first = true;
  for (std::size_t i = 0; i < problem.num_faces; ++i) {
    double c = problem.lambda_coverage * problem.cov_costs[i];
    std::snprintf(buf, sizeof(buf), " %s%.12g x%zu", (!first && c >= 0) ? "+ " : "",
                  c, i);
    out << buf;
    first = false;
  }
  double zc = problem.edges.empty()
                  ? 0.0
                  : problem.lambda_complexity /
                        static_cast<double>(problem.edges.size());
  for (std::size_t e = 0; e < problem.edges.size(); ++e) {
    if (problem.edges[e].sharp_pairs.empty()) continue;
    std::snprintf(buf, sizeof(buf), " + %.12g z%zu", zc, e);
    out << buf;
  }
  out << "\nSubject To\n";
  for (std::size_t e = 0; e < problem.edges.size(); ++e) {
    out << " e" << e << ":";
    for (int f : problem.edges[e].faces) out << " + x" << f;
    out << " - 2 y" << e << " = 0\n";
  }
  for (std::size_t e = 0; e < problem.edges.size(); ++e) {
    const auto& pairs = problem.edges[e].sharp_pairs;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      out << " s" << e << "_" << k << ": x" << pairs[k].first << " + x"
          << pairs[k].second << " - z" << e << " <= 1\n";
  }
  out << "Binary\n";
  for (std::size_t i = 0; i < problem.num_faces; ++i) out << " x" << i << "\n";
  for (std::size_t e = 0; e < problem.edges.size(); ++e)
    out << " y" << e << "\n";
  for (std::size_t e = 0; e < problem.edges.size(); ++e)
    if (!problem.edges[e].sharp_pairs.empty()) out << " z" << e << "\n";
  out << "End\n";
}

void write_solve_log(const Solution& solution,
                     const std::filesystem::path& path) {
  nlohmann::ordered_json log;
  log["status"] = solution.status == Solution::Status::optimal ? "optimal"
                  : solution.status == Solution::Status::timeout
                      ? "timeout"
                      : "infeasible";
  log["objective"] = solution.objective_value;
  log["nodes_explored"] = solution.nodes_explored;
  log["wall_seconds"] = solution.wall_seconds;
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& [node, obj] : solution.incumbent_trace)
    trace.push_back({{"node", node}, {"objective", obj}});
  log["incumbent_trace"] = trace;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << log.dump(2) << "\n";
}

RefinedModel extract_mesh(const CandidateSet& set, const Solution& solution,
                          bool merge_coplanar, const std::string& model_id) {
  std::vector<int> selected;
  for (std::size_t i = 0; i < set.faces.size(); ++i)
    if (solution.selected[i]) selected.push_back(static_cast<int>(i));
  if (selected.empty())
    throw EmptyModelError(
        "optimal selection is empty; consider lowering tau_cov");

  // Group coplanar neighbors (sharing a candidate edge) for merging.
  std::vector<int> parent(set.faces.size());
  for (std::size_t i = 0; i < parent.size(); ++i)
    parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  if (merge_coplanar) {
    for (const CandidateEdge& e : set.edges) {
      std::vector<int> sel;
      for (int f : e.incident_faces)
        if (solution.selected[f]) sel.push_back(f);
      if (sel.size() != 2) continue;
      const Plane& pa = set.planes[set.faces[sel[0]].supporting_plane].plane;
      const Plane& pb = set.planes[set.faces[sel[1]].supporting_plane].plane;
      if (planes_coplanar(pa, pb)) parent[find(sel[0])] = find(sel[1]);
    }
  }

  std::map<int, std::vector<int>> groups;
  for (int f : selected) groups[find(f)].push_back(f);

  std::vector<MeshFace> faces;
  for (const auto& [root, members] : groups) {
    auto provenance_of = [&](int face_id) {
      const SupportingPlane& sp =
          set.planes[set.faces[face_id].supporting_plane];
      ProvenanceTag tag;
      if (sp.origins.size() != 1) {
        tag.kind = ProvenanceTag::Kind::merged;
      } else {
        tag.kind = sp.origins[0].kind == PlaneOrigin::Kind::scan
                       ? ProvenanceTag::Kind::scan_plane
                       : ProvenanceTag::Kind::coarse_plane;
        tag.source_index = sp.origins[0].index;
      }
      return tag;
    };

    if (members.size() == 1) {
      MeshFace f;
      f.loop = set.faces[members[0]].polygon.vertices;
      f.provenance = provenance_of(members[0]);
      faces.push_back(std::move(f));
      continue;
    }

    // Merge the group: weld member loops, cancel interior directed edges,
    // chain the remaining boundary.
    std::vector<std::vector<Vec3>> loops;
    for (int f : members) loops.push_back(set.faces[f].polygon.vertices);
    IndexedMesh sub = weld_loops(loops, kEpsWeld);

    std::map<std::pair<int, int>, int> directed;
    for (const auto& loop : sub.faces)
      for (std::size_t i = 0; i < loop.size(); ++i)
        directed[{loop[i], loop[(i + 1) % loop.size()]}]++;
    std::map<int, std::vector<int>> next;
    for (const auto& [edge, count] : directed) {
      auto rev = directed.find({edge.second, edge.first});
      int rc = rev == directed.end() ? 0 : rev->second;
      if (count > rc) next[edge.first].push_back(edge.second);
    }
    for (auto& [from, tos] : next) std::sort(tos.begin(), tos.end());

    std::vector<std::vector<int>> rings;
    while (!next.empty()) {
      int start = next.begin()->first;
      std::vector<int> ring;
      int cur = start;
      while (true) {
        ring.push_back(cur);
        auto it = next.find(cur);
        if (it == next.end() || it->second.empty()) break;
        int to = it->second.front();
        it->second.erase(it->second.begin());
        if (it->second.empty()) next.erase(it);
        cur = to;
        if (cur == start) break;
      }
      if (ring.size() >= 3) rings.push_back(std::move(ring));
    }

    if (rings.size() == 1) {
      MeshFace f;
      for (int id : rings[0]) f.loop.push_back(sub.vertices[id]);
      f.provenance = provenance_of(members[0]);
      faces.push_back(std::move(f));
    } else {
      // Boundary with holes or pinches; keep the cells unmerged.
      for (int fidx : members) {
        MeshFace f;
        f.loop = set.faces[fidx].polygon.vertices;
        f.provenance = provenance_of(fidx);
        faces.push_back(std::move(f));
      }
    }
  }

  IndexedMesh mesh = weld_faces(faces, kEpsWeld);
  if (!orient_faces_consistently(mesh))
    throw TopologyViolation("selected faces are not consistently orientable");

  RefinedModel model;
  model.id = model_id;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    MeshFace f;
    for (int id : mesh.faces[i]) f.loop.push_back(mesh.vertices[id]);
    f.provenance = i < mesh.source.size() && mesh.source[i] >= 0 &&
                           mesh.source[i] < static_cast<int>(faces.size())
                       ? faces[mesh.source[i]].provenance
                       : ProvenanceTag{};
    model.faces.push_back(std::move(f));
  }

  ValidityReport validity = validate_topology(model.faces);
  if (!validity.watertight)
    throw TopologyViolation(
        "extracted mesh failed watertight validation (boundary edges: " +
        std::to_string(validity.boundary_edge_count) + ", non-manifold: " +
        std::to_string(validity.non_manifold_edge_count) + ")");
  return model;
}

}  // namespace refit
