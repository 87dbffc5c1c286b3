#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refit/candidates.hpp"
#include "refit/model.hpp"

namespace refit {

struct SelectionParams {
  double tau_cov = 0.3;
  double lambda_coverage = 0.7;
  double lambda_complexity = 0.3;
  double time_limit_s = 60.0;
  bool merge_coplanar = true;  // merge coplanar selected faces on extraction
};

// Shifted sigmoid cost: zero at confidence == tau_cov, negative (reward)
// above it, positive (penalty) below, linear in area.
double coverage_cost(double area, double confidence, double tau_cov);

struct SelectionProblem {
  struct Edge {
    std::vector<int> faces;                       // N(e)
    std::vector<std::pair<int, int>> sharp_pairs; // non-coplanar incident pairs
  };
  std::size_t num_faces = 0;
  std::vector<double> cov_costs;  // per face
  std::vector<Edge> edges;
  double lambda_coverage = 0.7;
  double lambda_complexity = 0.3;

  // Canonical objective (fixed summation order) shared by the solver, the
  // LP export, and the enumeration oracle in the tests.
  double objective(const std::vector<char>& selected) const;
};

SelectionProblem build_problem(const CandidateSet& set,
                               const SelectionParams& params);

struct Solution {
  enum class Status { optimal, infeasible, timeout };
  Status status = Status::optimal;
  std::vector<char> selected;
  double objective_value = 0.0;
  long long nodes_explored = 0;
  double wall_seconds = 0.0;
  std::vector<std::pair<long long, double>> incumbent_trace;  // (node, obj)
};

// Exact depth-first branch and bound with unit propagation over the
// per-edge {0,2} equalities. Deterministic branching: largest |cov_cost|
// unfixed face first, preferred value the one that lowers the cost.
Solution solve(const SelectionProblem& problem, double time_limit_s = 60.0);

// CPLEX LP text format with variables x<i>, y<e>, z<e>.
void export_lp(const SelectionProblem& problem,
               const std::filesystem::path& path);

void write_solve_log(const Solution& solution,
                     const std::filesystem::path& path);

// Assembles the selected faces into a closed mesh: vertices fused, coplanar
// neighbors optionally merged, windings oriented outward. Throws
// TopologyViolation if the result fails watertight validation and
// EmptyModelError when nothing was selected.
RefinedModel extract_mesh(const CandidateSet& set, const Solution& solution,
                          bool merge_coplanar, const std::string& model_id);

}  // namespace refit
