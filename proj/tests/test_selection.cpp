#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "refit/evaluation.hpp"
#include "refit/selection.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace refit;
using namespace refit::testing;

namespace {

SupportingPlane sp(const Vec3& n, double d) {
  SupportingPlane p;
  p.plane = Plane(n.normalized(), d);
  return p;
}

CandidateSet unit_cube_candidates() {
  std::vector<SupportingPlane> planes = {
      sp({1, 0, 0}, 0), sp({1, 0, 0}, -1), sp({0, 1, 0}, 0),
      sp({0, 1, 0}, -1), sp({0, 0, 1}, 0), sp({0, 0, 1}, -1)};
  return generate_candidates(planes, Aabb3{{-0.1, -0.1, -0.1},
                                           {1.1, 1.1, 1.1}});
}

// Marks the six central cells (the actual cube walls) with confidence 1.
std::set<int> mark_cube_walls(CandidateSet& set) {
  std::set<int> walls;
  for (std::size_t f = 0; f < set.faces.size(); ++f) {
    Vec3 c = polygon_centroid(set.faces[f].polygon);
    auto centralish = [](double v) { return v > 0.4 && v < 0.6; };
    int central = 0;
    if (centralish(c.x)) ++central;
    if (centralish(c.y)) ++central;
    if (centralish(c.z)) ++central;
    if (central == 2 && set.faces[f].area > 0.9) {
      set.faces[f].confidence = 1.0;
      walls.insert(static_cast<int>(f));
    } else {
      set.faces[f].confidence = 0.0;
    }
  }
  return walls;
}

// Random instance for the enumeration oracle: n faces, every face covered by
// at least one edge, random costs in [-1, 1].
SelectionProblem random_instance(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> cost(-1.0, 1.0);
  std::uniform_int_distribution<int> face(0, n - 1);
  std::uniform_int_distribution<int> esize(2, 4);
  std::uniform_int_distribution<int> ecount(n / 2, n);
  std::bernoulli_distribution sharp(0.6);

  SelectionProblem p;
  p.num_faces = static_cast<std::size_t>(n);
  p.lambda_coverage = 0.7;
  p.lambda_complexity = 0.3;
  for (int i = 0; i < n; ++i) p.cov_costs.push_back(cost(rng));

  std::vector<char> covered(n, 0);
  int edges = ecount(rng);
  for (int e = 0; e < edges; ++e) {
    std::set<int> members;
    int k = esize(rng);
    while (static_cast<int>(members.size()) < k) members.insert(face(rng));
    SelectionProblem::Edge edge;
    edge.faces.assign(members.begin(), members.end());
    for (std::size_t i = 0; i < edge.faces.size(); ++i)
      for (std::size_t j = i + 1; j < edge.faces.size(); ++j)
        if (sharp(rng))
          edge.sharp_pairs.push_back({edge.faces[i], edge.faces[j]});
    for (int f : edge.faces) covered[f] = 1;
    p.edges.push_back(std::move(edge));
  }
  // Cover leftover faces with pair edges.
  for (int f = 0; f < n; ++f) {
    if (covered[f]) continue;
    SelectionProblem::Edge edge;
    edge.faces = {f, (f + 1) % n};
    p.edges.push_back(edge);
  }
  return p;
}

void check_eq5(const SelectionProblem& problem,
               const std::vector<char>& selected) {
  for (const auto& e : problem.edges) {
    int count = 0;
    for (int f : e.faces) count += selected[f] ? 1 : 0;
    CHECK((count == 0 || count == 2));
  }
}

}  // namespace

TEST_CASE("coverage_cost matches the sigmoid contract examples") {
  CHECK(std::fabs(coverage_cost(2.0, 0.3, 0.3)) < 1e-12);

  double reward = coverage_cost(1.0, 1.0, 0.3);
  CHECK(reward == doctest::Approx(1.0 / (1.0 + std::exp(0.7)) - 0.5)
                      .epsilon(1e-15));
  CHECK(reward < 0.0);

  double penalty = coverage_cost(1.0, 0.0, 0.3);
  CHECK(penalty == doctest::Approx(1.0 / (1.0 + std::exp(-0.3)) - 0.5)
                       .epsilon(1e-15));
  CHECK(penalty > 0.0);
}

TEST_CASE("coverage_cost sign, monotonicity and area linearity") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> area(0.01, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    double a = area(rng), c = u(rng), tau = u(rng);
    double v = coverage_cost(a, c, tau);
    if (c != tau) {
      double sign_expected = tau - c;
      CHECK(v * sign_expected > 0.0);
    }
    CHECK(coverage_cost(a, tau, tau) == doctest::Approx(0.0).epsilon(1e-12));
    // Strictly decreasing in confidence.
    CHECK(coverage_cost(a, c + 0.01, tau) < v);
    // Linear in area.
    CHECK(coverage_cost(3.0 * a, c, tau) == doctest::Approx(3.0 * v));
  }
}

TEST_CASE("build_problem wires variables, constraints and sharp pairs") {
  CandidateSet set = unit_cube_candidates();
  mark_cube_walls(set);
  SelectionParams params;
  SelectionProblem problem = build_problem(set, params);

  CHECK(problem.num_faces == 54);
  CHECK(problem.edges.size() == set.edges.size());

  for (std::size_t e = 0; e < set.edges.size(); ++e) {
    const auto& edge = problem.edges[e];
    if (edge.faces.size() == 4) {
      // Two faces per plane: the two same-plane pairs are coplanar, the four
      // cross pairs are sharp.
      CHECK(edge.sharp_pairs.size() == 4);
    } else if (edge.faces.size() == 1) {
      CHECK(edge.sharp_pairs.empty());
    }
  }

  CandidateSet empty;
  CHECK_THROWS_AS(build_problem(empty, params), EmptyProblem);
}

TEST_CASE("solver selects exactly the cube walls and extraction is closed") {
  CandidateSet set = unit_cube_candidates();
  std::set<int> walls = mark_cube_walls(set);
  REQUIRE(walls.size() == 6);

  SelectionParams params;
  SelectionProblem problem = build_problem(set, params);
  Solution solution = solve(problem, 30.0);
  REQUIRE(solution.status == Solution::Status::optimal);

  std::set<int> chosen;
  for (std::size_t f = 0; f < solution.selected.size(); ++f)
    if (solution.selected[f]) chosen.insert(static_cast<int>(f));
  CHECK(chosen == walls);
  check_eq5(problem, solution.selected);

  RefinedModel mesh = extract_mesh(set, solution, true, "cube");
  ValidityReport validity = validate_topology(mesh.faces);
  CHECK(validity.watertight);
  CHECK(validity.manifold);

  // Merged output: one face per wall.
  CHECK(mesh.faces.size() == 6);
}

TEST_CASE("all-zero confidences produce an empty selection and a guard") {
  CandidateSet set = unit_cube_candidates();
  for (CandidateFace& f : set.faces) f.confidence = 0.0;
  SelectionParams params;
  SelectionProblem problem = build_problem(set, params);
  Solution solution = solve(problem, 30.0);
  REQUIRE(solution.status == Solution::Status::optimal);
  CHECK(solution.objective_value == 0.0);
  for (char s : solution.selected) CHECK(s == 0);
  CHECK_THROWS_AS(extract_mesh(set, solution, true, "empty"),
                  EmptyModelError);
}

TEST_CASE("branch and bound equals exhaustive enumeration on random instances") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> size(6, 16);
  for (int trial = 0; trial < 25; ++trial) {
    SelectionProblem p = random_instance(rng, size(rng));
    Solution solution = solve(p, 30.0);
    REQUIRE(solution.status == Solution::Status::optimal);
    EnumerationResult oracle = enumerate_bip(p);
    CHECK(solution.objective_value == oracle.objective);
    check_eq5(p, solution.selected);
  }
}

TEST_CASE("constraints hold even with complexity off and all costs negative") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    SelectionProblem p = random_instance(rng, 12);
    for (double& c : p.cov_costs) c = -std::fabs(c) - 0.01;
    p.lambda_complexity = 0.0;
    p.lambda_coverage = 1.0;
    Solution solution = solve(p, 30.0);
    REQUIRE(solution.status == Solution::Status::optimal);
    check_eq5(p, solution.selected);
    EnumerationResult oracle = enumerate_bip(p);
    CHECK(solution.objective_value == oracle.objective);
  }
}

TEST_CASE("timeout returns the incumbent with the timeout status") {
  SelectionProblem p;
  p.num_faces = 26;
  p.lambda_coverage = 0.7;
  p.lambda_complexity = 0.3;
  p.cov_costs.assign(26, 0.0);  // flat landscape: nothing prunes
  Solution solution = solve(p, 0.0);
  CHECK(solution.status == Solution::Status::timeout);
  CHECK(solution.objective_value == 0.0);
}

TEST_CASE("export_lp writes a well-formed LP file") {
  CandidateSet set = unit_cube_candidates();
  mark_cube_walls(set);
  SelectionProblem problem = build_problem(set, SelectionParams{});
  auto dir = temp_dir("lp");
  export_lp(problem, dir / "cube.lp");

  std::ifstream in(dir / "cube.lp");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("x0") != std::string::npos);
  CHECK(text.find("- 2 y0 = 0") != std::string::npos);
  CHECK(text.find("Binary") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
