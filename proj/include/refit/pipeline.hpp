#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "refit/config.hpp"
#include "refit/evaluation.hpp"
#include "refit/selection.hpp"

namespace refit {

struct DumpOptions {
  std::optional<std::filesystem::path> candidates_prefix;  // OBJ + JSON
  std::optional<std::filesystem::path> confidence_csv;
  std::optional<std::filesystem::path> matches_json;
  std::optional<std::filesystem::path> solve_log;
  std::optional<std::filesystem::path> debug_clusters_dir;
  std::optional<std::filesystem::path> lp_path;  // export LP and stop
  bool distance_csv = false;
};

struct RefineResult {
  RefinedModel refined;
  EvaluationReport report;
  ModelMatchResult match;
  Solution solution;
};

// Full single-building pipeline on loaded inputs:
// segment -> match -> remove -> merge -> candidates -> confidence ->
// build -> solve -> extract -> evaluate.
RefineResult refine_building(const CoarseModel& model,
                             const SegmentedCloud& segmented,
                             const PipelineConfig& config,
                             const DumpOptions& dumps = {});

struct BuildingRun {
  std::string building_id;
  std::string status;  // refined | skipped_no_match | skipped | failed
  std::string detail;
  double wall_ms = 0.0;
  std::optional<EvaluationReport> report;
};

struct BatchSummary {
  std::vector<BuildingRun> runs;  // sorted by building id
  double watertight_rate_before = 0.0;
  double watertight_rate_after = 0.0;
  double mean_rmse_before = 0.0;
  double mean_rmse_after = 0.0;
  double mean_mae_before = 0.0;
  double mean_mae_after = 0.0;
};

// Routes each cloud to its best-matching model, refines those buildings in
// parallel, copies unmatched models through unchanged. Writes per-building
// OBJ + report plus manifest.json and summary.json under out_dir.
BatchSummary refine_batch(const std::filesystem::path& models_dir,
                          const std::filesystem::path& clouds_path,
                          const PipelineConfig& config,
                          const std::filesystem::path& out_dir);

struct SweepRow {
  double tau = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double validity_rate = 0.0;
};

// Runs the full pipeline per tau over a fixture directory pair and returns
// one row per tau (also written as CSV when out_csv is set).
std::vector<SweepRow> sweep_tau(
    const std::filesystem::path& models_dir,
    const std::filesystem::path& clouds_path, std::vector<double> taus,
    const PipelineConfig& config,
    const std::optional<std::filesystem::path>& out_csv);

std::uint64_t fnv1a64_file(const std::filesystem::path& path);

void write_manifest(const PipelineConfig& config,
                    const std::vector<std::pair<std::string, std::uint64_t>>&
                        input_hashes,
                    const std::vector<BuildingRun>& runs,
                    const std::filesystem::path& path);

// Candidate-set debug dump: <prefix>.obj with every face and
// <prefix>_adjacency.json with edges and incidence.
void dump_candidate_set(const CandidateSet& set,
                        const std::filesystem::path& prefix);

}  // namespace refit
