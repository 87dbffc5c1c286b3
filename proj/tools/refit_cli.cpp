// refit: refine coarse LOD2 building meshes against facade point clouds.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace refit;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

PipelineConfig resolve_config(const CommonArgs& args) {
  PipelineConfig config;
  if (!args.config_path.empty())
    config = load_config_file(args.config_path);
  apply_env_overrides(config);
  for (const std::string& kv : args.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "Config file (sectioned key = value)");
  cmd->add_option("--set", args.overrides,
                  "Override a config key, e.g. --set selection.tau_cov=0.4");
}

int run_refine(const std::string& model_path, const std::string& cloud_path,
               const std::string& out_dir, const CommonArgs& common,
               const DumpOptions& dumps) {
  PipelineConfig config = resolve_config(common);
  fs::create_directories(out_dir);

  CoarseModel model = load_model_obj(model_path, config.expansion_ratio);
  SegmentedCloud segmented =
      segment_planes_ransac(load_cloud(cloud_path), config.ransac);

  auto t0 = std::chrono::steady_clock::now();
  RefineResult result = refine_building(model, segmented, config, dumps);
  double ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

  fs::path obj_out = fs::path(out_dir) / (model.id + "_refined.obj");
  fs::path report_out = fs::path(out_dir) / (model.id + "_report.json");
  write_model_obj(result.refined, obj_out);
  write_report_json(result.report, report_out);
  if (dumps.distance_csv) {
    write_distance_csv(result.report.c2m_before,
                       fs::path(out_dir) / (model.id + "_c2m_before.csv"));
    write_distance_csv(result.report.c2m_after,
                       fs::path(out_dir) / (model.id + "_c2m_after.csv"));
  }

  BuildingRun run;
  run.building_id = model.id;
  run.status = "refined";
  run.wall_ms = ms;
  write_manifest(config,
                 {{fs::path(model_path).filename().string(),
                   fnv1a64_file(model_path)},
                  {fs::path(cloud_path).filename().string(),
                   fnv1a64_file(cloud_path)}},
                 {run}, fs::path(out_dir) / "manifest.json");

  std::printf("refined %s: rmse %.4f -> %.4f m, delta_d %.4f m, %s\n",
              model.id.c_str(), result.report.c2m_before.rmse,
              result.report.c2m_after.rmse, result.report.delta_d,
              result.report.validity_after.watertight ? "watertight"
                                                      : "NOT watertight");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refit: LOD2 building model refinement from facade scans"};
  app.require_subcommand(1);

  // refine
  auto* refine_cmd =
      app.add_subcommand("refine", "Refine one building against one cloud");
  std::string model_path, cloud_path, out_dir = "refit_out";
  CommonArgs refine_common;
  DumpOptions refine_dumps;
  std::string conf_csv, matches_json, solve_log, clusters_dir, cand_prefix;
  refine_cmd->add_option("--model", model_path, "Coarse model OBJ")
      ->required();
  refine_cmd->add_option("--cloud", cloud_path, "Facade point cloud")
      ->required();
  refine_cmd->add_option("--out-dir", out_dir, "Output directory");
  add_common(refine_cmd, refine_common);
  refine_cmd->add_option("--dump-candidates", cand_prefix,
                         "Write candidate OBJ + adjacency JSON to <prefix>");
  refine_cmd->add_option("--dump-confidence", conf_csv,
                         "Write per-face confidence CSV");
  refine_cmd->add_option("--dump-matches", matches_json,
                         "Write match report JSON");
  refine_cmd->add_option("--solve-log", solve_log, "Write solver log JSON");
  refine_cmd->add_option("--debug-clusters", clusters_dir,
                         "Write per-cluster PLY files");
  refine_cmd->add_flag("--distance-csv", refine_dumps.distance_csv,
                       "Write per-point C2M distances");

  // refine-batch
  auto* batch_cmd = app.add_subcommand(
      "refine-batch", "Refine a directory of buildings against clouds");
  std::string models_dir, clouds_path, batch_out = "refit_out";
  CommonArgs batch_common;
  batch_cmd->add_option("--models", models_dir, "Directory of per-building OBJs")
      ->required();
  batch_cmd->add_option("--clouds", clouds_path, "Cloud file or directory")
      ->required();
  batch_cmd->add_option("--out-dir", batch_out, "Output directory");
  add_common(batch_cmd, batch_common);

  // evaluate
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Cloud-to-mesh statistics and validity for a model");
  std::string eval_model, eval_refined, eval_cloud, eval_out = "report.json";
  CommonArgs eval_common;
  eval_cmd->add_option("--model", eval_model, "Model OBJ")->required();
  eval_cmd->add_option("--refined", eval_refined,
                       "Refined OBJ (optional; enables before/after)");
  eval_cmd->add_option("--cloud", eval_cloud, "Reference cloud")->required();
  eval_cmd->add_option("--out", eval_out, "Report JSON path");
  add_common(eval_cmd, eval_common);

  // sweep-tau
  auto* sweep_cmd = app.add_subcommand(
      "sweep-tau", "Run the pipeline across coverage thresholds");
  std::string sweep_models, sweep_clouds, sweep_out = "sweep.csv";
  std::vector<double> taus;
  CommonArgs sweep_common;
  sweep_cmd->add_option("--models", sweep_models, "Models directory")
      ->required();
  sweep_cmd->add_option("--clouds", sweep_clouds, "Clouds file or directory")
      ->required();
  sweep_cmd->add_option("--taus", taus, "Coverage thresholds to sweep")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "CSV output path");
  add_common(sweep_cmd, sweep_common);

  // export-lp
  auto* lp_cmd = app.add_subcommand(
      "export-lp", "Build the selection problem and write it in LP format");
  std::string lp_model, lp_cloud, lp_out = "problem.lp";
  CommonArgs lp_common;
  lp_cmd->add_option("--model", lp_model, "Coarse model OBJ")->required();
  lp_cmd->add_option("--cloud", lp_cloud, "Facade point cloud")->required();
  lp_cmd->add_option("--out", lp_out, "LP file path");
  add_common(lp_cmd, lp_common);

  // dump-candidates
  auto* dump_cmd = app.add_subcommand(
      "dump-candidates", "Generate and dump the candidate set");
  std::string dc_model, dc_cloud, dc_prefix = "candidates";
  CommonArgs dc_common;
  dump_cmd->add_option("--model", dc_model, "Coarse model OBJ")->required();
  dump_cmd->add_option("--cloud", dc_cloud, "Facade point cloud")->required();
  dump_cmd->add_option("--out-prefix", dc_prefix, "Output path prefix");
  add_common(dump_cmd, dc_common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (refine_cmd->parsed()) {
      if (!cand_prefix.empty()) refine_dumps.candidates_prefix = cand_prefix;
      if (!conf_csv.empty()) refine_dumps.confidence_csv = conf_csv;
      if (!matches_json.empty()) refine_dumps.matches_json = matches_json;
      if (!solve_log.empty()) refine_dumps.solve_log = solve_log;
      if (!clusters_dir.empty()) refine_dumps.debug_clusters_dir = clusters_dir;
      return run_refine(model_path, cloud_path, out_dir, refine_common,
                        refine_dumps);
    }
    if (batch_cmd->parsed()) {
      PipelineConfig config = resolve_config(batch_common);
      BatchSummary summary =
          refine_batch(models_dir, clouds_path, config, batch_out);
      std::printf("batch: %zu buildings, watertight %.0f%% -> %.0f%%\n",
                  summary.runs.size(), 100.0 * summary.watertight_rate_before,
                  100.0 * summary.watertight_rate_after);
      return 0;
    }
    if (eval_cmd->parsed()) {
      PipelineConfig config = resolve_config(eval_common);
      CoarseModel model = load_model_obj(eval_model, config.expansion_ratio);
      PointCloud cloud = load_cloud(eval_cloud);
      EvaluationReport report;
      std::vector<MeshFace> before = coarse_model_mesh(model);
      report.c2m_before = c2m(cloud, before);
      report.validity_before = validate_topology(before);
      if (!eval_refined.empty()) {
        CoarseModel refined =
            load_model_obj(eval_refined, config.expansion_ratio);
        std::vector<MeshFace> after = coarse_model_mesh(refined);
        report.c2m_after = c2m(cloud, after);
        report.validity_after = validate_topology(after);
        report.delta_d = centroid_offset_reduction(cloud, before, after);
      } else {
        report.c2m_after = report.c2m_before;
        report.validity_after = report.validity_before;
      }
      write_report_json(report, eval_out);
      std::printf("rmse %.4f m, mae %.4f m, %s\n", report.c2m_before.rmse,
                  report.c2m_before.mae,
                  report.validity_before.watertight ? "watertight"
                                                    : "not watertight");
      return 0;
    }
    if (sweep_cmd->parsed()) {
      PipelineConfig config = resolve_config(sweep_common);
      auto rows = sweep_tau(sweep_models, sweep_clouds, taus, config,
                            fs::path(sweep_out));
      for (const SweepRow& row : rows)
        std::printf("tau %.2f: rmse %.4f, mae %.4f, validity %.0f%%\n",
                    row.tau, row.rmse, row.mae, 100.0 * row.validity_rate);
      return 0;
    }
    if (lp_cmd->parsed()) {
      PipelineConfig config = resolve_config(lp_common);
      CoarseModel model = load_model_obj(lp_model, config.expansion_ratio);
      SegmentedCloud segmented =
          segment_planes_ransac(load_cloud(lp_cloud), config.ransac);
      DumpOptions dumps;
      dumps.lp_path = fs::path(lp_out);
      refine_building(model, segmented, config, dumps);
      std::printf("wrote %s\n", lp_out.c_str());
      return 0;
    }
    if (dump_cmd->parsed()) {
      PipelineConfig config = resolve_config(dc_common);
      CoarseModel model = load_model_obj(dc_model, config.expansion_ratio);
      SegmentedCloud segmented =
          segment_planes_ransac(load_cloud(dc_cloud), config.ransac);
      // Run the pipeline up to confidence assignment, then dump.
      std::vector<const CoarseModel*> candidates = {&model};
      ModelMatchResult match =
          select_best_model(segmented, candidates, config.matching);
      FacePartition partition = remove_matched_faces(model, match);
      std::vector<SupportingPlane> planes;
      for (std::size_t k = 0; k < partition.kept_faces.size(); ++k) {
        SupportingPlane sp;
        sp.plane = partition.kept_planes[k];
        sp.origins.push_back(
            {PlaneOrigin::Kind::coarse, partition.kept_faces[k]});
        planes.push_back(sp);
      }
      for (const FaceMatch& m : match.matches) {
        SupportingPlane sp;
        sp.plane = segmented.clusters[m.cluster_index].plane;
        sp.origins.push_back({PlaneOrigin::Kind::scan, m.cluster_index});
        planes.push_back(sp);
      }
      planes = merge_planes(std::move(planes), config.theta_merge_deg,
                            config.d_merge);
      CandidateSet set = generate_candidates(planes, model.expanded_aabb);
      std::vector<ReferenceSurface> refs =
          build_reference_surfaces(model, partition, segmented, match);
      assign_confidences(set, refs, config.confidence);
      dump_candidate_set(set, fs::path(dc_prefix));
      std::printf("dumped %zu faces, %zu edges\n", set.faces.size(),
                  set.edges.size());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
