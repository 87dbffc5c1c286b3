#include "refit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "refit/mesh_ops.hpp"

#include <json.hpp>

namespace refit {

namespace {

std::vector<SupportingPlane> gather_supporting_planes(
    const FacePartition& partition, const SegmentedCloud& segmented,
    const ModelMatchResult& match) {
  std::vector<SupportingPlane> planes;
  for (std::size_t k = 0; k < partition.kept_faces.size(); ++k) {
    SupportingPlane sp;
    sp.plane = partition.kept_planes[k];
    sp.origins.push_back(
        {PlaneOrigin::Kind::coarse, partition.kept_faces[k]});
    planes.push_back(std::move(sp));
  }
  for (const FaceMatch& m : match.matches) {
    SupportingPlane sp;
    sp.plane = segmented.clusters[m.cluster_index].plane;
    sp.origins.push_back({PlaneOrigin::Kind::scan, m.cluster_index});
    planes.push_back(std::move(sp));
  }
  return planes;
}

void dump_confidence_csv(const CandidateSet& set,
                         const std::vector<ReferenceSurface>& refs,
                         const std::vector<int>& best_ref,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "face_id,best_ref_kind,best_ref_id,confidence\n";
  char buf[128];
  for (std::size_t f = 0; f < set.faces.size(); ++f) {
    const char* kind = "none";
    int id = -1;
    if (best_ref[f] >= 0) {
      const ReferenceSurface& r = refs[best_ref[f]];
      kind = r.kind == ReferenceSurface::Kind::scan_cluster ? "scan_cluster"
                                                            : "coarse_face";
      id = r.source_index;
    }
    std::snprintf(buf, sizeof(buf), "%zu,%s,%d,%.9g\n", f, kind, id,
                  set.faces[f].confidence);
    out << buf;
  }
}

void dump_matches_json(
    const ModelMatchResult& match,
    const std::vector<std::pair<std::string, double>>& all_scores,
    const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["model_id"] = match.model_id;
  j["q_model"] = match.q_model;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const FaceMatch& m : match.matches)
    arr.push_back({{"cluster_index", m.cluster_index},
                   {"face_index", m.face_index},
                   {"s_normal", m.s_normal},
                   {"d_c", m.d_c},
                   {"c_bbox", m.c_bbox},
                   {"s_match", m.s_match}});
  j["matches"] = arr;
  nlohmann::ordered_json cand = nlohmann::ordered_json::array();
  for (const auto& [id, q] : all_scores)
    cand.push_back({{"model_id", id}, {"q_model", q}});
  j["candidates"] = cand;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void dump_candidate_set(const CandidateSet& set,
                        const std::filesystem::path& prefix) {
  RefinedModel all;
  all.id = "candidates";
  for (const CandidateFace& f : set.faces) {
    MeshFace mf;
    mf.loop = f.polygon.vertices;
    all.faces.push_back(std::move(mf));
  }
  // Candidate cells overlap at shared edges only; write them un-welded so
  // every cell stays intact in viewers.
  std::filesystem::path obj_path = prefix;
  obj_path += ".obj";
  std::ofstream out(obj_path);
  if (!out) throw IoError("cannot write " + obj_path.string());
  char buf[128];
  int base = 1;
  for (const CandidateFace& f : set.faces) {
    for (const Vec3& v : f.polygon.vertices) {
      std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
      out << buf;
    }
    out << "f";
    for (std::size_t i = 0; i < f.polygon.vertices.size(); ++i)
      out << ' ' << base + static_cast<int>(i);
    out << "\n";
    base += static_cast<int>(f.polygon.vertices.size());
  }
  out.close();

  nlohmann::ordered_json j;
  j["num_planes"] = set.planes.size();
  j["num_faces"] = set.faces.size();
  j["num_edges"] = set.edges.size();
  nlohmann::ordered_json faces = nlohmann::ordered_json::array();
  for (const CandidateFace& f : set.faces)
    faces.push_back({{"supporting_plane", f.supporting_plane},
                     {"area", f.area},
                     {"confidence", f.confidence}});
  j["faces"] = faces;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const CandidateEdge& e : set.edges)
    edges.push_back({{"a", {e.a.x, e.a.y, e.a.z}},
                     {"b", {e.b.x, e.b.y, e.b.z}},
                     {"incident_faces", e.incident_faces}});
  j["edges"] = edges;
  std::filesystem::path json_path = prefix;
  json_path += "_adjacency.json";
  std::ofstream jout(json_path);
  if (!jout) throw IoError("cannot write " + json_path.string());
  jout << j.dump(2) << "\n";
}

RefineResult refine_building(const CoarseModel& model,
                             const SegmentedCloud& segmented,
                             const PipelineConfig& config,
                             const DumpOptions& dumps) {
  if (dumps.debug_clusters_dir)
    write_cluster_debug_ply(segmented, *dumps.debug_clusters_dir);

  std::vector<const CoarseModel*> candidates = {&model};
  std::vector<std::pair<std::string, double>> all_scores;
  ModelMatchResult match =
      select_best_model(segmented, candidates, config.matching, &all_scores);
  if (dumps.matches_json)
    dump_matches_json(match, all_scores, *dumps.matches_json);

  FacePartition partition = remove_matched_faces(model, match);

  std::vector<SupportingPlane> planes =
      gather_supporting_planes(partition, segmented, match);
  planes = merge_planes(std::move(planes), config.theta_merge_deg,
                        config.d_merge);

  CandidateSet set = generate_candidates(planes, model.expanded_aabb);

  std::vector<ReferenceSurface> refs =
      build_reference_surfaces(model, partition, segmented, match);
  std::vector<int> best_ref =
      assign_confidences(set, refs, config.confidence);
  if (dumps.confidence_csv)
    dump_confidence_csv(set, refs, best_ref, *dumps.confidence_csv);
  if (dumps.candidates_prefix) dump_candidate_set(set, *dumps.candidates_prefix);

  SelectionProblem problem = build_problem(set, config.selection);
  if (dumps.lp_path) {
    export_lp(problem, *dumps.lp_path);
    return {};  // export-only invocation
  }

  Solution solution = solve(problem, config.selection.time_limit_s);
  if (dumps.solve_log) write_solve_log(solution, *dumps.solve_log);
  if (solution.status == Solution::Status::timeout)
    throw Error(ErrorCategory::timeout,
                "solver hit the time limit (" +
                    std::to_string(config.selection.time_limit_s) + " s)");

  RefineResult result;
  result.match = match;
  result.solution = solution;
  result.refined = extract_mesh(set, solution,
                                config.selection.merge_coplanar, model.id);

  std::vector<MeshFace> before = coarse_model_mesh(model);
  result.report.c2m_before =
      c2m(segmented.source, before, dumps.distance_csv);
  result.report.c2m_after =
      c2m(segmented.source, result.refined.faces, dumps.distance_csv);
  result.report.delta_d = centroid_offset_reduction(
      segmented.source, before, result.refined.faces);
  result.report.validity_before = validate_topology(before);
  result.report.validity_after = validate_topology(result.refined.faces);
  return result;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return h;
}

void write_manifest(
    const PipelineConfig& config,
    const std::vector<std::pair<std::string, std::uint64_t>>& input_hashes,
    const std::vector<BuildingRun>& runs,
    const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  for (const auto& [key, value] : config.to_key_values()) cfg[key] = value;
  j["config"] = cfg;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& [name, hash] : input_hashes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash));
    inputs.push_back({{"path", name}, {"fnv1a64", buf}});
  }
  j["inputs"] = inputs;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const BuildingRun& run : runs) {
    nlohmann::ordered_json row;
    row["building_id"] = run.building_id;
    row["status"] = run.status;
    if (!run.detail.empty()) row["detail"] = run.detail;
    row["wall_ms"] = run.wall_ms;
    rows.push_back(row);
  }
  j["buildings"] = rows;

  // Atomic write: temp file then rename.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::filesystem::path> list_files(
    const std::filesystem::path& path,
    const std::set<std::string>& extensions) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (extensions.count(ext)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (std::filesystem::exists(path)) {
    files.push_back(path);
  }
  return files;
}

struct CloudJob {
  std::filesystem::path cloud_path;
  SegmentedCloud segmented;
  int target_model = -1;  // index into models
};

}  // namespace

BatchSummary refine_batch(const std::filesystem::path& models_dir,
                          const std::filesystem::path& clouds_path,
                          const PipelineConfig& config,
                          const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> model_paths =
      list_files(models_dir, {".obj"});
  if (model_paths.empty())
    throw IoError("no .obj models under " + models_dir.string());
  std::vector<std::filesystem::path> cloud_paths =
      list_files(clouds_path, {".xyz", ".ply"});
  if (cloud_paths.empty())
    throw IoError("no clouds under " + clouds_path.string());

  std::filesystem::create_directories(out_dir);

  std::vector<CoarseModel> models;
  models.reserve(model_paths.size());
  for (const auto& p : model_paths)
    models.push_back(load_model_obj(p, config.expansion_ratio));

  // Route each cloud to its best model; first cloud wins a contested model.
  std::vector<CloudJob> jobs;
  for (const auto& cpath : cloud_paths) {
    CloudJob job;
    job.cloud_path = cpath;
    job.segmented = segment_planes_ransac(load_cloud(cpath), config.ransac);
    jobs.push_back(std::move(job));
  }

  std::vector<BuildingRun> runs(models.size());
  std::vector<int> claimed(models.size(), -1);
  for (std::size_t jid = 0; jid < jobs.size(); ++jid) {
    CloudJob& job = jobs[jid];
    try {
      Aabb2 fp = footprint(job.segmented.source.aabb());
      std::vector<const CoarseModel*> all;
      for (const CoarseModel& m : models) all.push_back(&m);
      std::vector<const CoarseModel*> nearby = coarse_spatial_filter(fp, all);
      if (nearby.empty()) throw NoMatchFound("no model near cloud");
      ModelMatchResult match =
          select_best_model(job.segmented, nearby, config.matching);
      for (std::size_t m = 0; m < models.size(); ++m)
        if (models[m].id == match.model_id) {
          job.target_model = static_cast<int>(m);
          break;
        }
      if (job.target_model >= 0 && claimed[job.target_model] == -1)
        claimed[job.target_model] = static_cast<int>(jid);
    } catch (const NoMatchFound&) {
      job.target_model = -1;
    }
  }

  std::mutex mu;
  std::vector<std::size_t> work;
  for (std::size_t m = 0; m < models.size(); ++m) work.push_back(m);
  std::size_t next = 0;

  unsigned pool = config.jobs > 0
                      ? static_cast<unsigned>(config.jobs)
                      : std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&]() {
    while (true) {
      std::size_t m;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= work.size()) return;
        m = work[next++];
      }
      BuildingRun run;
      run.building_id = models[m].id;
      auto t0 = std::chrono::steady_clock::now();
      if (claimed[m] < 0) {
        // Pass-through: copy the source file unchanged.
        run.status = "skipped_no_match";
        std::filesystem::copy_file(
            model_paths[m], out_dir / model_paths[m].filename(),
            std::filesystem::copy_options::overwrite_existing);
        std::vector<MeshFace> mesh = coarse_model_mesh(models[m]);
        EvaluationReport report;
        report.validity_before = report.validity_after =
            validate_topology(mesh);
        run.report = report;
      } else {
        try {
          RefineResult result = refine_building(
              models[m], jobs[claimed[m]].segmented, config, {});
          write_model_obj(result.refined,
                          out_dir / (models[m].id + "_refined.obj"));
          write_report_json(result.report,
                            out_dir / (models[m].id + "_report.json"));
          run.status = "refined";
          run.report = result.report;
        } catch (const Error& e) {
          run.status = "failed";
          run.detail = e.what();
        }
      }
      run.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      std::lock_guard<std::mutex> lock(mu);
      runs[m] = std::move(run);
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < pool; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  std::sort(runs.begin(), runs.end(),
            [](const BuildingRun& a, const BuildingRun& b) {
              return a.building_id < b.building_id;
            });

  BatchSummary summary;
  summary.runs = runs;
  int refined = 0, watertight_before = 0, watertight_after = 0, evaluated = 0;
  double rmse_b = 0, rmse_a = 0, mae_b = 0, mae_a = 0;
  for (const BuildingRun& run : runs) {
    if (run.report) {
      ++evaluated;
      if (run.report->validity_before.watertight) ++watertight_before;
      if (run.report->validity_after.watertight) ++watertight_after;
    }
    if (run.status == "refined" && run.report) {
      ++refined;
      rmse_b += run.report->c2m_before.rmse;
      rmse_a += run.report->c2m_after.rmse;
      mae_b += run.report->c2m_before.mae;
      mae_a += run.report->c2m_after.mae;
    }
  }
  if (evaluated > 0) {
    summary.watertight_rate_before =
        static_cast<double>(watertight_before) / evaluated;
    summary.watertight_rate_after =
        static_cast<double>(watertight_after) / evaluated;
  }
  if (refined > 0) {
    summary.mean_rmse_before = rmse_b / refined;
    summary.mean_rmse_after = rmse_a / refined;
    summary.mean_mae_before = mae_b / refined;
    summary.mean_mae_after = mae_a / refined;
  }

  std::vector<std::pair<std::string, std::uint64_t>> hashes;
  for (const auto& p : model_paths)
    hashes.push_back({p.filename().string(), fnv1a64_file(p)});
  for (const auto& p : cloud_paths)
    hashes.push_back({p.filename().string(), fnv1a64_file(p)});
  write_manifest(config, hashes, runs, out_dir / "manifest.json");

  nlohmann::ordered_json s;
  s["watertight_rate_before"] = summary.watertight_rate_before;
  s["watertight_rate_after"] = summary.watertight_rate_after;
  s["mean_rmse_before"] = summary.mean_rmse_before;
  s["mean_rmse_after"] = summary.mean_rmse_after;
  s["mean_mae_before"] = summary.mean_mae_before;
  s["mean_mae_after"] = summary.mean_mae_after;
  std::ofstream sout(out_dir / "summary.json");
  if (!sout) throw IoError("cannot write summary.json");
  sout << s.dump(2) << "\n";
  return summary;
}

std::vector<SweepRow> sweep_tau(
    const std::filesystem::path& models_dir,
    const std::filesystem::path& clouds_path, std::vector<double> taus,
    const PipelineConfig& config,
    const std::optional<std::filesystem::path>& out_csv) {
  std::vector<std::filesystem::path> model_paths =
      list_files(models_dir, {".obj"});
  std::vector<std::filesystem::path> cloud_paths =
      list_files(clouds_path, {".xyz", ".ply"});
  if (model_paths.empty() || cloud_paths.empty())
    throw IoError("sweep-tau needs at least one model and one cloud");

  std::vector<CoarseModel> models;
  for (const auto& p : model_paths)
    models.push_back(load_model_obj(p, config.expansion_ratio));
  std::vector<SegmentedCloud> segmented;
  for (const auto& p : cloud_paths)
    segmented.push_back(
        segment_planes_ransac(load_cloud(p), config.ransac));

  // Pair each cloud with its best model once; the sweep re-runs only the
  // tau-dependent stages.
  std::vector<int> target(segmented.size(), -1);
  for (std::size_t c = 0; c < segmented.size(); ++c) {
    std::vector<const CoarseModel*> all;
    for (const CoarseModel& m : models) all.push_back(&m);
    try {
      ModelMatchResult match =
          select_best_model(segmented[c], all, config.matching);
      for (std::size_t m = 0; m < models.size(); ++m)
        if (models[m].id == match.model_id) target[c] = static_cast<int>(m);
    } catch (const NoMatchFound&) {
    }
  }

  std::vector<SweepRow> rows;
  for (double tau : taus) {
    PipelineConfig cfg = config;
    cfg.selection.tau_cov = tau;
    SweepRow row;
    row.tau = tau;
    int attempted = 0, valid = 0;
    double rmse = 0, mae = 0;
    for (std::size_t c = 0; c < segmented.size(); ++c) {
      if (target[c] < 0) continue;
      ++attempted;
      try {
        RefineResult result =
            refine_building(models[target[c]], segmented[c], cfg, {});
        if (result.report.validity_after.watertight) ++valid;
        rmse += result.report.c2m_after.rmse;
        mae += result.report.c2m_after.mae;
      } catch (const Error&) {
        // Infeasible/empty at this tau: counted as invalid.
      }
    }
    if (valid > 0) {
      row.rmse = rmse / valid;
      row.mae = mae / valid;
    }
    row.validity_rate =
        attempted > 0 ? static_cast<double>(valid) / attempted : 0.0;
    rows.push_back(row);
  }

  if (out_csv) {
    std::ofstream out(*out_csv);
    if (!out) throw IoError("cannot write " + out_csv->string());
    out << "tau,rmse,mae,validity_rate\n";
    char buf[128];
    for (const SweepRow& row : rows) {
      std::snprintf(buf, sizeof(buf), "%.3g,%.9g,%.9g,%.9g\n", row.tau,
                    row.rmse, row.mae, row.validity_rate);
      out << buf;
    }
  }
  return rows;
}

}  // namespace refit
