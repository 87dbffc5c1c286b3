#include "refit/pointcloud.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace refit {

Vec3 PointCloud::centroid() const {
  Vec3 c{0, 0, 0};
  for (const Vec3& p : points) c += p;
  return c / static_cast<double>(points.size());
}

Aabb3 PointCloud::aabb() const { return Aabb3::from_points(points); }

namespace {

PointCloud load_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x)) {
      // Blank lines are fine; anything non-numeric is not.
      std::string tok;
      std::istringstream probe(line);
      if (probe >> tok)
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": expected numeric coordinates");
      continue;
    }
    if (!(ss >> y >> z))
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected at least 3 columns");
    Vec3 p{x, y, z};
    if (!p.finite())
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": non-finite coordinate");
    cloud.points.push_back(p);
  }
  if (cloud.points.empty()) throw EmptyCloud(path.string() + ": no points");
  return cloud;
}

struct PlyProperty {
  std::string type;
  std::string name;
};

std::size_t ply_scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64" || type == "int64" ||
      type == "uint64")
    return 8;
  return 0;
}

double ply_read_scalar(const char* buf, const std::string& type) {
  auto load = [&](auto v) {
    std::memcpy(&v, buf, sizeof(v));
    return static_cast<double>(v);
  };
  if (type == "float" || type == "float32") return load(float{});
  if (type == "double" || type == "float64") return load(double{});
  if (type == "char" || type == "int8") return load(std::int8_t{});
  if (type == "uchar" || type == "uint8") return load(std::uint8_t{});
  if (type == "short" || type == "int16") return load(std::int16_t{});
  if (type == "ushort" || type == "uint16") return load(std::uint16_t{});
  if (type == "int" || type == "int32") return load(std::int32_t{});
  if (type == "uint" || type == "uint32") return load(std::uint32_t{});
  if (type == "int64") return load(std::int64_t{});
  if (type == "uint64") return load(std::uint64_t{});
  return 0.0;
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw ParseError(path.string() + ": missing ply magic");

  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> vertex_props;
  bool in_vertex_element = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": unsupported format " + fmt);
    } else if (kw == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
      if (!in_vertex_element && vertex_count == 0)
        throw ParseError(path.string() + ": element before vertex element");
    } else if (kw == "property") {
      if (!in_vertex_element) continue;
      PlyProperty prop;
      ss >> prop.type;
      if (prop.type == "list")
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": list property in vertex element");
      ss >> prop.name;
      vertex_props.push_back(prop);
    } else if (kw == "end_header") {
      break;
    }
  }

  int ix = -1, iy = -1, iz = -1;
  std::size_t stride = 0;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    offsets.push_back(stride);
    std::size_t sz = ply_scalar_size(vertex_props[i].type);
    if (sz == 0)
      throw ParseError(path.string() + ": unknown property type " +
                       vertex_props[i].type);
    stride += sz;
    if (vertex_props[i].name == "x") ix = static_cast<int>(i);
    if (vertex_props[i].name == "y") iy = static_cast<int>(i);
    if (vertex_props[i].name == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    throw ParseError(path.string() + ": vertex element lacks x/y/z");
  if (vertex_count == 0) throw EmptyCloud(path.string() + ": 0 vertices");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  if (binary) {
    std::vector<char> row(stride);
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!in.read(row.data(), static_cast<std::streamsize>(stride)))
        throw ParseError(path.string() + ": truncated at byte offset " +
                         std::to_string(in.tellg()));
      cloud.points.push_back(
          Vec3{ply_read_scalar(row.data() + offsets[ix], vertex_props[ix].type),
               ply_read_scalar(row.data() + offsets[iy], vertex_props[iy].type),
               ply_read_scalar(row.data() + offsets[iz],
                               vertex_props[iz].type)});
    }
  } else {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!std::getline(in, line))
        throw ParseError(path.string() + ": truncated at vertex " +
                         std::to_string(v));
      ++lineno;
      std::istringstream ss(line);
      std::vector<double> vals(vertex_props.size());
      for (double& d : vals)
        if (!(ss >> d))
          throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": short vertex row");
      cloud.points.push_back(Vec3{vals[ix], vals[iy], vals[iz]});
    }
  }
  return cloud;
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ply") return load_ply(path);
  return load_xyz(path);
}

namespace {

std::optional<Plane> plane_from_3(const Vec3& a, const Vec3& b,
                                  const Vec3& c) {
  Vec3 n = (b - a).cross(c - a);
  double len = n.norm();
  if (len < 1e-12) return std::nullopt;
  n = n / len;
  return Plane(n, -n.dot(a));
}

std::vector<int> collect_inliers(const PointCloud& cloud,
                                 const std::vector<int>& pool,
                                 const Plane& plane, double dist) {
  std::vector<int> out;
  for (int idx : pool)
    if (std::fabs(plane.signed_distance(cloud.points[idx])) < dist)
      out.push_back(idx);
  return out;
}

PlanarCluster make_cluster(const PointCloud& cloud, const Vec3& cloud_centroid,
                           Plane plane, std::vector<int> inliers) {
  PlanarCluster cluster;
  cluster.plane = plane.oriented_away_from(cloud_centroid);
  cluster.inlier_indices = std::move(inliers);
  std::sort(cluster.inlier_indices.begin(), cluster.inlier_indices.end());

  std::vector<Vec3> pts;
  pts.reserve(cluster.inlier_indices.size());
  Vec3 c{0, 0, 0};
  for (int idx : cluster.inlier_indices) {
    pts.push_back(cloud.points[idx]);
    c += cloud.points[idx];
  }
  cluster.centroid = c / static_cast<double>(pts.size());
  cluster.obb = obb_from_points(pts);

  std::vector<Vec2> proj;
  proj.reserve(pts.size());
  for (const Vec3& p : pts) proj.push_back(cluster.plane.to_plane_2d(p));
  cluster.hull2d = convex_hull_2d(proj);
  return cluster;
}

}  // namespace

SegmentedCloud segment_planes_ransac(PointCloud cloud,
                                     const RansacParams& params) {
  SegmentedCloud out;
  const std::size_t n = cloud.points.size();
  Vec3 cloud_centroid = cloud.centroid();

  std::vector<int> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<int>(i);

  std::mt19937_64 rng(params.seed);

  struct RawCluster {
    Plane plane;
    std::vector<int> inliers;
  };
  std::vector<RawCluster> raw;

  while (raw.size() < static_cast<std::size_t>(params.max_planes) &&
         pool.size() >= params.min_cluster_size) {
    std::size_t best_count = 0;
    Plane best_plane;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int it = 0; it < params.max_iterations; ++it) {
      std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
      if (i == j || j == k || i == k) continue;
      auto plane = plane_from_3(cloud.points[pool[i]], cloud.points[pool[j]],
                                cloud.points[pool[k]]);
      if (!plane) continue;
      std::size_t count = 0;
      for (int idx : pool)
        if (std::fabs(plane->signed_distance(cloud.points[idx])) < params.dist)
          ++count;
      if (count > best_count) {
        best_count = count;
        best_plane = *plane;
      }
    }
    if (best_count < params.min_cluster_size) break;

    std::vector<int> inliers =
        collect_inliers(cloud, pool, best_plane, params.dist);
    // One PCA refinement pass, then re-collect against the refined plane.
    try {
      std::vector<Vec3> pts;
      pts.reserve(inliers.size());
      for (int idx : inliers) pts.push_back(cloud.points[idx]);
      Plane refined = fit_plane_pca(pts).plane;
      std::vector<int> refit = collect_inliers(cloud, pool, refined, params.dist);
      if (refit.size() >= params.min_cluster_size) {
        best_plane = refined;
        inliers = std::move(refit);
      }
    } catch (const DegenerateInput&) {
      // Keep the sampled plane.
    }
    if (inliers.size() < params.min_cluster_size) break;

    std::vector<char> taken(n, 0);
    for (int idx : inliers) taken[idx] = 1;
    std::erase_if(pool, [&](int idx) { return taken[idx] != 0; });
    raw.push_back(RawCluster{best_plane, std::move(inliers)});
  }

  // RANSAC fragments large walls; merge near-coplanar clusters.
  const double cos_merge =
      std::cos(params.merge_angle_deg * std::numbers::pi / 180.0);
  bool merged_any = true;
  while (merged_any) {
    merged_any = false;
    for (std::size_t i = 0; i < raw.size() && !merged_any; ++i) {
      for (std::size_t j = i + 1; j < raw.size() && !merged_any; ++j) {
        double cosang =
            std::fabs(raw[i].plane.normal.dot(raw[j].plane.normal));
        if (cosang < cos_merge) continue;
        double dj = raw[j].plane.normal.dot(raw[i].plane.normal) < 0
                        ? -raw[j].plane.d
                        : raw[j].plane.d;
        if (std::fabs(raw[i].plane.d - dj) >= params.merge_dist) continue;
        raw[i].inliers.insert(raw[i].inliers.end(), raw[j].inliers.begin(),
                              raw[j].inliers.end());
        std::vector<Vec3> pts;
        pts.reserve(raw[i].inliers.size());
        for (int idx : raw[i].inliers) pts.push_back(cloud.points[idx]);
        raw[i].plane = fit_plane_pca(pts).plane;
        raw.erase(raw.begin() + static_cast<std::ptrdiff_t>(j));
        merged_any = true;
      }
    }
  }

  std::vector<char> assigned(n, 0);
  for (RawCluster& rc : raw) {
    // Refit can push former inliers past the distance gate; drop them.
    std::vector<int> kept;
    kept.reserve(rc.inliers.size());
    for (int idx : rc.inliers)
      if (std::fabs(rc.plane.signed_distance(cloud.points[idx])) < params.dist)
        kept.push_back(idx);
    if (kept.size() < params.min_cluster_size) continue;
    for (int idx : kept) assigned[idx] = 1;
    out.clusters.push_back(
        make_cluster(cloud, cloud_centroid, rc.plane, std::move(kept)));
  }

  for (std::size_t i = 0; i < n; ++i)
    if (!assigned[i]) out.unassigned.push_back(static_cast<int>(i));
  out.source = std::move(cloud);
  return out;
}

void write_cluster_debug_ply(const SegmentedCloud& segmented,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  static const int palette[][3] = {{230, 25, 75},  {60, 180, 75},
                                   {255, 225, 25}, {0, 130, 200},
                                   {245, 130, 48}, {145, 30, 180},
                                   {70, 240, 240}, {240, 50, 230}};
  auto write_one = [&](const std::filesystem::path& path,
                       const std::vector<int>& indices, const int rgb[3]) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "ply\nformat ascii 1.0\nelement vertex " << indices.size()
        << "\nproperty double x\nproperty double y\nproperty double z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\n"
           "end_header\n";
    char buf[160];
    for (int idx : indices) {
      const Vec3& p = segmented.source.points[idx];
      std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d %d %d\n", p.x, p.y,
                    p.z, rgb[0], rgb[1], rgb[2]);
      out << buf;
    }
  };
  for (std::size_t c = 0; c < segmented.clusters.size(); ++c)
    write_one(dir / ("cluster_" + std::to_string(c) + ".ply"),
              segmented.clusters[c].inlier_indices, palette[c % 8]);
  static const int grey[3] = {128, 128, 128};
  write_one(dir / "unassigned.ply", segmented.unassigned, grey);
}

}  // namespace refit
