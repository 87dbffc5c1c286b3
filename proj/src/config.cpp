#include "refit/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace refit {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (...) {
    throw ConfigError("config key '" + key + "': not a number: '" + value +
                      "'");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw ConfigError("config key '" + key + "': not an integer: '" + value +
                      "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + value +
                    "'");
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "ransac.dist") ransac.dist = to_double(key, value);
  else if (key == "ransac.min_cluster_size")
    ransac.min_cluster_size = static_cast<std::size_t>(to_int(key, value));
  else if (key == "ransac.max_iterations")
    ransac.max_iterations = static_cast<int>(to_int(key, value));
  else if (key == "ransac.max_planes")
    ransac.max_planes = static_cast<int>(to_int(key, value));
  else if (key == "ransac.seed")
    ransac.seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "ransac.merge_angle_deg")
    ransac.merge_angle_deg = to_double(key, value);
  else if (key == "ransac.merge_dist")
    ransac.merge_dist = to_double(key, value);
  else if (key == "matching.w_normal")
    matching.w_normal = to_double(key, value);
  else if (key == "matching.w_coverage")
    matching.w_coverage = to_double(key, value);
  else if (key == "matching.theta_normal_max_deg")
    matching.theta_normal_max_deg = to_double(key, value);
  else if (key == "matching.d_centroid_max")
    matching.d_centroid_max = to_double(key, value);
  else if (key == "matching.min_s_match")
    matching.min_s_match = to_double(key, value);
  else if (key == "candidates.theta_merge_deg")
    theta_merge_deg = to_double(key, value);
  else if (key == "candidates.d_merge")
    d_merge = to_double(key, value);
  else if (key == "confidence.theta_filter_deg")
    confidence.theta_filter_deg = to_double(key, value);
  else if (key == "confidence.d_model_max")
    confidence.d_model_max = to_double(key, value);
  else if (key == "confidence.d_cloud_mean_max")
    confidence.d_cloud_mean_max = to_double(key, value);
  else if (key == "confidence.d_cloud_std_max")
    confidence.d_cloud_std_max = to_double(key, value);
  else if (key == "confidence.bbox_overlap_min")
    confidence.bbox_overlap_min = to_double(key, value);
  else if (key == "confidence.min_support_points")
    confidence.min_support_points =
        static_cast<std::size_t>(to_int(key, value));
  else if (key == "selection.tau_cov")
    selection.tau_cov = to_double(key, value);
  else if (key == "selection.lambda_coverage")
    selection.lambda_coverage = to_double(key, value);
  else if (key == "selection.lambda_complexity")
    selection.lambda_complexity = to_double(key, value);
  else if (key == "selection.time_limit_s")
    selection.time_limit_s = to_double(key, value);
  else if (key == "selection.merge_coplanar")
    selection.merge_coplanar = to_bool(key, value);
  else if (key == "model.expansion_ratio")
    expansion_ratio = to_double(key, value);
  else if (key == "run.jobs")
    jobs = static_cast<int>(to_int(key, value));
  else
    throw ConfigError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> PipelineConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["ransac.dist"] = fmt(ransac.dist);
  kv["ransac.min_cluster_size"] = std::to_string(ransac.min_cluster_size);
  kv["ransac.max_iterations"] = std::to_string(ransac.max_iterations);
  kv["ransac.max_planes"] = std::to_string(ransac.max_planes);
  kv["ransac.seed"] = std::to_string(ransac.seed);
  kv["ransac.merge_angle_deg"] = fmt(ransac.merge_angle_deg);
  kv["ransac.merge_dist"] = fmt(ransac.merge_dist);
  kv["matching.w_normal"] = fmt(matching.w_normal);
  kv["matching.w_coverage"] = fmt(matching.w_coverage);
  kv["matching.theta_normal_max_deg"] = fmt(matching.theta_normal_max_deg);
  kv["matching.d_centroid_max"] = fmt(matching.d_centroid_max);
  kv["matching.min_s_match"] = fmt(matching.min_s_match);
  kv["candidates.theta_merge_deg"] = fmt(theta_merge_deg);
  kv["candidates.d_merge"] = fmt(d_merge);
  kv["confidence.theta_filter_deg"] = fmt(confidence.theta_filter_deg);
  kv["confidence.d_model_max"] = fmt(confidence.d_model_max);
  kv["confidence.d_cloud_mean_max"] = fmt(confidence.d_cloud_mean_max);
  kv["confidence.d_cloud_std_max"] = fmt(confidence.d_cloud_std_max);
  kv["confidence.bbox_overlap_min"] = fmt(confidence.bbox_overlap_min);
  kv["confidence.min_support_points"] =
      std::to_string(confidence.min_support_points);
  kv["selection.tau_cov"] = fmt(selection.tau_cov);
  kv["selection.lambda_coverage"] = fmt(selection.lambda_coverage);
  kv["selection.lambda_complexity"] = fmt(selection.lambda_complexity);
  kv["selection.time_limit_s"] = fmt(selection.time_limit_s);
  kv["selection.merge_coplanar"] = selection.merge_coplanar ? "true" : "false";
  kv["model.expansion_ratio"] = fmt(expansion_ratio);
  kv["run.jobs"] = std::to_string(jobs);
  return kv;
}

void PipelineConfig::validate() const {
  if (std::fabs(matching.w_normal + matching.w_coverage - 1.0) > 1e-9)
    throw ConfigError("matching.w_normal + matching.w_coverage must equal 1");
  if (matching.theta_normal_max_deg <= 0 || matching.d_centroid_max <= 0 ||
      matching.min_s_match <= 0)
    throw ConfigError("matching thresholds must be positive");
  if (ransac.dist <= 0 || ransac.min_cluster_size < 3)
    throw ConfigError("ransac.dist must be positive, min_cluster_size >= 3");
  if (selection.tau_cov < 0 || selection.tau_cov > 1)
    throw ConfigError("selection.tau_cov must be in [0, 1]");
  if (selection.lambda_coverage < 0 || selection.lambda_complexity < 0 ||
      selection.lambda_coverage + selection.lambda_complexity <= 0)
    throw ConfigError("selection lambdas must be nonnegative, sum positive");
  if (expansion_ratio < 0)
    throw ConfigError("model.expansion_ratio must be nonnegative");
  if (confidence.theta_filter_deg <= 0 || confidence.d_model_max <= 0 ||
      confidence.d_cloud_mean_max <= 0 || confidence.d_cloud_std_max <= 0 ||
      confidence.bbox_overlap_min <= 0)
    throw ConfigError("confidence thresholds must be positive");
  if (theta_merge_deg <= 0 || d_merge <= 0)
    throw ConfigError("candidates merge thresholds must be positive");
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  PipelineConfig config;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    config.set(section.empty() ? key : section + "." + key, value);
  }
  return config;
}

void apply_env_overrides(PipelineConfig& config) {
  for (const auto& [key, unused] : config.to_key_values()) {
    std::string env = "REFIT_" + key;
    for (char& c : env)
      c = c == '.' ? '_' : static_cast<char>(std::toupper(
                               static_cast<unsigned char>(c)));
    if (const char* value = std::getenv(env.c_str()))
      config.set(key, value);
  }
}

void write_config_file(const PipelineConfig& config,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  std::string section;
  for (const auto& [key, value] : config.to_key_values()) {
    std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(key.find('.') + 1) << " = " << value << "\n";
  }
}

}  // namespace refit
