#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "refit/confidence.hpp"
#include "refit/matching.hpp"
#include "refit/pointcloud.hpp"
#include "refit/selection.hpp"

namespace refit {

// Flat sectioned key/value config covering every pipeline parameter.
// Precedence: built-in defaults < config file < REFIT_* environment
// variables < explicit --set overrides.
struct PipelineConfig {
  RansacParams ransac;
  MatchParams matching;
  double theta_merge_deg = 5.0;  // candidate plane merging
  double d_merge = 0.2;
  ConfidenceParams confidence;
  SelectionParams selection;
  double expansion_ratio = 0.10;
  int jobs = 0;  // 0 = hardware concurrency

  void validate() const;  // throws ConfigError

  // Section-qualified keys ("matching.w_normal") in deterministic order.
  std::map<std::string, std::string> to_key_values() const;
  void set(const std::string& key, const std::string& value);
};

PipelineConfig load_config_file(const std::filesystem::path& path);
void apply_env_overrides(PipelineConfig& config);  // REFIT_SECTION_KEY
void write_config_file(const PipelineConfig& config,
                       const std::filesystem::path& path);

}  // namespace refit
