#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dynoscan/clustering.hpp"
#include "dynoscan/dynamics.hpp"
#include "dynoscan/egomotion.hpp"
#include "dynoscan/features.hpp"
#include "dynoscan/frame_model.hpp"
#include "dynoscan/segmentation.hpp"

namespace dynoscan {

struct PipelineConfig
{
  SensorModel sensor;

  int kernel_a = 4;
  int kernel_b = 1;
  double sigma_m = 2.0;
  double sigma_n = 0.8;
  double theta = 8.0;

  FeatureParams features;
  RansacParams ransac;
  ClusterParams clustering;
  double d_max = 1.0;
  DynamicsParams dynamics;
  GrowParams grow;
  GroundParams ground;
  int snap_radius = 3;

  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

/// Reads an INI file (`[section]` headers, `key = value`, `#` or `;` comments).
/// Keys not listed by config_keys() are rejected. Overrides are `section.key=value`
/// strings applied after the file; the result is validated.
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
PipelineConfig parse_config(const std::string& ini, const std::vector<std::string>& overrides = {});

/// Applies one `section.key=value` assignment without validating.
void apply_override(PipelineConfig& config, const std::string& assignment);

/// Every accepted `section.key`, in file order.
std::vector<std::string> config_keys();

/// Full INI text of a configuration; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const PipelineConfig& config);

}  // namespace dynoscan
