#include "dynoscan/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dynoscan/errors.hpp"
#include "dynoscan/foreground.hpp"

namespace dynoscan {

namespace {

struct Field
{
  std::string section;
  std::string key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;

  std::string name() const { return section + "." + key; }
};

template <typename T>
T parse_value(const std::string& name, const std::string& text)
{
  std::istringstream in(text);
  T value{};
  if constexpr (std::is_same_v<T, bool>)
  {
    std::string word;
    in >> word;
    if (word == "true" || word == "1" || word == "yes" || word == "on")
      value = true;
    else if (word == "false" || word == "0" || word == "no" || word == "off")
      value = false;
    else
      throw ConfigError(name + ": expected a boolean, got '" + text + "'");
  }
  else
  {
    if constexpr (std::is_unsigned_v<T>)
      if (text.find('-') != std::string::npos)
        throw ConfigError(name + ": expected a non-negative integer, got '" + text + "'");
    in >> value;
    if (!in)
      throw ConfigError(name + ": cannot parse '" + text + "'");
  }
  in >> std::ws;
  if (!in.eof())
    throw ConfigError(name + ": trailing characters in '" + text + "'");
  return value;
}

template <typename T>
std::string format_value(T value)
{
  if constexpr (std::is_same_v<T, bool>)
    return value ? "true" : "false";
  else if constexpr (std::is_floating_point_v<T>)
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
  }
  else
    return std::to_string(value);
}

template <typename Ref>
Field field(std::string section, std::string key, Ref ref)
{
  using T = std::remove_reference_t<decltype(ref(std::declval<PipelineConfig&>()))>;
  const std::string name = section + "." + key;
  return Field{std::move(section), std::move(key),
               [ref, name](PipelineConfig& c, const std::string& text) { ref(c) = parse_value<T>(name, text); },
               [ref](const PipelineConfig& c) { return format_value(ref(const_cast<PipelineConfig&>(c))); }};
}

#define DYN_FIELD(section, key, expr) field(section, key, [](PipelineConfig& c) -> auto& { return c.expr; })

const std::vector<Field>& fields()
{
  static const std::vector<Field> table = {
      DYN_FIELD("sensor", "width", sensor.width),
      DYN_FIELD("sensor", "height", sensor.height),
      DYN_FIELD("sensor", "beta_up", sensor.beta_up),
      DYN_FIELD("sensor", "beta_fov", sensor.beta_fov),
      DYN_FIELD("sensor", "rate_hz", sensor.rate_hz),
      DYN_FIELD("foreground", "a", kernel_a),
      DYN_FIELD("foreground", "b", kernel_b),
      DYN_FIELD("foreground", "sigma_m", sigma_m),
      DYN_FIELD("foreground", "sigma_n", sigma_n),
      DYN_FIELD("foreground", "theta", theta),
      DYN_FIELD("features", "max_count", features.max_count),
      DYN_FIELD("features", "tile_size", features.tile_size),
      DYN_FIELD("features", "per_tile", features.per_tile),
      DYN_FIELD("features", "fast_threshold", features.fast_threshold),
      DYN_FIELD("features", "patch_radius", features.patch_radius),
      DYN_FIELD("features", "min_corners", features.min_corners),
      DYN_FIELD("features", "ratio", features.ratio),
      DYN_FIELD("features", "max_distance", features.max_distance),
      DYN_FIELD("ransac", "inlier_threshold", ransac.inlier_threshold),
      DYN_FIELD("ransac", "iterations", ransac.iterations),
      DYN_FIELD("ransac", "min_inlier_ratio", ransac.min_inlier_ratio),
      DYN_FIELD("ransac", "seed", ransac.seed),
      DYN_FIELD("clustering", "eps_xy", clustering.eps_xy),
      DYN_FIELD("clustering", "eps_z", clustering.eps_z),
      DYN_FIELD("clustering", "min_points", clustering.min_points),
      DYN_FIELD("clustering", "range_scaled", clustering.range_scaled),
      DYN_FIELD("clustering", "range_scale", clustering.range_scale),
      DYN_FIELD("association", "d_max", d_max),
      DYN_FIELD("dynamics", "window", dynamics.window),
      DYN_FIELD("dynamics", "eps_d", dynamics.eps_d),
      DYN_FIELD("dynamics", "eps_o", dynamics.eps_o),
      DYN_FIELD("dynamics", "eps_theta", dynamics.eps_theta),
      DYN_FIELD("dynamics", "occlusion_margin", dynamics.occlusion_margin),
      DYN_FIELD("dynamics", "persistence_ratio", dynamics.persistence_ratio),
      DYN_FIELD("dynamics", "persistence_tolerance", dynamics.persistence_tolerance),
      DYN_FIELD("segmentation", "grow_eps", grow.eps),
      DYN_FIELD("segmentation", "max_points", grow.max_points),
      DYN_FIELD("segmentation", "snap_radius", snap_radius),
      DYN_FIELD("segmentation", "plane_tolerance", ground.grow_tolerance),
      DYN_FIELD("ground", "iterations", ground.iterations),
      DYN_FIELD("ground", "fit_tolerance", ground.fit_tolerance),
      DYN_FIELD("ground", "low_fraction", ground.low_fraction),
      DYN_FIELD("ground", "min_inlier_ratio", ground.min_inlier_ratio),
      DYN_FIELD("ground", "max_tilt", ground.max_tilt),
      DYN_FIELD("ground", "min_low_points", ground.min_low_points),
      DYN_FIELD("ground", "seed", ground.seed),
  };
  return table;
}

#undef DYN_FIELD

const Field& lookup(const std::string& section, const std::string& key)
{
  for (const auto& f : fields())
    if (f.section == section && f.key == key)
      return f;
  throw ConfigError("unknown configuration key '" + section + "." + key + "'");
}

void require(bool ok, const std::string& what)
{
  if (!ok)
    throw ConfigError(what);
}

}  // namespace

void PipelineConfig::validate() const
{
  sensor.validate();
  build_kernel(kernel_a, kernel_b, sigma_m, sigma_n);
  require(2 * kernel_a + 1 <= sensor.width && 2 * kernel_b + 1 <= sensor.height,
          "foreground kernel is larger than the image");
  require(std::isfinite(theta), "foreground.theta must be finite");

  require(features.max_count > 0, "features.max_count must be positive");
  require(features.tile_size > 0, "features.tile_size must be positive");
  require(features.per_tile > 0, "features.per_tile must be positive");
  require(features.fast_threshold > 0 && features.fast_threshold < 256, "features.fast_threshold must be in 1..255");
  require(features.patch_radius > 0 && 2 * features.patch_radius + 1 <= sensor.height,
          "features.patch_radius must be positive and fit the image height");
  require(features.min_corners >= 3, "features.min_corners must be at least 3");
  require(features.ratio > 0.0 && features.ratio <= 1.0, "features.ratio must be in (0, 1]");
  require(features.max_distance > 0 && features.max_distance <= 256, "features.max_distance must be in 1..256");

  require(ransac.inlier_threshold > 0.0, "ransac.inlier_threshold must be positive");
  require(ransac.iterations > 0, "ransac.iterations must be positive");
  require(ransac.min_inlier_ratio >= 0.0 && ransac.min_inlier_ratio <= 1.0,
          "ransac.min_inlier_ratio must be in [0, 1]");

  require(clustering.eps_xy > 0.0 && clustering.eps_z > 0.0, "clustering eps values must be positive");
  require(clustering.min_points >= 1, "clustering.min_points must be at least 1");
  require(clustering.range_scale > 0.0, "clustering.range_scale must be positive");

  require(d_max > 0.0, "association.d_max must be positive");

  require(dynamics.window >= 2, "dynamics.window must be at least 2");
  require(dynamics.eps_d > 0.0, "dynamics.eps_d must be positive");
  require(dynamics.eps_o > 0.0 && dynamics.eps_o <= 1.0, "dynamics.eps_o must be in (0, 1]");
  require(dynamics.eps_theta > 0.0 && dynamics.eps_theta <= std::numbers::pi / 2,
          "dynamics.eps_theta must be in (0, pi/2]");

  require(dynamics.occlusion_margin >= 0.0, "dynamics.occlusion_margin must be non-negative");
  require(dynamics.persistence_ratio > 0.0, "dynamics.persistence_ratio must be positive");
  require(dynamics.persistence_tolerance > 0.0, "dynamics.persistence_tolerance must be positive");
  require(grow.eps > 0.0, "segmentation.grow_eps must be positive");
  require(grow.max_points >= 1, "segmentation.max_points must be at least 1");
  require(snap_radius >= 0, "segmentation.snap_radius must be non-negative");
  require(ground.grow_tolerance >= 0.0, "segmentation.plane_tolerance must be non-negative");

  require(ground.iterations > 0, "ground.iterations must be positive");
  require(ground.fit_tolerance > 0.0, "ground.fit_tolerance must be positive");
  require(ground.low_fraction > 0.0 && ground.low_fraction <= 1.0, "ground.low_fraction must be in (0, 1]");
  require(ground.min_inlier_ratio >= 0.0 && ground.min_inlier_ratio <= 1.0,
          "ground.min_inlier_ratio must be in [0, 1]");
  require(ground.max_tilt > 0.0 && ground.max_tilt <= std::numbers::pi / 2, "ground.max_tilt must be in (0, pi/2]");
}

void apply_override(PipelineConfig& config, const std::string& assignment)
{
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  lookup(section, key).set(config, trim(assignment.substr(eq + 1)));
}

PipelineConfig parse_config(const std::string& ini, const std::vector<std::string>& overrides)
{
  boost::property_tree::ptree tree;
  std::istringstream in(ini);
  try
  {
    boost::property_tree::ini_parser::read_ini(in, tree);
  }
  catch (const boost::property_tree::ini_parser_error& e)
  {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  PipelineConfig config;
  for (const auto& [section, children] : tree)
  {
    if (children.empty())
      throw ConfigError("key '" + section + "' is outside any section");
    for (const auto& [key, node] : children)
      lookup(section, key).set(config, node.data());
  }
  for (const auto& o : overrides)
    apply_override(config, o);
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::vector<std::string> config_keys()
{
  std::vector<std::string> keys;
  for (const auto& f : fields())
    keys.push_back(f.name());
  return keys;
}

std::string to_ini(const PipelineConfig& config)
{
  std::string out;
  std::string section;
  for (const auto& f : fields())
  {
    if (f.section != section)
    {
      if (!section.empty())
        out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace dynoscan
