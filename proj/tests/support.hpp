#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "dynoscan/frame_model.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return DYNOSCAN_DATA_DIR; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir
{
public:
  explicit TempDir(const std::string& tag)
  {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dynoscan_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Image and matching frame where pixel i maps to point i; a share of pixels is left empty.
struct GridFixture
{
  dynoscan::IntensityImage image;
  dynoscan::PointFrame frame;
};

inline GridFixture random_grid(std::mt19937_64& rng, int w, int h, double empty_share, double extent)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GridFixture fx{dynoscan::IntensityImage(w, h), {}};
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      if (unit(rng) < empty_share)
        continue;
      dynoscan::Point3 p;
      p.x = static_cast<float>(extent * unit(rng));
      p.y = static_cast<float>(extent * unit(rng));
      p.z = static_cast<float>(extent * unit(rng));
      p.intensity = static_cast<float>(1000.0 * unit(rng));
      const auto src = static_cast<std::uint32_t>(fx.frame.points.size());
      fx.frame.points.push_back(p);
      fx.image.set(fx.image.index(u, v), p.intensity, p.pos().norm(), src);
    }
  return fx;
}

}  // namespace testing_support
