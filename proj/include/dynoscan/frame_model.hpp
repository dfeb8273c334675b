#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace dynoscan {

/// One LiDAR return in the sensor frame (meters, z up) with its raw signal.
struct Point3
{
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;

  Eigen::Vector3d pos() const { return {x, y, z}; }
  bool operator==(const Point3&) const = default;
};

/// Spherical-projection geometry of a spinning sensor.
struct SensorModel
{
  int width = 1024;
  int height = 64;
  double beta_up = std::numbers::pi / 4.0;   // upper elevation bound [rad]
  double beta_fov = std::numbers::pi / 2.0;  // total vertical field of view [rad]
  double rate_hz = 10.0;

  /// Throws ConfigError when the geometry is unusable.
  void validate() const;
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool operator==(const SensorModel&) const = default;
};

struct PointFrame
{
  double timestamp = 0.0;
  std::vector<Point3> points;

  bool operator==(const PointFrame&) const = default;
};

struct Pixel
{
  int u = 0;
  int v = 0;
  bool operator==(const Pixel&) const = default;
};

/// w x h grid produced by spherical projection. Row-major, index = v * w + u.
class IntensityImage
{
public:
  static constexpr std::uint32_t kEmpty = 0xFFFFFFFFu;

  IntensityImage() = default;
  IntensityImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return intensity_.size(); }

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }
  Pixel pixel(std::size_t index) const
  {
    return {static_cast<int>(index % width_), static_cast<int>(index / width_)};
  }
  bool occupied(std::size_t index) const { return source_[index] != kEmpty; }
  bool occupied(int u, int v) const { return occupied(index(u, v)); }

  double intensity(std::size_t index) const { return intensity_[index]; }
  double range(std::size_t index) const { return range_[index]; }
  std::uint32_t source_index(std::size_t index) const { return source_[index]; }

  const std::vector<double>& intensity() const { return intensity_; }
  const std::vector<double>& range() const { return range_; }
  const std::vector<std::uint32_t>& source_index() const { return source_; }

  void set(std::size_t index, double intensity, double range, std::uint32_t source);

  std::size_t occupied_count() const;
  /// Points that fell outside the vertical field of view or had zero/non-finite range.
  std::size_t skipped() const { return skipped_; }
  void set_skipped(std::size_t n) { skipped_ = n; }

  bool operator==(const IntensityImage&) const = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> intensity_;
  std::vector<double> range_;
  std::vector<std::uint32_t> source_;
  std::size_t skipped_ = 0;
};

/// Pixel that a sensor-frame point falls into, or nullopt when outside the
/// vertical field of view. Column wraps modulo the image width.
std::optional<Pixel> pixel_of(const Eigen::Vector3d& p, const SensorModel& sensor);

/// Spherical projection. On collisions the nearer point wins.
IntensityImage project(const PointFrame& frame, const SensorModel& sensor);

/// Point at the pixel-center direction with the given range.
Point3 unproject(int u, int v, double range, const SensorModel& sensor);

/// Per-frame min-max normalization of occupied pixels to 8 bit (empty = 0).
std::vector<std::uint8_t> normalize_to_8bit(const IntensityImage& image);

}  // namespace dynoscan
