#include "dynoscan/frame_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynoscan/errors.hpp"

namespace dynoscan {

void SensorModel::validate() const
{
  if (width < 8 || height < 2)
    throw ConfigError("sensor: width must be >= 8 and height >= 2");
  if (!(beta_fov > 0.0 && beta_fov <= std::numbers::pi))
    throw ConfigError("sensor: beta_fov must lie in (0, pi]");
  if (!(beta_up < std::numbers::pi / 2.0))
    throw ConfigError("sensor: beta_up must be below pi/2");
  if (!(rate_hz > 0.0))
    throw ConfigError("sensor: rate_hz must be positive");
}

IntensityImage::IntensityImage(int width, int height)
  : width_(width), height_(height),
    intensity_(static_cast<std::size_t>(width) * height, 0.0),
    range_(static_cast<std::size_t>(width) * height, 0.0),
    source_(static_cast<std::size_t>(width) * height, kEmpty)
{
}

void IntensityImage::set(std::size_t index, double intensity, double range, std::uint32_t source)
{
  intensity_[index] = intensity;
  range_[index] = range;
  source_[index] = source;
}

std::size_t IntensityImage::occupied_count() const
{
  return static_cast<std::size_t>(
    std::count_if(source_.begin(), source_.end(), [](std::uint32_t s) { return s != kEmpty; }));
}

std::optional<Pixel> pixel_of(const Eigen::Vector3d& p, const SensorModel& sensor)
{
  const double r = p.norm();
  if (!(r > 0.0) || !std::isfinite(r))
    return std::nullopt;

  const double azimuth = std::atan2(p.y(), p.x());
  const double elevation = std::asin(std::clamp(p.z() / r, -1.0, 1.0));

  const double fu = (azimuth + std::numbers::pi) / (2.0 * std::numbers::pi) * sensor.width;
  const double fv = (sensor.beta_up - elevation) / sensor.beta_fov * sensor.height;
  const auto v = static_cast<long>(std::floor(fv));
  if (v < 0 || v >= sensor.height)
    return std::nullopt;
  long u = static_cast<long>(std::floor(fu)) % sensor.width;
  if (u < 0)
    u += sensor.width;
  return Pixel{static_cast<int>(u), static_cast<int>(v)};
}

IntensityImage project(const PointFrame& frame, const SensorModel& sensor)
{
  if (frame.points.empty())
    throw EmptyInputError("project: frame has no points");
  sensor.validate();

  IntensityImage image(sensor.width, sensor.height);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < frame.points.size(); ++i)
  {
    const Point3& pt = frame.points[i];
    const Eigen::Vector3d p = pt.pos();
    const auto px = pixel_of(p, sensor);
    if (!px)
    {
      ++skipped;
      continue;
    }
    const std::size_t idx = image.index(px->u, px->v);
    const double r = p.norm();
    if (image.occupied(idx) && image.range(idx) <= r)
      continue;
    image.set(idx, pt.intensity, r, static_cast<std::uint32_t>(i));
  }
  image.set_skipped(skipped);
  return image;
}

Point3 unproject(int u, int v, double range, const SensorModel& sensor)
{
  if (!(range > 0.0))
    throw DomainError("unproject: range must be positive");
  if (u < 0 || u >= sensor.width || v < 0 || v >= sensor.height)
    throw DomainError("unproject: pixel out of bounds");

  const double azimuth = (u + 0.5) / sensor.width * 2.0 * std::numbers::pi - std::numbers::pi;
  const double elevation = sensor.beta_up - (v + 0.5) / sensor.height * sensor.beta_fov;
  const double c = std::cos(elevation);
  return Point3{static_cast<float>(range * c * std::cos(azimuth)),
                static_cast<float>(range * c * std::sin(azimuth)),
                static_cast<float>(range * std::sin(elevation)), 0.f};
}

std::vector<std::uint8_t> normalize_to_8bit(const IntensityImage& image)
{
  std::vector<std::uint8_t> out(image.size(), 0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < image.size(); ++i)
  {
    if (!image.occupied(i))
      continue;
    lo = std::min(lo, image.intensity(i));
    hi = std::max(hi, image.intensity(i));
  }
  if (!(hi > lo))
    return out;
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < image.size(); ++i)
    if (image.occupied(i))
      out[i] = static_cast<std::uint8_t>(std::lround((image.intensity(i) - lo) * scale));
  return out;
}

}  // namespace dynoscan
