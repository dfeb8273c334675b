#pragma once

#include <cstdint>
#include <vector>

#include "dynoscan/frame_model.hpp"

namespace dynoscan {

/// (2a+1) x (2b+1) convolution kernel; `a` spans image columns, `b` rows.
/// Weights are stored row-major with n in [-b, b] as the row and m in [-a, a] as the column.
struct Kernel
{
  int a = 0;
  int b = 0;
  std::vector<double> weights;

  double at(int m, int n) const { return weights[static_cast<std::size_t>(n + b) * (2 * a + 1) + (m + a)]; }
  int columns() const { return 2 * a + 1; }
  int rows() const { return 2 * b + 1; }

  /// Box kernel of equal weights summing to one.
  static Kernel uniform(int a, int b);
};

struct GaussianKernel : Kernel
{
  double sigma_m = 0.0;
  double sigma_n = 0.0;
};

/// Sampled anisotropic Gaussian, renormalized to unit sum. Requires a > b >= 1.
GaussianKernel build_kernel(int a, int b, double sigma_m, double sigma_n);

/// Blurred intensity grid, same layout as the image. Columns wrap at the
/// azimuth seam, rows clamp to the edge, empty pixels contribute zero.
std::vector<double> convolve(const IntensityImage& image, const Kernel& kernel);

/// f - h for every pixel (zero for empty pixels).
std::vector<double> difference_image(const IntensityImage& image, const Kernel& kernel);

struct ForegroundPoint
{
  Pixel pixel;
  std::uint32_t source = 0;  // index into the originating frame
  Point3 point;
};

struct ForegroundSet
{
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  // 1 where f - h > theta on an occupied pixel
  std::vector<ForegroundPoint> points;

  std::size_t masked_count() const { return points.size(); }
};

/// Binarized f - h. Points are gathered from `frame` via the image's source indices.
ForegroundSet extract_foreground(const PointFrame& frame, const IntensityImage& image,
                                 const Kernel& kernel, double theta);

}  // namespace dynoscan
