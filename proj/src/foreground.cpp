#include "dynoscan/foreground.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dynoscan/errors.hpp"

namespace dynoscan {

Kernel Kernel::uniform(int a, int b)
{
  if (a < 0 || b < 0)
    throw ConfigError("kernel half-widths must be non-negative");
  Kernel k;
  k.a = a;
  k.b = b;
  const std::size_t n = static_cast<std::size_t>(2 * a + 1) * (2 * b + 1);
  k.weights.assign(n, 1.0 / static_cast<double>(n));
  return k;
}

GaussianKernel build_kernel(int a, int b, double sigma_m, double sigma_n)
{
  if (b < 1 || a <= b)
    throw ConfigError("gaussian kernel must be flat: a > b >= 1");
  if (!(sigma_m > 0.0) || !(sigma_n > 0.0))
    throw ConfigError("gaussian kernel sigmas must be positive");

  GaussianKernel k;
  k.a = a;
  k.b = b;
  k.sigma_m = sigma_m;
  k.sigma_n = sigma_n;
  k.weights.reserve(static_cast<std::size_t>(2 * a + 1) * (2 * b + 1));
  for (int n = -b; n <= b; ++n)
    for (int m = -a; m <= a; ++m)
      k.weights.push_back(std::exp(-(m * m / (2.0 * sigma_m * sigma_m) + n * n / (2.0 * sigma_n * sigma_n))));

  // The 1/(2 pi sigma_m sigma_n) prefactor cancels in the renormalization.
  const double sum = std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
  for (double& w : k.weights)
    w /= sum;
  return k;
}

std::vector<double> convolve(const IntensityImage& image, const Kernel& kernel)
{
  const int w = image.width();
  const int h = image.height();
  if (kernel.columns() > w || kernel.rows() > h)
    throw ConfigError("kernel larger than image");

  // Source values with empty pixels zeroed.
  std::vector<double> f(image.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = image.occupied(i) ? image.intensity(i) : 0.0;

  std::vector<double> out(image.size(), 0.0);
  std::vector<int> col(static_cast<std::size_t>(w) + 2 * kernel.a);
  for (int x = -kernel.a; x < w + kernel.a; ++x)
    col[static_cast<std::size_t>(x + kernel.a)] = ((x % w) + w) % w;

  for (int v = 0; v < h; ++v)
  {
    double* dst = &out[static_cast<std::size_t>(v) * w];
    for (int n = -kernel.b; n <= kernel.b; ++n)
    {
      const int src_row = std::clamp(v - n, 0, h - 1);
      const double* src = &f[static_cast<std::size_t>(src_row) * w];
      for (int m = -kernel.a; m <= kernel.a; ++m)
      {
        const double g = kernel.at(m, n);
        // f(u - m): shift index into the padded column table
        const int* cols = &col[static_cast<std::size_t>(kernel.a - m)];
        for (int u = 0; u < w; ++u)
          dst[u] += g * src[cols[u]];
      }
    }
  }
  return out;
}

std::vector<double> difference_image(const IntensityImage& image, const Kernel& kernel)
{
  std::vector<double> diff = convolve(image, kernel);
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = image.occupied(i) ? image.intensity(i) - diff[i] : 0.0;
  return diff;
}

ForegroundSet extract_foreground(const PointFrame& frame, const IntensityImage& image,
                                 const Kernel& kernel, double theta)
{
  if (!(theta >= 0.0))
    throw ConfigError("foreground threshold must be non-negative");
  const std::vector<double> diff = difference_image(image, kernel);

  ForegroundSet fg;
  fg.width = image.width();
  fg.height = image.height();
  fg.mask.assign(image.size(), 0);
  for (std::size_t i = 0; i < image.size(); ++i)
  {
    if (!image.occupied(i) || !(diff[i] > theta))
      continue;
    fg.mask[i] = 1;
    const std::uint32_t src = image.source_index(i);
    fg.points.push_back(ForegroundPoint{image.pixel(i), src, frame.points.at(src)});
  }
  return fg;
}

}  // namespace dynoscan
