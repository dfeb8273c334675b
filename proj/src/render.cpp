#include "dynoscan/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <zlib.h>

#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

void put_be32(std::string& out, std::uint32_t v)
{
  out += static_cast<char>(v >> 24);
  out += static_cast<char>(v >> 16);
  out += static_cast<char>(v >> 8);
  out += static_cast<char>(v);
}

void png_chunk(std::string& out, const char* type, const std::string& data)
{
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::string body = std::string(type, 4) + data;
  out += body;
  put_be32(out, static_cast<std::uint32_t>(
                  crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace

std::string encode_pgm(std::span<const std::uint8_t> gray, int width, int height)
{
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
  return out;
}

std::string encode_ppm(std::span<const std::uint8_t> rgb, int width, int height)
{
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

std::string encode_png_gray(std::span<const std::uint8_t> gray, int width, int height)
{
  std::string raw;
  raw.reserve(static_cast<std::size_t>(width + 1) * height);
  for (int v = 0; v < height; ++v)
  {
    raw += '\0';  // filter: none
    raw.append(reinterpret_cast<const char*>(gray.data()) + static_cast<std::size_t>(v) * width,
               static_cast<std::size_t>(width));
  }
  uLongf size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &size, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error("zlib compression failed");
  packed.resize(size);

  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(width));
  put_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr += '\x08';  // bit depth
  ihdr += '\x00';  // grayscale
  ihdr += std::string(3, '\0');

  std::string out("\x89PNG\r\n\x1a\n", 8);
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", packed);
  png_chunk(out, "IEND", "");
  return out;
}

std::vector<std::uint8_t> overlay_rgb(const IntensityImage& image, const DynamicLabel& label)
{
  const auto gray = normalize_to_8bit(image);
  std::vector<std::uint8_t> rgb(gray.size() * 3);
  for (std::size_t i = 0; i < gray.size(); ++i)
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = gray[i];
  for (std::uint32_t idx : label.idx)
  {
    if (idx >= gray.size())
      continue;
    rgb[3 * idx] = 255;
    rgb[3 * idx + 1] = 0;
    rgb[3 * idx + 2] = 0;
  }
  return rgb;
}

std::string dynamic_points_text(const IntensityImage& image, const PointFrame& frame, const DynamicLabel& label)
{
  std::string out;
  char buf[96];
  for (std::uint32_t idx : label.idx)
  {
    if (idx >= image.size() || !image.occupied(idx))
      continue;
    const Point3& p = frame.points[image.source_index(idx)];
    std::snprintf(buf, sizeof(buf), "%.4f %.4f %.4f\n", p.x, p.y, p.z);
    out += buf;
  }
  return out;
}

std::vector<std::uint8_t> mask_gray(const ForegroundSet& foreground)
{
  std::vector<std::uint8_t> out(foreground.mask.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = foreground.mask[i] ? 255 : 0;
  return out;
}

std::vector<std::uint8_t> difference_gray(std::span<const double> diff)
{
  double peak = 0.0;
  for (double d : diff)
    peak = std::max(peak, std::abs(d));
  std::vector<std::uint8_t> out(diff.size(), 128);
  if (peak == 0.0)
    return out;
  for (std::size_t i = 0; i < diff.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(127.5 + 127.5 * diff[i] / peak), 0L, 255L));
  return out;
}

std::size_t blob_count(const DynamicLabel& label, int width, int height, std::size_t min_pixels)
{
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<char> on(n, 0);
  for (std::uint32_t idx : label.idx)
    if (idx < n)
      on[idx] = 1;
  std::size_t blobs = 0;
  std::vector<std::size_t> stack;
  for (std::uint32_t start : label.idx)
  {
    if (start >= n || on[start] != 1)
      continue;
    std::size_t size = 0;
    on[start] = 2;
    stack.assign(1, start);
    while (!stack.empty())
    {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const int cu = static_cast<int>(cur % width);
      const int cv = static_cast<int>(cur / width);
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du)
        {
          const int v = cv + dv;
          if (v < 0 || v >= height)
            continue;
          const std::size_t nb = static_cast<std::size_t>(v) * width + (cu + du + width) % width;
          if (on[nb] == 1)
          {
            on[nb] = 2;
            stack.push_back(nb);
          }
        }
    }
    if (size >= min_pixels)
      ++blobs;
  }
  return blobs;
}

}  // namespace dynoscan
