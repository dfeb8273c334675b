#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynoscan/foreground.hpp"
#include "dynoscan/frame_model.hpp"
#include "dynoscan/segmentation.hpp"

namespace dynoscan {

/// Binary PGM (P5) / PPM (P6) documents.
std::string encode_pgm(std::span<const std::uint8_t> gray, int width, int height);
std::string encode_ppm(std::span<const std::uint8_t> rgb, int width, int height);

/// 8-bit grayscale PNG (zlib-compressed, no interlace).
std::string encode_png_gray(std::span<const std::uint8_t> gray, int width, int height);

/// Grayscale intensity as RGB with label pixels painted red.
std::vector<std::uint8_t> overlay_rgb(const IntensityImage& image, const DynamicLabel& label);

/// `x y z` per labeled pixel, in index order.
std::string dynamic_points_text(const IntensityImage& image, const PointFrame& frame, const DynamicLabel& label);

/// 0 / 255 foreground mask.
std::vector<std::uint8_t> mask_gray(const ForegroundSet& foreground);
/// f - h mapped linearly so that 0 is mid-gray and the largest magnitude saturates.
std::vector<std::uint8_t> difference_gray(std::span<const double> diff);

/// 8-connected components among label pixels, columns wrapping.
std::size_t blob_count(const DynamicLabel& label, int width, int height, std::size_t min_pixels = 1);

}  // namespace dynoscan
